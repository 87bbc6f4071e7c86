#pragma once

#include "jdpinn/core.hpp"

namespace jdpinn {

inline constexpr int kDefaultSeriesTerms = 40;

/// Standard normal CDF through erfc; accurate to ~1e-16 in both tails.
double norm_cdf(double x);
double norm_pdf(double x);

/// Lognormal (Black-Scholes) European price, no dividends.
double black_scholes(OptionKind kind, double spot, double strike, double tau, double rate, double sigma);

/// Expected relative jump size k = E[Y - 1] = exp(mu_y + sigma_y^2 / 2) - 1.
double jump_compensator(const MertonParams& params);

/// Drift under the pricing measure: r - lambda * k.
double risk_neutral_drift(const MertonParams& params, double rate);

/// Quantities of the n-th term of the jump-count expansion.
struct SeriesTermParams {
  int n = 0;
  double sigma_n = 0.0;  ///< sqrt(sigma^2 + n sigma_y^2 / T)
  double k_bar = 0.0;    ///< jump compensator k
  double d1_n = 0.0;     ///< standardized moneyness as used by the paper-variant pricer
  double d2_n = 0.0;
  double s0_n = 0.0;     ///< S exp(n mu_y + n sigma_y^2 / 2)
};

SeriesTermParams series_term(const MertonParams& params, const OptionSpec& spec, int n);

/// Poisson-weighted series in the paper variant: spot term S e^{n mu_y}, and
/// drift (r - lambda k + n mu_y + sigma_n^2 / 2) T inside d1. Returns the
/// payoff when T = 0.
double price_european_paper(const MertonParams& params, const OptionSpec& spec,
                            int n_terms = kDefaultSeriesTerms);

/// Canonical Merton series: conditional on n jumps the terminal price is
/// lognormal with forward S_0^{(n)} e^{(r - lambda k) T} and volatility
/// sigma_n, discounted at r. Agrees with Monte Carlo and the PIDE.
double price_european_canonical(const MertonParams& params, const OptionSpec& spec,
                                int n_terms = kDefaultSeriesTerms);

/// Poisson probability P[N = n] for mean `mean`, computed in log space.
double poisson_weight(double mean, int n);

}  // namespace jdpinn
