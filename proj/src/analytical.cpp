#include "jdpinn/analytical.hpp"

#include <cmath>
#include <numbers>

namespace jdpinn {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double black_scholes(OptionKind kind, double spot, double strike, double tau, double rate, double sigma) {
  if (tau <= 0.0) return payoff(kind, strike, spot);
  const double sd = sigma * std::sqrt(tau);
  const double d1 = (std::log(spot / strike) + (rate + 0.5 * sigma * sigma) * tau) / sd;
  const double d2 = d1 - sd;
  const double df = std::exp(-rate * tau);
  if (kind == OptionKind::Call) return spot * norm_cdf(d1) - strike * df * norm_cdf(d2);
  return strike * df * norm_cdf(-d2) - spot * norm_cdf(-d1);
}

double jump_compensator(const MertonParams& params) {
  return std::expm1(params.mu_y + 0.5 * params.sigma_y * params.sigma_y);
}

double risk_neutral_drift(const MertonParams& params, double rate) {
  return rate - params.lambda * jump_compensator(params);
}

double poisson_weight(double mean, int n) {
  if (mean <= 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(-mean + n * std::log(mean) - std::lgamma(n + 1.0));
}

SeriesTermParams series_term(const MertonParams& params, const OptionSpec& spec, int n) {
  const double T = spec.tau;
  SeriesTermParams t;
  t.n = n;
  t.k_bar = jump_compensator(params);
  t.sigma_n = std::sqrt(params.sigma * params.sigma + n * params.sigma_y * params.sigma_y / T);
  const double sd = t.sigma_n * std::sqrt(T);
  t.d1_n = (std::log(spec.spot / spec.strike) +
            (spec.rate - params.lambda * t.k_bar + n * params.mu_y + 0.5 * t.sigma_n * t.sigma_n) * T) /
           sd;
  t.d2_n = t.d1_n - sd;
  t.s0_n = spec.spot * std::exp(n * (params.mu_y + 0.5 * params.sigma_y * params.sigma_y));
  return t;
}

namespace {

void check_pricing_args(const MertonParams& params, const OptionSpec& spec, int n_terms) {
  params.validate();
  spec.validate();
  if (spec.style != ExerciseStyle::European)
    throw ValidationError("closed-form series prices European options only");
  if (n_terms < 1) throw ValidationError("n_terms must be >= 1");
}

}  // namespace

double price_european_paper(const MertonParams& params, const OptionSpec& spec, int n_terms) {
  check_pricing_args(params, spec, n_terms);
  if (spec.tau == 0.0) return payoff(spec, spec.spot);
  const double lt = params.lambda * spec.tau;
  const double disc_strike = spec.strike * std::exp(-spec.rate * spec.tau);
  double price = 0.0;
  for (int n = 0; n <= n_terms; ++n) {
    const double w = poisson_weight(lt, n);
    if (w == 0.0) break;
    const auto t = series_term(params, spec, n);
    const double spot_n = spec.spot * std::exp(n * params.mu_y);
    const double term = spec.kind == OptionKind::Call
                            ? spot_n * norm_cdf(t.d1_n) - disc_strike * norm_cdf(t.d2_n)
                            : disc_strike * norm_cdf(-t.d2_n) - spot_n * norm_cdf(-t.d1_n);
    price += w * term;
  }
  return price;
}

double price_european_canonical(const MertonParams& params, const OptionSpec& spec, int n_terms) {
  check_pricing_args(params, spec, n_terms);
  if (spec.tau == 0.0) return payoff(spec, spec.spot);
  const double T = spec.tau;
  const double lt = params.lambda * T;
  const double drift = risk_neutral_drift(params, spec.rate);
  const double df = std::exp(-spec.rate * T);
  double price = 0.0;
  for (int n = 0; n <= n_terms; ++n) {
    const double w = poisson_weight(lt, n);
    if (w == 0.0) break;
    const auto t = series_term(params, spec, n);
    const double forward = t.s0_n * std::exp(drift * T);
    const double sd = t.sigma_n * std::sqrt(T);
    const double d1 = (std::log(forward / spec.strike) + 0.5 * sd * sd) / sd;
    const double d2 = d1 - sd;
    const double term = spec.kind == OptionKind::Call
                            ? df * (forward * norm_cdf(d1) - spec.strike * norm_cdf(d2))
                            : df * (spec.strike * norm_cdf(-d2) - forward * norm_cdf(-d1));
    price += w * term;
  }
  return price;
}

}  // namespace jdpinn
