#include "jdpinn/anneal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "jdpinn/core.hpp"
#include "jdpinn/rng.hpp"

namespace jdpinn {

void Box::validate() const {
  if (lower.size() != upper.size() || lower.empty()) {
    throw ValidationError("Box: lower/upper must be non-empty and of equal size");
  }
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i])) {
      throw ValidationError("Box: coordinate " + std::to_string(i) + " requires finite lower < upper");
    }
  }
}

bool Box::contains(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  }
  return true;
}

namespace {

double safe_eval(const Objective& f, std::span<const double> x) {
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

void project(const Box& box, std::vector<double>& x) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], box.lower[i], box.upper[i]);
}

}  // namespace

LocalResult nelder_mead_bounded(const Objective& f, const Box& box, std::span<const double> x0,
                                const NelderMeadOptions& opts) {
  const std::size_t n = box.dim();
  std::vector<std::vector<double>> simplex(n + 1, std::vector<double>(x0.begin(), x0.end()));
  project(box, simplex[0]);
  for (std::size_t i = 0; i < n; ++i) {
    auto& v = simplex[i + 1];
    v = simplex[0];
    const double step = opts.initial_step * (box.upper[i] - box.lower[i]);
    v[i] = (v[i] + step <= box.upper[i]) ? v[i] + step : v[i] - step;
    project(box, v);
  }
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i <= n; ++i) fv[i] = safe_eval(f, simplex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    double xspread = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t d = 0; d < n; ++d) {
        xspread = std::max(xspread, std::abs(simplex[i][d] - simplex[best][d]));
      }
    }
    if (xspread <= opts.xtol && std::abs(fv[worst] - fv[best]) <= opts.ftol) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[i][d] / static_cast<double>(n);
    }
    const auto blend = [&](double t, std::vector<double>& out) {
      for (std::size_t d = 0; d < n; ++d) out[d] = centroid[d] + t * (simplex[worst][d] - centroid[d]);
      project(box, out);
    };

    blend(-1.0, trial);
    const double fr = safe_eval(f, trial);
    if (fr < fv[best]) {
      blend(-2.0, trial2);
      const double fe = safe_eval(f, trial2);
      if (fe < fr) {
        simplex[worst] = trial2;
        fv[worst] = fe;
      } else {
        simplex[worst] = trial;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = trial;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    blend(outside ? -0.5 : 0.5, trial2);
    const double fc = safe_eval(f, trial2);
    if (fc < std::min(fr, fv[worst])) {
      simplex[worst] = trial2;
      fv[worst] = fc;
      continue;
    }
    // shrink towards the best vertex
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t d = 0; d < n; ++d) {
        simplex[i][d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
      }
      fv[i] = safe_eval(f, simplex[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  return {simplex[best], fv[best], it};
}

namespace {

constexpr double kTailLimit = 1e8;
constexpr double kMinVisitBound = 1e-10;

/// Tsallis-Stariolo visiting distribution.
class Visitor {
 public:
  Visitor(const Box& box, double qv, Rng& rng) : box_(box), qv_(qv), rng_(rng) {
    const double pi = std::numbers::pi;
    const double factor2 = std::exp((4.0 - qv) * std::log(qv - 1.0));
    const double factor3 = std::exp((2.0 - qv) * std::log(2.0) / (qv - 1.0));
    factor4_p_ = std::sqrt(pi) * factor2 / (factor3 * (3.0 - qv));
    const double factor5 = 1.0 / (qv - 1.0) - 0.5;
    const double d1 = 2.0 - factor5;
    factor6_ = pi * (1.0 - factor5) / std::sin(pi * (1.0 - factor5)) / std::exp(std::lgamma(d1));
  }

  /// Steps below dim move every coordinate at once; later steps move one.
  std::vector<double> visit(const std::vector<double>& x, std::size_t step, double temperature) {
    const std::size_t dim = x.size();
    std::vector<double> out = x;
    if (step < dim) {
      const double upper_sample = rng_.uniform();
      const double lower_sample = rng_.uniform();
      for (std::size_t i = 0; i < dim; ++i) {
        double v = draw(temperature);
        if (v > kTailLimit) {
          v = kTailLimit * upper_sample;
        } else if (v < -kTailLimit) {
          v = -kTailLimit * lower_sample;
        }
        out[i] = wrap(i, x[i] + v);
      }
    } else {
      const std::size_t i = step - dim;
      double v = draw(temperature);
      if (v > kTailLimit) {
        v = kTailLimit * rng_.uniform();
      } else if (v < -kTailLimit) {
        v = -kTailLimit * rng_.uniform();
      }
      out[i] = wrap(i, x[i] + v);
    }
    return out;
  }

 private:
  double draw(double temperature) {
    const double x = rng_.normal();
    const double y = rng_.normal();
    const double factor1 = std::exp(std::log(temperature) / (qv_ - 1.0));
    const double factor4 = factor4_p_ * factor1;
    const double sigmax = std::exp(-(qv_ - 1.0) * std::log(factor6_ / factor4) / (3.0 - qv_));
    const double den = std::exp((qv_ - 1.0) * std::log(std::abs(y)) / (3.0 - qv_));
    return x * sigmax / den;
  }

  double wrap(std::size_t i, double v) const {
    const double lo = box_.lower[i];
    const double range = box_.upper[i] - lo;
    const double a = v - lo;
    const double b = std::fmod(a, range) + range;
    double out = std::fmod(b, range) + lo;
    if (std::abs(out - lo) < kMinVisitBound) out += kMinVisitBound;
    return out;
  }

  const Box& box_;
  double qv_;
  Rng& rng_;
  double factor4_p_ = 0.0;
  double factor6_ = 0.0;
};

struct StopRequest {};

}  // namespace

AnnealResult dual_annealing(const Objective& f, const Box& box, const AnnealOptions& opts,
                            std::optional<std::vector<double>> x0) {
  box.validate();
  if (opts.max_iters < 1) throw ValidationError("dual_annealing: max_iters must be >= 1");
  if (!(opts.visiting_param > 1.0 && opts.visiting_param < 3.0)) {
    throw ValidationError("dual_annealing: visiting_param must be in (1, 3)");
  }
  if (!(opts.restart_temp_ratio > 0.0 && opts.restart_temp_ratio < 1.0)) {
    throw ValidationError("dual_annealing: restart_temp_ratio must be in (0, 1)");
  }
  if (!(opts.initial_temp > 0.0)) throw ValidationError("dual_annealing: initial_temp must be > 0");
  if (x0 && !box.contains(*x0)) throw ValidationError("dual_annealing: x0 outside bounds");

  const std::size_t dim = box.dim();
  Rng rng(opts.seed);
  AnnealResult result;

  std::vector<double> best_x;
  double best_e = std::numeric_limits<double>::infinity();

  const auto evaluate = [&](const std::vector<double>& x) {
    if (result.evaluations >= opts.max_evals) throw StopRequest{};
    ++result.evaluations;
    const double e = safe_eval(f, x);
    if (e < best_e) {
      best_e = e;
      best_x = x;
    }
    return e;
  };
  const Objective counted = [&](std::span<const double> x) {
    return evaluate(std::vector<double>(x.begin(), x.end()));
  };

  std::vector<double> current(dim);
  double current_e = 0.0;
  const auto random_point = [&] {
    for (std::size_t i = 0; i < dim; ++i) current[i] = rng.uniform(box.lower[i], box.upper[i]);
  };
  const auto reset = [&](bool use_x0) {
    if (use_x0 && x0) {
      current = *x0;
    } else {
      random_point();
    }
    for (int attempt = 0;; ++attempt) {
      current_e = evaluate(current);
      if (std::isfinite(current_e)) break;
      if (attempt >= 1000) throw std::runtime_error("dual_annealing: objective non-finite everywhere sampled");
      random_point();
    }
  };

  NelderMeadOptions ls_opts;
  ls_opts.max_iters = std::max(100, static_cast<int>(40 * dim));
  const auto local_search = [&](const std::vector<double>& from, double from_e) -> std::pair<std::vector<double>, double> {
    auto r = nelder_mead_bounded(counted, box, from, ls_opts);
    if (std::isfinite(r.value) && r.value < from_e && box.contains(r.x)) return {r.x, r.value};
    return {from, from_e};
  };

  Visitor visitor(box, opts.visiting_param, rng);
  const double qv = opts.visiting_param;
  const double qa = opts.acceptance_param;
  const double t1 = std::exp((qv - 1.0) * std::log(2.0)) - 1.0;
  const double temperature_restart = opts.initial_temp * opts.restart_temp_ratio;

  try {
    reset(true);
    std::vector<double> xmin = current;
    double emin = current_e;
    int not_improved = 0;
    int not_improved_max = 1000;
    double cycle_start_best = best_e;
    bool stop = false;

    while (!stop) {
      for (int i = 0;; ++i) {
        if (result.iterations >= opts.max_iters) {
          result.message = "maximum iterations reached";
          stop = true;
          break;
        }
        const double s = static_cast<double>(i) + 2.0;
        const double t2 = std::exp((qv - 1.0) * std::log(s)) - 1.0;
        const double temperature = opts.initial_temp * t1 / t2;
        if (temperature < temperature_restart) {
          ++result.restarts;
          if (cycle_start_best - best_e < opts.tolerance) {
            result.message = "improvement per reannealing cycle below tolerance";
            stop = true;
            break;
          }
          cycle_start_best = best_e;
          reset(false);
          break;
        }

        // strategy chain
        const double temperature_step = temperature / static_cast<double>(i + 1);
        ++not_improved;
        bool improved = (i == 0);
        if (i == 0) not_improved = 0;
        for (std::size_t j = 0; j < 2 * dim; ++j) {
          auto x_visit = visitor.visit(current, j, temperature);
          const double before_best = best_e;
          const double e = evaluate(x_visit);
          if (e < current_e) {
            current = std::move(x_visit);
            current_e = e;
            if (opts.record_accepted) result.accepted.push_back(e);
            if (e < before_best) {
              improved = true;
              not_improved = 0;
            }
          } else {
            const double r = rng.uniform();
            const double pqv_temp = 1.0 - (1.0 - qa) * (e - current_e) / temperature_step;
            const double pqv = pqv_temp > 0.0 ? std::exp(std::log(pqv_temp) / (1.0 - qa)) : 0.0;
            if (r <= pqv) {
              current = std::move(x_visit);
              current_e = e;
              xmin = current;
              if (opts.record_accepted) result.accepted.push_back(e);
            }
            if (not_improved >= not_improved_max && (j == 0 || current_e < emin)) {
              emin = current_e;
              xmin = current;
            }
          }
        }

        if (opts.local_search) {
          if (improved) {
            const auto bx = best_x;
            const double be = best_e;
            auto [lx, le] = local_search(bx, be);
            if (le < be) {
              not_improved = 0;
              current = lx;
              current_e = le;
            }
          }
          if (not_improved >= not_improved_max) {
            auto [lx, le] = local_search(xmin, emin);
            xmin = lx;
            emin = le;
            not_improved = 0;
            not_improved_max = static_cast<int>(dim);
            if (le <= best_e) {
              current = lx;
              current_e = le;
            }
          }
        }
        ++result.iterations;
      }
    }
  } catch (const StopRequest&) {
    result.message = "maximum function evaluations reached";
  }

  result.x = best_x;
  result.value = best_e;
  return result;
}

}  // namespace jdpinn
