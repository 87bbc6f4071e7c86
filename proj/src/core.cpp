#include "jdpinn/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "jdpinn/rng.hpp"

namespace jdpinn {

namespace {

bool finite_all(std::initializer_list<double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

void MertonParams::validate() const {
  if (!finite_all({mu, sigma, lambda, mu_y, sigma_y})) {
    throw ValidationError("MertonParams: all fields must be finite");
  }
  if (!(sigma > 0.0)) throw ValidationError("MertonParams: sigma must be > 0");
  if (!(sigma_y > 0.0)) throw ValidationError("MertonParams: sigma_y must be > 0");
  if (lambda < 0.0) throw ValidationError("MertonParams: lambda must be >= 0");
}

MertonParams MertonParams::from_array(std::span<const double> v) {
  if (v.size() != kSize) throw ValidationError("MertonParams::from_array: expected 5 values");
  return {v[0], v[1], v[2], v[3], v[4]};
}

double Interval::clamp(double v) const {
  if (std::isnan(v)) return low;
  return std::clamp(v, low, high);
}

void ParamBounds::validate() const {
  const auto check = [](const Interval& iv, const char* name) {
    if (!finite_all({iv.low, iv.high}) || !(iv.low < iv.high)) {
      throw ValidationError(std::string("ParamBounds: ") + name + " requires finite low < high");
    }
  };
  check(mu, "mu");
  check(sigma, "sigma");
  check(lambda, "lambda");
  check(mu_y, "mu_y");
  check(sigma_y, "sigma_y");
  check(rate, "rate");
  if (!(sigma.low > 0.0) || !(sigma_y.low > 0.0)) {
    throw ValidationError("ParamBounds: sigma and sigma_y lower bounds must be > 0");
  }
  if (lambda.low < 0.0) throw ValidationError("ParamBounds: lambda lower bound must be >= 0");
}

bool ParamBounds::contains(const MertonParams& p) const {
  return mu.contains(p.mu) && sigma.contains(p.sigma) && lambda.contains(p.lambda) &&
         mu_y.contains(p.mu_y) && sigma_y.contains(p.sigma_y);
}

MertonParams ParamBounds::clamp(const MertonParams& p) const {
  return {mu.clamp(p.mu), sigma.clamp(p.sigma), lambda.clamp(p.lambda), mu_y.clamp(p.mu_y),
          sigma_y.clamp(p.sigma_y)};
}

ParamBounds ParamBounds::around(const MertonParams& p, double width) {
  const double h = 0.5 * width;
  ParamBounds b;
  b.mu = {p.mu - h, p.mu + h};
  b.sigma = {p.sigma - h, p.sigma + h};
  b.lambda = {std::max(0.0, p.lambda - h), std::max(0.0, p.lambda - h) + width};
  b.mu_y = {p.mu_y - h, p.mu_y + h};
  b.sigma_y = {p.sigma_y - h, p.sigma_y + h};
  return b;
}

void OptionSpec::validate() const {
  if (!finite_all({spot, strike, tau, rate})) throw ValidationError("OptionSpec: non-finite field");
  if (!(spot > 0.0)) throw ValidationError("OptionSpec: spot must be > 0");
  if (!(strike > 0.0)) throw ValidationError("OptionSpec: strike must be > 0");
  if (tau < 0.0) throw ValidationError("OptionSpec: tau must be >= 0");
}

double payoff(OptionKind kind, double strike, double s) {
  return kind == OptionKind::Call ? std::max(s - strike, 0.0) : std::max(strike - s, 0.0);
}

double payoff(const OptionSpec& spec, double s) { return payoff(spec.kind, spec.strike, s); }

std::size_t QuoteDataset::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [s](const QuoteRow& r) { return r.split == s; }));
}

std::vector<std::size_t> QuoteDataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].split == s) out.push_back(i);
  }
  return out;
}

QuoteDataset QuoteDataset::select(Split s) const {
  QuoteDataset out;
  for (const auto& r : rows) {
    if (r.split == s) out.rows.push_back(r);
  }
  return out;
}

void QuoteDataset::validate() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    try {
      r.spec.validate();
    } catch (const ValidationError& e) {
      throw ValidationError("row " + std::to_string(i) + ": " + e.what());
    }
    if (!std::isfinite(r.price) || r.price < 0.0) {
      throw ValidationError("row " + std::to_string(i) + ": price must be finite and >= 0");
    }
  }
}

void assign_splits(QuoteDataset& data, double train_frac, double val_frac, std::uint64_t seed) {
  if (train_frac < 0.0 || val_frac < 0.0 || train_frac + val_frac > 1.0) {
    throw ValidationError("assign_splits: fractions must be >= 0 and sum to <= 1");
  }
  const std::size_t n = data.rows.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(val_frac * static_cast<double>(n)));
  for (std::size_t k = 0; k < n; ++k) {
    Split s = Split::Test;
    if (k < n_train) {
      s = Split::Train;
    } else if (k < n_train + n_val) {
      s = Split::Val;
    }
    data.rows[order[k]].split = s;
  }
}

Metrics compute_metrics(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) {
    throw ValidationError("compute_metrics: length mismatch (" + std::to_string(predicted.size()) +
                          " vs " + std::to_string(actual.size()) + ")");
  }
  if (actual.empty()) throw ValidationError("compute_metrics: empty input");
  const auto n = static_cast<double>(actual.size());

  double mean_actual = 0.0;
  double mean_resid = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    mean_actual += actual[i];
    mean_resid += actual[i] - predicted[i];
  }
  mean_actual /= n;
  mean_resid /= n;

  Metrics m;
  double sse = 0.0, sst = 0.0, resid_var = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = actual[i] - predicted[i];
    m.mae += std::abs(e);
    m.max_error = std::max(m.max_error, std::abs(e));
    sse += e * e;
    sst += (actual[i] - mean_actual) * (actual[i] - mean_actual);
    resid_var += (e - mean_resid) * (e - mean_resid);
  }
  if (!(sst > 0.0)) throw ValidationError("compute_metrics: actual values have zero variance");
  m.mae /= n;
  m.mse = sse / n;
  m.rmse = std::sqrt(m.mse);
  m.r2 = 1.0 - sse / sst;
  m.explained_variance = 1.0 - resid_var / sst;
  return m;
}

std::string_view to_string(OptionKind kind) { return kind == OptionKind::Call ? "C" : "P"; }

std::string_view to_string(ExerciseStyle style) {
  return style == ExerciseStyle::European ? "european" : "american";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

OptionKind parse_kind(std::string_view s) {
  if (s == "C" || s == "c" || s == "call" || s == "Call") return OptionKind::Call;
  if (s == "P" || s == "p" || s == "put" || s == "Put") return OptionKind::Put;
  throw ValidationError("unknown option kind '" + std::string(s) + "' (expected C or P)");
}

ExerciseStyle parse_style(std::string_view s) {
  if (s == "european" || s == "European" || s == "E") return ExerciseStyle::European;
  if (s == "american" || s == "American" || s == "A") return ExerciseStyle::American;
  throw ValidationError("unknown exercise style '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw ValidationError("unknown split '" + std::string(s) + "'");
}

std::string params_to_json(const MertonParams& p) {
  nlohmann::ordered_json j;
  j["mu"] = p.mu;
  j["sigma"] = p.sigma;
  j["lambda"] = p.lambda;
  j["mu_y"] = p.mu_y;
  j["sigma_y"] = p.sigma_y;
  return j.dump(2);
}

MertonParams params_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("params JSON: ") + e.what());
  }
  MertonParams p;
  try {
    p.mu = j.at("mu").get<double>();
    p.sigma = j.at("sigma").get<double>();
    p.lambda = j.at("lambda").get<double>();
    p.mu_y = j.at("mu_y").get<double>();
    p.sigma_y = j.at("sigma_y").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("params JSON: ") + e.what());
  }
  p.validate();
  return p;
}

MertonParams read_params_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open params file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return params_from_json(ss.str());
}

void write_params_file(const std::filesystem::path& path, const MertonParams& p) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << params_to_json(p) << '\n';
}

void write_dataset_csv(std::ostream& out, const QuoteDataset& data) {
  out << "underlying,strike,tau,rate,kind,price,split\n";
  out << std::setprecision(17);
  for (const auto& r : data.rows) {
    out << r.spec.spot << ',' << r.spec.strike << ',' << r.spec.tau << ',' << r.spec.rate << ','
        << to_string(r.spec.kind) << ',' << r.price << ',' << to_string(r.split) << '\n';
  }
}

void write_dataset_csv(const std::filesystem::path& path, const QuoteDataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_dataset_csv(out, data);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    fields.emplace_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

double parse_double(std::string_view field) {
  std::string s(field);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ValidationError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw ValidationError("not a number: '" + s + "'");
  return v;
}

}  // namespace jdpinn
