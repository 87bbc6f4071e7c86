#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace jdpinn {

/// Raised when caller-supplied data violates a documented precondition.
/// The CLI maps it to exit code 1; every other exception maps to 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class OptionKind { Call, Put };
enum class ExerciseStyle { European, American };

/// Merton jump-diffusion parameters. Rates are per year, volatilities per
/// square-root year, jump sizes are in log units.
struct MertonParams {
  double mu = 0.0;       ///< real-world drift
  double sigma = 0.2;    ///< diffusion volatility
  double lambda = 0.0;   ///< jump intensity
  double mu_y = 0.0;     ///< mean log jump size
  double sigma_y = 0.1;  ///< std of log jump size

  static constexpr std::size_t kSize = 5;

  /// Throws ValidationError unless sigma > 0, sigma_y > 0, lambda >= 0 and
  /// all fields are finite.
  void validate() const;

  std::array<double, kSize> to_array() const { return {mu, sigma, lambda, mu_y, sigma_y}; }
  static MertonParams from_array(std::span<const double> v);

  bool operator==(const MertonParams&) const = default;
};

/// Closed interval for one parameter.
struct Interval {
  double low = 0.0;
  double high = 0.0;

  bool contains(double v) const { return v >= low && v <= high; }
  double clamp(double v) const;
  double width() const { return high - low; }
};

/// Box constraints on MertonParams. Defaults enclose the calibrated SPY
/// parameters with wide margins. `rate` bounds the trainable short rate of
/// the neural pricer, which is not part of MertonParams.
struct ParamBounds {
  Interval mu{-1.0, 1.0};
  Interval sigma{0.01, 1.0};
  Interval lambda{0.0, 5.0};
  Interval mu_y{-1.0, 1.0};
  Interval sigma_y{0.005, 0.5};
  Interval rate{-0.05, 0.25};

  void validate() const;
  bool contains(const MertonParams& p) const;
  MertonParams clamp(const MertonParams& p) const;
  std::array<Interval, MertonParams::kSize> to_array() const {
    return {mu, sigma, lambda, mu_y, sigma_y};
  }

  /// A box of total width `width` centred on `p` in every coordinate.
  static ParamBounds around(const MertonParams& p, double width);
};

struct OptionSpec {
  double spot = 100.0;
  double strike = 100.0;
  double tau = 1.0;  ///< years to maturity
  double rate = 0.0;
  OptionKind kind = OptionKind::Call;
  ExerciseStyle style = ExerciseStyle::European;

  void validate() const;
  bool operator==(const OptionSpec&) const = default;
};

double payoff(OptionKind kind, double strike, double s);
double payoff(const OptionSpec& spec, double s);

enum class Split { Train, Val, Test };

struct QuoteRow {
  OptionSpec spec;
  double price = 0.0;
  Split split = Split::Train;

  bool operator==(const QuoteRow&) const = default;
};

struct QuoteDataset {
  std::vector<QuoteRow> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  std::size_t count(Split s) const;
  std::vector<std::size_t> indices(Split s) const;
  QuoteDataset select(Split s) const;

  /// Throws ValidationError on negative or non-finite prices or invalid specs.
  void validate() const;

  bool operator==(const QuoteDataset&) const = default;
};

/// Walks a seeded permutation of the rows and tags the first floor(train*n)
/// as Train, the next floor(val*n) as Val and the remainder as Test.
void assign_splits(QuoteDataset& data, double train_frac, double val_frac, std::uint64_t seed);

struct Metrics {
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
  double explained_variance = 0.0;
  double max_error = 0.0;
};

/// Regression metrics as reported in pricing-accuracy tables. Throws
/// ValidationError on empty or mismatched inputs and when the actuals have
/// zero variance (r2 undefined).
Metrics compute_metrics(std::span<const double> predicted, std::span<const double> actual);

std::string_view to_string(OptionKind kind);
std::string_view to_string(ExerciseStyle style);
std::string_view to_string(Split split);
OptionKind parse_kind(std::string_view s);
ExerciseStyle parse_style(std::string_view s);
Split parse_split(std::string_view s);

// ---- serialization -------------------------------------------------------

std::string params_to_json(const MertonParams& p);
MertonParams params_from_json(std::string_view text);
MertonParams read_params_file(const std::filesystem::path& path);
void write_params_file(const std::filesystem::path& path, const MertonParams& p);

/// Dataset CSV: `underlying,strike,tau,rate,kind,price[,split]`. Doubles are
/// written with 17 significant digits so a write/read cycle is exact.
void write_dataset_csv(std::ostream& out, const QuoteDataset& data);
void write_dataset_csv(const std::filesystem::path& path, const QuoteDataset& data);

/// Splits one CSV line on commas; no quoting support (the schema has none).
std::vector<std::string> split_csv_line(std::string_view line);
double parse_double(std::string_view field);

}  // namespace jdpinn
