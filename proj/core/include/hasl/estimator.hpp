#pragma once

// Target measures over accepted paths and their statistical estimation.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hasl/desp.hpp"
#include "hasl/lha.hpp"
#include "hasl/sync.hpp"

namespace hasl {

enum class PathOp { Last, Min, Max, Avg };

std::string_view to_string(PathOp op) noexcept;

struct PathFormula {
  PathOp op = PathOp::Last;
  Expr y;
};

/// A target measure. `y` is an arithmetic tree whose leaves are constants or
/// calls last(..), min(..), max(..), avg(..); bare identifiers are read as
/// last(identifier). A tree that only reads last() is folded into a single
/// last(y).
struct HaslExpression {
  enum class Kind { Expectation, Probability, Pdf, Cdf };

  Kind kind = Kind::Expectation;
  Expr y;
  double s = 0.0;  // bin width
  double l = 0.0;  // support
  double h = 0.0;

  std::vector<PathFormula> leaves() const;
  std::size_t bin_count() const;
};

HaslExpression parse_hasl(std::string_view text);
std::string to_string(const HaslExpression& e);

/// Bin of `value` in the support [l, h] split into width-s cells; the last
/// cell is closed above. nullopt when the value lies outside the support or
/// is not finite.
std::optional<std::size_t> bin_index(double value, double s, double l, double h);
std::size_t bin_count(double s, double l, double h);

/// A target measure bound to an automaton.
class PathEvaluator {
 public:
  PathEvaluator(const HaslExpression& expr, const Lha& lha);

  /// Expressions that the sync engine must track for min/max/avg leaves.
  const std::vector<Expr>& tracked() const noexcept { return tracked_; }
  /// Number of components: 1, or the array bound for array-valued measures.
  std::size_t width() const noexcept { return width_; }
  bool array_valued() const noexcept { return array_.has_value(); }

  /// Value(s) of Y on an accepted outcome. Non-finite results are returned
  /// as is; callers decide whether to discard them.
  std::vector<double> evaluate(const SyncOutcome& outcome, AverageMode mode) const;

 private:
  struct Leaf {
    PathOp op;
    CompiledExpr expr;
    std::size_t tracked_index = 0;
  };
  HaslExpression expr_;
  const Lha* lha_;
  std::vector<Leaf> leaves_;
  std::vector<Expr> tracked_;
  Expr combined_;  // y with leaves replaced by slots
  CompiledExpr program_;
  std::optional<std::uint32_t> array_;
  std::size_t width_ = 1;
};

struct CiPolicy {
  double confidence = 0.99;
  double halfwidth = 0.0;                // absolute; 0 disables
  std::optional<double> relative_width;  // half-width relative to |estimate|
  std::uint64_t min_samples = 30;
  std::uint64_t max_samples = 100000;
  std::uint64_t batch = 64;
};

struct RunConfig {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  Budget budget;
  AverageMode average = AverageMode::Time;
};

/// Welford accumulator with a Student-t interval.
class MeanAccumulator {
 public:
  void add(double x) noexcept;
  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept;  // unbiased sample variance
  /// Half-width of the two-sided interval at `confidence`; +inf below 2 samples.
  double halfwidth(double confidence) const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

double student_t_quantile(double confidence, std::uint64_t dof);

struct Histogram {
  double s = 0.0;
  double l = 0.0;
  double h = 0.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t overflow = 0;
  std::vector<double> frequency;           // counts / total trajectories
  std::vector<double> frequency_accepted;  // counts / accepted trajectories
  bool cumulative = false;                 // frequencies are cumulative (CDF)

  double bin_low(std::size_t i) const { return l + static_cast<double>(i) * s; }
  double bin_high(std::size_t i) const { return std::min(h, l + static_cast<double>(i + 1) * s); }
  std::uint64_t mass() const noexcept;
  std::size_t mode_bin() const noexcept;
};

struct ComponentEstimate {
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t samples = 0;
};

struct EstimationReport {
  std::string expression;
  HaslExpression::Kind kind = HaslExpression::Kind::Expectation;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double halfwidth = 0.0;
  double confidence = 0.0;
  bool converged = false;
  std::uint64_t samples_used = 0;  // trajectories generated
  std::uint64_t accepted_count = 0;
  std::uint64_t rejected_count = 0;
  std::uint64_t discarded_count = 0;  // accepted but Y was not finite
  std::vector<std::pair<std::string, std::uint64_t>> rejections;
  std::vector<ComponentEstimate> components;  // array-valued measures
  std::optional<Histogram> histogram;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  double elapsed_seconds = 0.0;
};

class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Estimates several measures from the same set of trajectories. Sampling
/// stops at a batch boundary once every measure meets the policy, or at
/// max_samples. Results depend only on (seed, number of trajectories), never
/// on the worker count.
std::vector<EstimationReport> estimate_all(const std::vector<HaslExpression>& exprs, const GspnModel& model,
                                           const Lha& lha, const CiPolicy& policy, const RunConfig& run);

EstimationReport estimate(const HaslExpression& expr, const GspnModel& model, const Lha& lha,
                          const CiPolicy& policy, const RunConfig& run);

}  // namespace hasl
