#pragma once

// Synchronized linear hybrid automata.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hasl/expr.hpp"

namespace hasl {

/// Which model events an edge reacts to.
struct Trigger {
  enum class Kind { Autonomous, Events, AllEvents, AllExcept };

  Kind kind = Kind::AllEvents;
  std::set<std::string> events;

  static Trigger autonomous() { return {Kind::Autonomous, {}}; }
  static Trigger on(std::set<std::string> names) { return {Kind::Events, std::move(names)}; }
  static Trigger any() { return {Kind::AllEvents, {}}; }
  static Trigger except(std::set<std::string> names) { return {Kind::AllExcept, std::move(names)}; }

  bool is_autonomous() const noexcept { return kind == Kind::Autonomous; }
  bool matches(const std::string& event) const;
};

struct LocationDef {
  std::string name;
  Conjunction invariant;
  std::map<std::string, Expr> flow;  // omitted variables have flow 0
};

struct EdgeDef {
  std::string source;
  std::string target;
  Trigger trigger;
  Conjunction guard;
  std::vector<std::pair<std::string, Expr>> updates;     // simultaneous
  std::vector<std::pair<std::string, Expr>> increments;  // array[index] += 1
};

struct ArrayDef {
  std::string name;
  std::size_t bound = 0;  // valid indices 0 .. bound-1
};

struct LhaDef {
  std::set<std::string> events;  // declared alphabet (may be empty when only wildcards are used)
  std::vector<std::string> variables;
  std::vector<ArrayDef> arrays;
  std::vector<LocationDef> locations;
  std::set<std::string> initial;
  std::set<std::string> final;
  std::vector<EdgeDef> edges;
};

/// A structurally valid automaton. Construction checks names, references
/// and the shape of autonomous guards; it does not check determinism.
class Lha {
 public:
  explicit Lha(LhaDef def);

  const LhaDef& def() const noexcept { return def_; }
  const std::vector<std::string>& variables() const noexcept { return def_.variables; }
  const std::vector<LocationDef>& locations() const noexcept { return def_.locations; }
  const std::vector<EdgeDef>& edges() const noexcept { return def_.edges; }

  std::optional<std::uint32_t> location_index(std::string_view name) const;
  std::optional<std::uint32_t> variable_index(std::string_view name) const;
  std::optional<std::uint32_t> array_index(std::string_view name) const;
  bool is_final(std::uint32_t location) const noexcept { return final_[location]; }
  bool is_initial(std::uint32_t location) const noexcept { return initial_[location]; }
  std::uint32_t source(std::size_t edge) const noexcept { return src_[edge]; }
  std::uint32_t target(std::size_t edge) const noexcept { return dst_[edge]; }

 private:
  LhaDef def_;
  std::vector<bool> initial_;
  std::vector<bool> final_;
  std::vector<std::uint32_t> src_;
  std::vector<std::uint32_t> dst_;
};

// ---------------------------------------------------------------------------
// Determinism

struct DeterminismViolation {
  enum class Condition { C1, C2, C3, C4 };
  Condition condition;
  std::string message;
};

std::string_view to_string(DeterminismViolation::Condition c) noexcept;

struct DeterminismReport {
  std::vector<DeterminismViolation> violations;
  bool ok() const noexcept { return violations.empty(); }
  bool has(DeterminismViolation::Condition c) const noexcept;
};

/// Conservative check of c1 (initial locations), c2 (synchronous edges),
/// c3 (autonomous edges) and c4 (no cycle made only of autonomous edges).
/// Two conjunctions count as exclusive only when interval reasoning over
/// their normalized comparisons proves it for every interpretation of the
/// marking indicators.
DeterminismReport check_determinism(const Lha& a);

/// True when `a && b` is provably unsatisfiable.
bool provably_inconsistent(const Conjunction& a, const Conjunction& b);

/// Raised at run time when more than one edge is enabled, or when
/// autonomous edges chain at a single instant beyond the legal bound.
class DeterminismFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Binding to a model signature

/// Per-run array counters.
struct ArrayState {
  std::vector<std::vector<double>> counts;
  std::vector<std::uint64_t> overflow;
};

/// Automaton compiled against the places and events of a model. All queries
/// are const and allocation-free so one instance is shared by every run.
class BoundLha {
 public:
  BoundLha(const Lha& lha, const std::vector<std::string>& places,
           const std::vector<std::string>& events);

  const Lha& lha() const noexcept { return *lha_; }
  std::size_t variable_count() const noexcept { return lha_->variables().size(); }
  std::size_t location_count() const noexcept { return lha_->locations().size(); }

  Resolver resolver() const;  // places and automaton variables

  bool invariant_holds(std::uint32_t location, std::span<const std::uint64_t> marking) const noexcept;
  bool guard_holds(std::size_t edge, std::span<const std::uint64_t> marking,
                   std::span<const double> vars) const noexcept;
  /// Applies the edge update simultaneously, writing into `vars` and `arrays`.
  void apply_update(std::size_t edge, std::span<const std::uint64_t> marking, std::vector<double>& vars,
                    ArrayState& arrays) const;
  void elapse(std::uint32_t location, std::span<const std::uint64_t> marking, std::span<double> vars,
              double dt) const noexcept;
  double flow_of(std::uint32_t location, std::uint32_t variable,
                 std::span<const std::uint64_t> marking) const noexcept;

  struct AutonomousChoice {
    double delay;
    std::size_t edge;
  };
  /// Earliest delay d >= 0 at which an autonomous edge out of `location`
  /// becomes enabled (guard true and target invariant true) assuming the
  /// marking stays constant. Throws DeterminismFault when two edges qualify
  /// at the same delay.
  std::optional<AutonomousChoice> next_autonomous(std::uint32_t location,
                                                  std::span<const std::uint64_t> marking,
                                                  std::span<const double> vars) const;

  /// Synchronous edges out of `location` capturing event number `event`.
  std::span<const std::uint32_t> candidates(std::uint32_t location, std::size_t event) const noexcept;
  bool has_autonomous(std::uint32_t location) const noexcept { return !autonomous_[location].empty(); }

  /// Initial location whose invariant holds on `marking`, if any.
  std::optional<std::uint32_t> initial_location(std::span<const std::uint64_t> marking) const;
  ArrayState empty_arrays() const;

 private:
  double settle(std::uint32_t location, std::size_t edge, std::span<const std::uint64_t> marking,
                std::span<const double> vars, double delay) const;

  struct Term {
    CompiledExpr value;  // lhs - rhs at the current valuation
    std::vector<std::pair<std::uint32_t, CompiledExpr>> slope;  // d(value)/d(var)
    Cmp op;
  };
  struct Edge {
    CompiledConjunction guard;
    std::vector<std::pair<std::uint32_t, CompiledExpr>> updates;
    std::vector<std::pair<std::uint32_t, CompiledExpr>> increments;
    std::vector<Term> terms;  // autonomous edges only
  };

  const Lha* lha_;
  std::size_t event_count_;
  std::vector<CompiledConjunction> invariants_;
  std::vector<std::vector<std::pair<std::uint32_t, CompiledExpr>>> flows_;  // nonzero flows per location
  std::vector<Edge> edges_;
  std::vector<std::vector<std::uint32_t>> autonomous_;  // per location
  std::vector<std::uint32_t> candidate_data_;
  std::vector<std::uint32_t> candidate_offsets_;  // (location * events + event) -> range
  std::vector<std::size_t> array_bounds_;
};

}  // namespace hasl
