#pragma once

// Stochastic Petri nets with discrete-event stochastic process semantics.

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hasl/expr.hpp"

namespace hasl {

inline constexpr double kNever = std::numeric_limits<double>::infinity();

struct DelayLaw {
  enum class Kind { Exponential, Deterministic, Uniform };

  Kind kind = Kind::Exponential;
  double duration = 0.0;  // Deterministic
  double lo = 0.0;        // Uniform
  double hi = 0.0;

  static DelayLaw exponential() { return {}; }
  static DelayLaw deterministic(double d) { return {Kind::Deterministic, d, 0.0, 0.0}; }
  static DelayLaw uniform(double lo, double hi) { return {Kind::Uniform, 0.0, lo, hi}; }
};

struct Arc {
  std::string place;
  std::uint64_t multiplicity = 1;
};

/// A transition as written by the modeller. `rate` is only used by the
/// exponential law. `guard` is an optional extra enabling condition on the
/// marking, conjoined with the input-arc test.
struct TransitionDef {
  std::string name;
  std::vector<Arc> inputs;
  std::vector<Arc> outputs;
  DelayLaw law;
  Expr rate = Expr::constant(1.0);
  Conjunction guard;
};

/// A stochastic Petri net. Immutable after construction; safe to share
/// between concurrently running simulations.
class GspnModel {
 public:
  struct Transition {
    TransitionDef def;
    std::vector<std::pair<std::uint32_t, std::uint64_t>> inputs;
    std::vector<std::pair<std::uint32_t, std::int64_t>> delta;  // net effect, nonzero only
    CompiledExpr rate;
    CompiledConjunction guard;

    const std::string& name() const noexcept { return def.name; }
  };

  GspnModel(std::vector<std::string> places, std::vector<TransitionDef> transitions,
            Marking initial_marking, std::vector<Comparison> invariants = {});

  const std::vector<std::string>& places() const noexcept { return places_; }
  const std::vector<Transition>& transitions() const noexcept { return transitions_; }
  const Marking& initial_marking() const noexcept { return initial_; }
  const std::vector<Comparison>& invariants() const noexcept { return invariants_; }
  const std::vector<CompiledConjunction>& compiled_invariants() const noexcept {
    return compiled_invariants_;
  }

  std::optional<std::uint32_t> place_index(std::string_view name) const;
  std::optional<std::uint32_t> transition_index(std::string_view name) const;
  std::vector<std::string> transition_names() const;
  Resolver place_resolver() const;

  bool is_enabled(std::size_t t, std::span<const std::uint64_t> marking) const noexcept;
  /// Transitions whose enabling or rate may change when `t` fires,
  /// including `t` itself.
  const std::vector<std::uint32_t>& dependents(std::size_t t) const noexcept {
    return dependents_[t];
  }
  /// Net change of `place` when `t` fires.
  std::int64_t effect_on(std::size_t t, std::uint32_t place) const noexcept;

 private:
  std::vector<std::string> places_;
  std::vector<Transition> transitions_;
  Marking initial_;
  std::vector<Comparison> invariants_;
  std::vector<CompiledConjunction> compiled_invariants_;
  std::vector<std::vector<std::uint32_t>> dependents_;
};

/// Names of the transitions enabled in `marking`.
std::set<std::string> enabled_transitions(std::span<const std::uint64_t> marking,
                                          const GspnModel& model);

/// Rate of an exponential transition in `marking`; throws ModelError when it
/// is not strictly positive.
double evaluate_rate(const GspnModel::Transition& t, std::span<const std::uint64_t> marking);

struct InvariantReport {
  std::vector<std::string> violations;
  bool ok() const noexcept { return violations.empty(); }
};

InvariantReport validate_invariants(const GspnModel& model, std::span<const std::uint64_t> marking);

// ---------------------------------------------------------------------------
// Randomness

class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual double exponential(double rate) = 0;
  virtual double uniform(double lo, double hi) = 0;
};

/// Derives an independent stream seed from a master seed and a stream index.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

class StdRandomSource final : public RandomSource {
 public:
  explicit StdRandomSource(std::uint64_t seed) : engine_(seed) {}

  double exponential(double rate) override {
    return std::exponential_distribution<double>(rate)(engine_);
  }
  double uniform(double lo, double hi) override {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Execution

struct Configuration {
  Marking marking;
  double time = 0.0;
  std::vector<double> schedule;  // absolute occurrence times, kNever if disabled
};

struct TimedEvent {
  std::string event;
  double time = 0.0;
  Marking marking_after;
};

/// Schedules every transition enabled in the initial marking.
Configuration initial_configuration(const GspnModel& model, RandomSource& rng);

/// Index of the transition with the smallest scheduled time (lowest index on
/// ties), or nullopt when nothing is scheduled.
std::optional<std::size_t> earliest(const Configuration& config) noexcept;

/// Fires transition `t` at its scheduled time and reschedules its dependents.
void fire(Configuration& config, const GspnModel& model, RandomSource& rng, std::size_t t);

/// Fires the earliest scheduled transition (ties go to the earlier-declared
/// transition) and reschedules its dependents. Exponential transitions are
/// resampled whenever their inputs change; deterministic and uniform ones keep
/// their clock while continuously enabled. Returns the index of the fired
/// transition, or nullopt on deadlock.
std::optional<std::size_t> fire_next(Configuration& config, const GspnModel& model,
                                     RandomSource& rng);

/// `fire_next` that also reports the event with a copy of the new marking.
std::optional<TimedEvent> step(Configuration& config, const GspnModel& model, RandomSource& rng);

/// Lazy trajectory from the initial marking at time 0.
class Simulator {
 public:
  Simulator(const GspnModel& model, RandomSource& rng);

  /// Absolute time of the next event, or kNever on deadlock.
  double peek_time() const noexcept;
  std::optional<std::size_t> peek_transition() const noexcept;
  std::optional<std::size_t> advance();
  std::optional<TimedEvent> next();

  const Marking& marking() const noexcept { return config_.marking; }
  double time() const noexcept { return config_.time; }
  const Configuration& configuration() const noexcept { return config_; }
  const GspnModel& model() const noexcept { return *model_; }

 private:
  const GspnModel* model_;
  RandomSource* rng_;
  Configuration config_;
  std::optional<std::size_t> next_;
};

struct StopCondition {
  std::uint64_t max_events = std::numeric_limits<std::uint64_t>::max();
  double horizon = kNever;  // events strictly after the horizon are not produced
};

/// Collects a trajectory until deadlock or the stop condition.
std::vector<TimedEvent> simulate(const GspnModel& model, RandomSource& rng, const StopCondition& stop);

}  // namespace hasl
