#include "hasl/desp.hpp"

#include <algorithm>
#include <map>

namespace hasl {

GspnModel::GspnModel(std::vector<std::string> places, std::vector<TransitionDef> transitions,
                     Marking initial_marking, std::vector<Comparison> invariants)
    : places_(std::move(places)), initial_(std::move(initial_marking)), invariants_(std::move(invariants)) {
  {
    std::set<std::string> seen;
    for (const auto& p : places_)
      if (!seen.insert(p).second) throw ModelError("duplicate place '" + p + "'");
  }
  if (initial_.size() != places_.size())
    throw ModelError("initial marking has " + std::to_string(initial_.size()) + " entries for " +
                     std::to_string(places_.size()) + " places");

  const Resolver resolve = place_resolver();
  std::set<std::string> names;
  for (auto& def : transitions) {
    if (!names.insert(def.name).second) throw ModelError("duplicate transition '" + def.name + "'");
    Transition t;
    std::map<std::uint32_t, std::int64_t> delta;
    auto lookup = [&](const Arc& a) {
      auto idx = place_index(a.place);
      if (!idx) throw ModelError("transition '" + def.name + "' references unknown place '" + a.place + "'");
      if (a.multiplicity == 0)
        throw ModelError("transition '" + def.name + "' has a zero-multiplicity arc on '" + a.place + "'");
      return *idx;
    };
    for (const auto& a : def.inputs) {
      const auto idx = lookup(a);
      t.inputs.emplace_back(idx, a.multiplicity);
      delta[idx] -= static_cast<std::int64_t>(a.multiplicity);
    }
    for (const auto& a : def.outputs) delta[lookup(a)] += static_cast<std::int64_t>(a.multiplicity);
    for (auto [p, d] : delta)
      if (d != 0) t.delta.emplace_back(p, d);

    switch (def.law.kind) {
      case DelayLaw::Kind::Exponential: break;
      case DelayLaw::Kind::Deterministic:
        if (!(def.law.duration >= 0.0))
          throw ModelError("transition '" + def.name + "': deterministic duration must be >= 0");
        break;
      case DelayLaw::Kind::Uniform:
        if (!(def.law.lo >= 0.0 && def.law.lo < def.law.hi))
          throw ModelError("transition '" + def.name + "': uniform law needs 0 <= lo < hi");
        break;
    }
    try {
      t.rate = CompiledExpr::compile(def.rate, resolve);
      t.guard = CompiledConjunction::compile(def.guard, resolve);
    } catch (const ParseError& e) {
      throw ModelError("transition '" + def.name + "': " + e.what());
    }
    t.def = std::move(def);
    transitions_.push_back(std::move(t));
  }

  for (const auto& inv : invariants_) {
    try {
      compiled_invariants_.push_back(CompiledConjunction::compile(Conjunction{{inv}}, resolve));
    } catch (const ParseError& e) {
      throw ModelError("invariant '" + to_string(inv) + "': " + e.what());
    }
  }

  // t' depends on t when t changes a place that t' reads through an input
  // arc, its guard or its rate.
  std::vector<std::set<std::uint32_t>> readers(places_.size());
  for (std::uint32_t i = 0; i < transitions_.size(); ++i) {
    const auto& t = transitions_[i];
    for (auto [p, m] : t.inputs) readers[p].insert(i);
    for (auto p : t.rate.places()) readers[p].insert(i);
    for (const auto& term : t.guard.terms()) {
      for (auto p : term.lhs.places()) readers[p].insert(i);
      for (auto p : term.rhs.places()) readers[p].insert(i);
    }
  }
  dependents_.resize(transitions_.size());
  for (std::uint32_t i = 0; i < transitions_.size(); ++i) {
    std::set<std::uint32_t> deps{i};
    for (auto [p, d] : transitions_[i].delta) deps.insert(readers[p].begin(), readers[p].end());
    dependents_[i].assign(deps.begin(), deps.end());
  }
}

std::optional<std::uint32_t> GspnModel::place_index(std::string_view name) const {
  for (std::uint32_t i = 0; i < places_.size(); ++i)
    if (places_[i] == name) return i;
  return std::nullopt;
}

std::optional<std::uint32_t> GspnModel::transition_index(std::string_view name) const {
  for (std::uint32_t i = 0; i < transitions_.size(); ++i)
    if (transitions_[i].name() == name) return i;
  return std::nullopt;
}

std::vector<std::string> GspnModel::transition_names() const {
  std::vector<std::string> out;
  out.reserve(transitions_.size());
  for (const auto& t : transitions_) out.push_back(t.name());
  return out;
}

Resolver GspnModel::place_resolver() const {
  return [this](std::string_view name) -> std::optional<Symbol> {
    if (auto idx = place_index(name)) return Symbol{SymbolKind::Place, *idx};
    return std::nullopt;
  };
}

bool GspnModel::is_enabled(std::size_t t, std::span<const std::uint64_t> marking) const noexcept {
  const auto& tr = transitions_[t];
  for (auto [p, m] : tr.inputs)
    if (marking[p] < m) return false;
  return tr.guard.holds(marking);
}

std::int64_t GspnModel::effect_on(std::size_t t, std::uint32_t place) const noexcept {
  for (auto [p, d] : transitions_[t].delta)
    if (p == place) return d;
  return 0;
}

std::set<std::string> enabled_transitions(std::span<const std::uint64_t> marking,
                                          const GspnModel& model) {
  if (marking.size() != model.places().size())
    throw ModelError("marking has " + std::to_string(marking.size()) + " entries for " +
                     std::to_string(model.places().size()) + " places");
  std::set<std::string> out;
  for (std::size_t i = 0; i < model.transitions().size(); ++i)
    if (model.is_enabled(i, marking)) out.insert(model.transitions()[i].name());
  return out;
}

double evaluate_rate(const GspnModel::Transition& t, std::span<const std::uint64_t> marking) {
  const double r = t.rate.evaluate(marking);
  if (!(r > 0.0))
    throw ModelError("transition '" + t.name() + "' has non-positive rate " + std::to_string(r));
  return r;
}

InvariantReport validate_invariants(const GspnModel& model, std::span<const std::uint64_t> marking) {
  InvariantReport report;
  if (marking.size() != model.places().size()) {
    report.violations.push_back("marking dimension mismatch");
    return report;
  }
  for (std::size_t i = 0; i < model.invariants().size(); ++i)
    if (!model.compiled_invariants()[i].holds(marking))
      report.violations.push_back(to_string(model.invariants()[i]));
  return report;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  // splitmix64 finalizer over (master, index)
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

double sample_delay(const GspnModel::Transition& t, std::span<const std::uint64_t> marking,
                    RandomSource& rng) {
  switch (t.def.law.kind) {
    case DelayLaw::Kind::Exponential: return rng.exponential(evaluate_rate(t, marking));
    case DelayLaw::Kind::Deterministic: return t.def.law.duration;
    case DelayLaw::Kind::Uniform: return rng.uniform(t.def.law.lo, t.def.law.hi);
  }
  return kNever;
}

}  // namespace

Configuration initial_configuration(const GspnModel& model, RandomSource& rng) {
  Configuration c;
  c.marking = model.initial_marking();
  c.schedule.assign(model.transitions().size(), kNever);
  for (std::size_t i = 0; i < model.transitions().size(); ++i)
    if (model.is_enabled(i, c.marking))
      c.schedule[i] = sample_delay(model.transitions()[i], c.marking, rng);
  return c;
}

std::optional<std::size_t> earliest(const Configuration& config) noexcept {
  const auto& sched = config.schedule;
  std::size_t best = sched.size();
  double best_time = kNever;
  for (std::size_t i = 0; i < sched.size(); ++i) {
    if (sched[i] < best_time) {
      best_time = sched[i];
      best = i;
    }
  }
  if (best == sched.size()) return std::nullopt;
  return best;
}

void fire(Configuration& config, const GspnModel& model, RandomSource& rng, std::size_t t) {
  const auto& fired = model.transitions()[t];
  for (auto [p, d] : fired.delta)
    config.marking[p] = static_cast<std::uint64_t>(static_cast<std::int64_t>(config.marking[p]) + d);
  config.time = config.schedule[t];

  for (auto dep : model.dependents(t)) {
    const auto& tr = model.transitions()[dep];
    if (!model.is_enabled(dep, config.marking)) {
      config.schedule[dep] = kNever;
      continue;
    }
    const bool keep_clock = tr.def.law.kind != DelayLaw::Kind::Exponential && dep != t &&
                            config.schedule[dep] != kNever;
    if (!keep_clock) config.schedule[dep] = config.time + sample_delay(tr, config.marking, rng);
  }
}

std::optional<std::size_t> fire_next(Configuration& config, const GspnModel& model,
                                     RandomSource& rng) {
  auto next = earliest(config);
  if (next) fire(config, model, rng, *next);
  return next;
}

std::optional<TimedEvent> step(Configuration& config, const GspnModel& model, RandomSource& rng) {
  auto fired = fire_next(config, model, rng);
  if (!fired) return std::nullopt;
  return TimedEvent{model.transitions()[*fired].name(), config.time, config.marking};
}

Simulator::Simulator(const GspnModel& model, RandomSource& rng)
    : model_(&model), rng_(&rng), config_(initial_configuration(model, rng)), next_(earliest(config_)) {}

double Simulator::peek_time() const noexcept { return next_ ? config_.schedule[*next_] : kNever; }

std::optional<std::size_t> Simulator::peek_transition() const noexcept { return next_; }

std::optional<std::size_t> Simulator::advance() {
  const auto fired = next_;
  if (fired) {
    fire(config_, *model_, *rng_, *fired);
    next_ = earliest(config_);
  }
  return fired;
}

std::optional<TimedEvent> Simulator::next() {
  auto fired = advance();
  if (!fired) return std::nullopt;
  return TimedEvent{model_->transitions()[*fired].name(), config_.time, config_.marking};
}

std::vector<TimedEvent> simulate(const GspnModel& model, RandomSource& rng, const StopCondition& stop) {
  Simulator sim(model, rng);
  std::vector<TimedEvent> out;
  while (out.size() < stop.max_events && sim.peek_time() <= stop.horizon) {
    auto ev = sim.next();
    if (!ev) break;
    out.push_back(std::move(*ev));
  }
  return out;
}

}  // namespace hasl
