#include "hasl/lha.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace hasl {

bool Trigger::matches(const std::string& event) const {
  switch (kind) {
    case Kind::Autonomous: return false;
    case Kind::Events: return events.contains(event);
    case Kind::AllEvents: return true;
    case Kind::AllExcept: return !events.contains(event);
  }
  return false;
}

namespace {

bool references_any(const Expr& e, const std::set<std::string>& names) {
  std::set<std::string> ids;
  collect_identifiers(e, ids);
  return std::any_of(ids.begin(), ids.end(), [&](const auto& id) { return names.contains(id); });
}

bool references_any(const Conjunction& c, const std::set<std::string>& names) {
  std::set<std::string> ids;
  collect_identifiers(c, ids);
  return std::any_of(ids.begin(), ids.end(), [&](const auto& id) { return names.contains(id); });
}

}  // namespace

Lha::Lha(LhaDef def) : def_(std::move(def)) {
  std::set<std::string> vars;
  for (const auto& v : def_.variables)
    if (!vars.insert(v).second) throw ModelError("duplicate variable '" + v + "'");
  std::set<std::string> arrays;
  for (const auto& a : def_.arrays) {
    if (vars.contains(a.name) || !arrays.insert(a.name).second)
      throw ModelError("duplicate variable or array '" + a.name + "'");
    if (a.bound == 0) throw ModelError("array '" + a.name + "' needs a positive bound");
  }
  std::set<std::string> locs;
  for (const auto& l : def_.locations) {
    if (!locs.insert(l.name).second) throw ModelError("duplicate location '" + l.name + "'");
    if (references_any(l.invariant, vars) || references_any(l.invariant, arrays))
      throw ModelError("invariant of location '" + l.name + "' must only read the marking");
    for (const auto& [v, f] : l.flow) {
      if (!vars.contains(v))
        throw ModelError("location '" + l.name + "' has a flow for unknown variable '" + v + "'");
      if (references_any(f, vars) || references_any(f, arrays))
        throw ModelError("flow of '" + v + "' in '" + l.name + "' must only read the marking");
    }
  }
  if (def_.initial.empty()) throw ModelError("automaton has no initial location");
  initial_.assign(def_.locations.size(), false);
  final_.assign(def_.locations.size(), false);
  for (const auto& n : def_.initial) {
    auto idx = location_index(n);
    if (!idx) throw ModelError("unknown initial location '" + n + "'");
    initial_[*idx] = true;
  }
  for (const auto& n : def_.final) {
    auto idx = location_index(n);
    if (!idx) throw ModelError("unknown final location '" + n + "'");
    final_[*idx] = true;
  }

  for (std::size_t i = 0; i < def_.edges.size(); ++i) {
    const auto& e = def_.edges[i];
    const std::string label = "edge " + std::to_string(i) + " (" + e.source + " -> " + e.target + ")";
    auto s = location_index(e.source);
    auto d = location_index(e.target);
    if (!s || !d) throw ModelError(label + " references an unknown location");
    src_.push_back(*s);
    dst_.push_back(*d);

    if (e.trigger.kind == Trigger::Kind::Events || e.trigger.kind == Trigger::Kind::AllExcept) {
      for (const auto& ev : e.trigger.events)
        if (!def_.events.contains(ev)) throw ModelError(label + ": event '" + ev + "' is not in the alphabet");
    }
    std::set<std::string> assigned;
    for (const auto& [v, rhs] : e.updates) {
      if (!vars.contains(v)) throw ModelError(label + " updates unknown variable '" + v + "'");
      if (!assigned.insert(v).second) throw ModelError(label + " assigns '" + v + "' twice");
      if (references_any(rhs, arrays)) throw ModelError(label + ": arrays cannot be read in updates");
    }
    for (const auto& [a, idx] : e.increments) {
      if (!arrays.contains(a)) throw ModelError(label + " increments unknown array '" + a + "'");
      if (references_any(idx, arrays)) throw ModelError(label + ": arrays cannot be read in updates");
    }
    if (references_any(e.guard, arrays)) throw ModelError(label + ": arrays cannot be read in guards");

    if (e.trigger.is_autonomous()) {
      for (const auto& term : e.guard.terms) {
        if (term.op == Cmp::Lt || term.op == Cmp::Gt)
          throw ModelError(label + ": autonomous guards must be left-closed, got '" + to_string(term) + "'");
        const auto lin = linearize(term.lhs - term.rhs, def_.variables.size(),
                                   [this](std::string_view n) -> std::optional<std::size_t> {
                                     auto idx = variable_index(n);
                                     if (idx) return *idx;
                                     return std::nullopt;
                                   });
        if (!lin) throw ModelError(label + ": autonomous guard '" + to_string(term) + "' is not linear");
      }
    }
  }
}

std::optional<std::uint32_t> Lha::location_index(std::string_view name) const {
  for (std::uint32_t i = 0; i < def_.locations.size(); ++i)
    if (def_.locations[i].name == name) return i;
  return std::nullopt;
}

std::optional<std::uint32_t> Lha::variable_index(std::string_view name) const {
  for (std::uint32_t i = 0; i < def_.variables.size(); ++i)
    if (def_.variables[i] == name) return i;
  return std::nullopt;
}

std::optional<std::uint32_t> Lha::array_index(std::string_view name) const {
  for (std::uint32_t i = 0; i < def_.arrays.size(); ++i)
    if (def_.arrays[i].name == name) return i;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Determinism

std::string_view to_string(DeterminismViolation::Condition c) noexcept {
  switch (c) {
    case DeterminismViolation::Condition::C1: return "c1";
    case DeterminismViolation::Condition::C2: return "c2";
    case DeterminismViolation::Condition::C3: return "c3";
    case DeterminismViolation::Condition::C4: return "c4";
  }
  return "?";
}

bool DeterminismReport::has(DeterminismViolation::Condition c) const noexcept {
  return std::any_of(violations.begin(), violations.end(), [c](const auto& v) { return v.condition == c; });
}

namespace {

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_closed = false;
  bool hi_closed = false;

  void raise_lo(double v, bool closed) {
    if (v > lo || (v == lo && !closed)) {
      lo = v;
      lo_closed = closed;
    }
  }
  void lower_hi(double v, bool closed) {
    if (v < hi || (v == hi && !closed)) {
      hi = v;
      hi_closed = closed;
    }
  }
  bool empty() const { return lo > hi || (lo == hi && !(lo_closed && hi_closed)); }
};

Cmp flip(Cmp op) {
  switch (op) {
    case Cmp::Lt: return Cmp::Gt;
    case Cmp::Gt: return Cmp::Lt;
    case Cmp::Le: return Cmp::Ge;
    case Cmp::Ge: return Cmp::Le;
    case Cmp::Eq: return Cmp::Eq;
  }
  return op;
}

}  // namespace

bool provably_inconsistent(const Conjunction& a, const Conjunction& b) {
  std::map<Polynomial, Interval> bounds;
  auto absorb = [&](const Comparison& c) -> bool {  // returns true if trivially false
    auto p = to_polynomial(c.lhs - c.rhs);
    if (!p) return false;
    double constant = 0.0;
    if (auto it = p->find({}); it != p->end()) {
      constant = it->second;
      p->erase(it);
    }
    if (p->empty()) return !compare(constant, c.op, 0.0);
    const double lead = p->begin()->second;
    for (auto& [m, coef] : *p) coef /= lead;
    const double bound = -constant / lead;
    const Cmp op = lead < 0 ? flip(c.op) : c.op;
    Interval& iv = bounds[*p];
    switch (op) {
      case Cmp::Eq: iv.raise_lo(bound, true); iv.lower_hi(bound, true); break;
      case Cmp::Lt: iv.lower_hi(bound, false); break;
      case Cmp::Le: iv.lower_hi(bound, true); break;
      case Cmp::Gt: iv.raise_lo(bound, false); break;
      case Cmp::Ge: iv.raise_lo(bound, true); break;
    }
    return false;
  };
  for (const auto* c : {&a, &b})
    for (const auto& t : c->terms)
      if (absorb(t)) return true;
  return std::any_of(bounds.begin(), bounds.end(), [](const auto& kv) { return kv.second.empty(); });
}

namespace {

bool triggers_overlap(const Trigger& x, const Trigger& y) {
  using K = Trigger::Kind;
  if (x.kind == K::Autonomous || y.kind == K::Autonomous) return x.kind == y.kind;
  if (x.kind == K::Events && y.kind == K::Events)
    return std::any_of(x.events.begin(), x.events.end(), [&](const auto& e) { return y.events.contains(e); });
  if (x.kind == K::Events) return std::any_of(x.events.begin(), x.events.end(), [&](const auto& e) { return y.matches(e); });
  if (y.kind == K::Events) return std::any_of(y.events.begin(), y.events.end(), [&](const auto& e) { return x.matches(e); });
  return true;  // two wildcards always share some event
}

}  // namespace

DeterminismReport check_determinism(const Lha& a) {
  using C = DeterminismViolation::Condition;
  DeterminismReport report;
  const auto& locs = a.locations();

  std::vector<std::uint32_t> initial;
  for (std::uint32_t i = 0; i < locs.size(); ++i)
    if (a.is_initial(i)) initial.push_back(i);
  for (std::size_t i = 0; i < initial.size(); ++i)
    for (std::size_t j = i + 1; j < initial.size(); ++j)
      if (!provably_inconsistent(locs[initial[i]].invariant, locs[initial[j]].invariant))
        report.violations.push_back({C::C1, "initial locations '" + locs[initial[i]].name + "' and '" +
                                                locs[initial[j]].name + "' may both hold"});

  const auto& edges = a.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    for (std::size_t j = i + 1; j < edges.size(); ++j) {
      if (a.source(i) != a.source(j)) continue;
      if (!triggers_overlap(edges[i].trigger, edges[j].trigger)) continue;
      const Conjunction ci = edges[i].guard && locs[a.target(i)].invariant;
      const Conjunction cj = edges[j].guard && locs[a.target(j)].invariant;
      if (provably_inconsistent(ci, cj)) continue;
      const C cond = edges[i].trigger.is_autonomous() ? C::C3 : C::C2;
      report.violations.push_back({cond, "edges " + std::to_string(i) + " and " + std::to_string(j) +
                                             " out of '" + locs[a.source(i)].name +
                                             "' may be enabled together"});
    }
  }

  // c4: depth-first search for a cycle in the autonomous-edge graph.
  std::vector<std::vector<std::uint32_t>> succ(locs.size());
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (edges[i].trigger.is_autonomous()) succ[a.source(i)].push_back(a.target(i));
  std::vector<int> color(locs.size(), 0);
  std::function<bool(std::uint32_t)> dfs = [&](std::uint32_t v) {
    color[v] = 1;
    for (auto w : succ[v]) {
      if (color[w] == 1) return true;
      if (color[w] == 0 && dfs(w)) return true;
    }
    color[v] = 2;
    return false;
  };
  for (std::uint32_t v = 0; v < locs.size(); ++v) {
    if (color[v] == 0 && dfs(v)) {
      report.violations.push_back({C::C4, "autonomous edges form a cycle through '" + locs[v].name + "'"});
      break;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Binding

BoundLha::BoundLha(const Lha& lha, const std::vector<std::string>& places,
                   const std::vector<std::string>& events)
    : lha_(&lha), event_count_(events.size()) {
  for (const auto& p : places)
    if (lha.variable_index(p) || lha.array_index(p))
      throw ModelError("automaton variable '" + p + "' shadows a model place");
  const Resolver resolve = [&](std::string_view name) -> std::optional<Symbol> {
    for (std::uint32_t i = 0; i < places.size(); ++i)
      if (places[i] == name) return Symbol{SymbolKind::Place, i};
    if (auto v = lha.variable_index(name)) return Symbol{SymbolKind::Variable, *v};
    return std::nullopt;
  };
  auto wrap = [](const std::string& where, auto&& fn) {
    try {
      return fn();
    } catch (const ParseError& e) {
      throw ModelError(where + ": " + e.what());
    }
  };

  const auto& locs = lha.locations();
  for (const auto& l : locs) {
    invariants_.push_back(wrap("invariant of '" + l.name + "'", [&] { return CompiledConjunction::compile(l.invariant, resolve); }));
    std::vector<std::pair<std::uint32_t, CompiledExpr>> flows;
    for (const auto& [v, f] : l.flow) {
      auto c = wrap("flow in '" + l.name + "'", [&] { return CompiledExpr::compile(f, resolve); });
      if (c.is_constant() && c.evaluate({}) == 0.0) continue;
      flows.emplace_back(*lha.variable_index(v), std::move(c));
    }
    std::sort(flows.begin(), flows.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    flows_.push_back(std::move(flows));
  }

  const auto var_index = [&](std::string_view n) -> std::optional<std::size_t> {
    if (auto v = lha.variable_index(n)) return *v;
    return std::nullopt;
  };
  autonomous_.resize(locs.size());
  for (std::size_t i = 0; i < lha.edges().size(); ++i) {
    const auto& def = lha.edges()[i];
    const std::string where = "edge " + std::to_string(i) + " (" + def.source + " -> " + def.target + ")";
    Edge e;
    e.guard = wrap(where, [&] { return CompiledConjunction::compile(def.guard, resolve); });
    for (const auto& [v, rhs] : def.updates)
      e.updates.emplace_back(*lha.variable_index(v), wrap(where, [&] { return CompiledExpr::compile(rhs, resolve); }));
    for (const auto& [arr, idx] : def.increments)
      e.increments.emplace_back(*lha.array_index(arr), wrap(where, [&] { return CompiledExpr::compile(idx, resolve); }));
    if (def.trigger.is_autonomous()) {
      for (const auto& term : def.guard.terms) {
        const Expr diff = term.lhs - term.rhs;
        auto lin = linearize(diff, lha.variables().size(), var_index);
        Term t;
        t.op = term.op;
        t.value = wrap(where, [&] { return CompiledExpr::compile(diff, resolve); });
        for (std::uint32_t v = 0; v < lin->coefficients.size(); ++v) {
          if (!lin->coefficients[v]) continue;
          t.slope.emplace_back(v, wrap(where, [&] { return CompiledExpr::compile(*lin->coefficients[v], resolve); }));
        }
        e.terms.push_back(std::move(t));
      }
      autonomous_[lha.source(i)].push_back(static_cast<std::uint32_t>(i));
    }
    edges_.push_back(std::move(e));
  }

  candidate_offsets_.assign(locs.size() * event_count_ + 1, 0);
  for (std::uint32_t l = 0; l < locs.size(); ++l) {
    for (std::size_t ev = 0; ev < event_count_; ++ev) {
      candidate_offsets_[l * event_count_ + ev] = static_cast<std::uint32_t>(candidate_data_.size());
      for (std::uint32_t i = 0; i < lha.edges().size(); ++i)
        if (lha.source(i) == l && lha.edges()[i].trigger.matches(events[ev])) candidate_data_.push_back(i);
    }
  }
  candidate_offsets_.back() = static_cast<std::uint32_t>(candidate_data_.size());

  for (const auto& a : lha.def().arrays) array_bounds_.push_back(a.bound);
}

Resolver BoundLha::resolver() const {
  // Only used for compiling auxiliary expressions over automaton variables.
  const Lha* lha = lha_;
  return [lha](std::string_view name) -> std::optional<Symbol> {
    if (auto v = lha->variable_index(name)) return Symbol{SymbolKind::Variable, *v};
    return std::nullopt;
  };
}

bool BoundLha::invariant_holds(std::uint32_t location, std::span<const std::uint64_t> marking) const noexcept {
  return invariants_[location].holds(marking);
}

bool BoundLha::guard_holds(std::size_t edge, std::span<const std::uint64_t> marking,
                           std::span<const double> vars) const noexcept {
  return edges_[edge].guard.holds(marking, vars);
}

void BoundLha::apply_update(std::size_t edge, std::span<const std::uint64_t> marking, std::vector<double>& vars,
                            ArrayState& arrays) const {
  const Edge& e = edges_[edge];
  for (const auto& [arr, idx] : e.increments) {
    const double v = std::floor(idx.evaluate(marking, vars));
    if (v >= 0.0 && v < static_cast<double>(array_bounds_[arr]))
      arrays.counts[arr][static_cast<std::size_t>(v)] += 1.0;
    else
      ++arrays.overflow[arr];
  }
  if (e.updates.empty()) return;
  if (e.updates.size() == 1) {
    vars[e.updates[0].first] = e.updates[0].second.evaluate(marking, vars);
    return;
  }
  thread_local std::vector<double> scratch;
  scratch.resize(e.updates.size());
  for (std::size_t i = 0; i < e.updates.size(); ++i) scratch[i] = e.updates[i].second.evaluate(marking, vars);
  for (std::size_t i = 0; i < e.updates.size(); ++i) vars[e.updates[i].first] = scratch[i];
}

void BoundLha::elapse(std::uint32_t location, std::span<const std::uint64_t> marking, std::span<double> vars,
                      double dt) const noexcept {
  if (dt == 0.0) return;
  for (const auto& [v, f] : flows_[location]) vars[v] += f.evaluate(marking) * dt;
}

double BoundLha::flow_of(std::uint32_t location, std::uint32_t variable,
                         std::span<const std::uint64_t> marking) const noexcept {
  for (const auto& [v, f] : flows_[location])
    if (v == variable) return f.evaluate(marking);
  return 0.0;
}

std::optional<BoundLha::AutonomousChoice> BoundLha::next_autonomous(std::uint32_t location,
                                                                    std::span<const std::uint64_t> marking,
                                                                    std::span<const double> vars) const {
  std::optional<AutonomousChoice> best;
  for (auto ei : autonomous_[location]) {
    if (!invariants_[lha_->target(ei)].holds(marking)) continue;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    bool feasible = true;
    for (const auto& term : edges_[ei].terms) {
      const double h = term.value.evaluate(marking, vars);
      double k = 0.0;
      for (const auto& [v, coef] : term.slope) k += coef.evaluate(marking) * flow_of(location, v, marking);
      // Solve h + k*d (op) 0 for d >= 0.
      if (k == 0.0) {
        if (!compare(h, term.op, 0.0)) feasible = false;
      } else {
        const double root = -h / k;
        switch (term.op) {
          case Cmp::Eq: lo = std::max(lo, root); hi = std::min(hi, root); break;
          case Cmp::Le: (k > 0 ? hi = std::min(hi, root) : lo = std::max(lo, root)); break;
          case Cmp::Ge: (k > 0 ? lo = std::max(lo, root) : hi = std::min(hi, root)); break;
          default: feasible = false; break;  // rejected at validation
        }
      }
      if (!feasible || lo > hi) {
        feasible = false;
        break;
      }
    }
    if (!feasible) continue;
    if (!best || lo < best->delay) {
      best = AutonomousChoice{lo, ei};
    } else if (lo == best->delay) {
      throw DeterminismFault("autonomous edges " + std::to_string(best->edge) + " and " + std::to_string(ei) +
                             " out of '" + lha_->locations()[location].name + "' are enabled at the same instant");
    }
  }
  if (best && best->delay > 0.0) best->delay = settle(location, best->edge, marking, vars, best->delay);
  return best;
}

double BoundLha::settle(std::uint32_t location, std::size_t edge, std::span<const std::uint64_t> marking,
                        std::span<const double> vars, double delay) const {
  // The root is exact only up to round-off; after the flows are applied the
  // guard can fall a few ulps short of its boundary.
  thread_local std::vector<double> scratch;
  double d = delay;
  double step = std::nextafter(delay, std::numeric_limits<double>::infinity()) - delay;
  for (int i = 0; i < 48; ++i) {
    scratch.assign(vars.begin(), vars.end());
    elapse(location, marking, scratch, d);
    if (edges_[edge].guard.holds(marking, scratch)) return d;
    d = delay + step;
    step *= 2.0;
  }
  return delay;
}

std::span<const std::uint32_t> BoundLha::candidates(std::uint32_t location, std::size_t event) const noexcept {
  const std::size_t slot = location * event_count_ + event;
  return {candidate_data_.data() + candidate_offsets_[slot], candidate_data_.data() + candidate_offsets_[slot + 1]};
}

std::optional<std::uint32_t> BoundLha::initial_location(std::span<const std::uint64_t> marking) const {
  for (std::uint32_t l = 0; l < location_count(); ++l)
    if (lha_->is_initial(l) && invariants_[l].holds(marking)) return l;
  return std::nullopt;
}

ArrayState BoundLha::empty_arrays() const {
  ArrayState s;
  for (auto b : array_bounds_) s.counts.emplace_back(b, 0.0);
  s.overflow.assign(array_bounds_.size(), 0);
  return s;
}

}  // namespace hasl
