#include "hasl/oscillation.hpp"

#include <algorithm>
#include <cmath>

namespace hasl {

double update_mean(double mean, double tp, std::int64_t n) noexcept {
  const auto k = static_cast<double>(n);
  return (mean * k + tp) / (k + 1.0);
}

double update_fluctuation(double s2, double mean, double tp, std::int64_t n) noexcept {
  const auto k = static_cast<double>(n);
  return ((k - 1.0) * s2 + (tp - mean) * (tp - update_mean(mean, tp, n - 1))) / k;
}

namespace {

Expr id(const std::string& n) { return Expr::identifier(n); }
Expr num(double v) { return Expr::constant(v); }
Comparison cmp(Expr a, Cmp op, Expr b) { return make_cmp(std::move(a), op, std::move(b)); }

using Updates = std::vector<std::pair<std::string, Expr>>;

EdgeDef edge(std::string src, std::string dst, Trigger trig, Conjunction guard = {}, Updates updates = {},
             Updates increments = {}) {
  return EdgeDef{std::move(src), std::move(dst), std::move(trig), std::move(guard), std::move(updates),
                 std::move(increments)};
}

}  // namespace

Lha build_Aper(const PeriodParams& p) {
  if (!(p.L < p.H)) throw ModelError("period automaton needs L < H");
  if (p.N < 1) throw ModelError("period automaton needs N >= 1");
  if (!(p.initT >= 0.0)) throw ModelError("initT must be nonnegative");

  const Expr A = id(p.species);
  const Expr n = id("n");
  const Expr top = id("top");
  const Expr tp = id("tp");
  const Expr tbar = id("tbar_p");
  const Expr s2 = id("s2_tp");
  const double N = static_cast<double>(p.N);

  LhaDef d;
  d.variables = {"t", "n", "top", "tp", "tbar_p", "s2_tp"};
  const std::map<std::string, Expr> clock{{"t", num(1)}};
  const std::map<std::string, Expr> clocks{{"t", num(1)}, {"tp", num(1)}};

  const Conjunction low{{cmp(A, Cmp::Le, num(p.L))}};
  const Conjunction mid{{cmp(num(p.L), Cmp::Lt, A), cmp(A, Cmp::Lt, num(p.H))}};
  const Conjunction high{{cmp(A, Cmp::Ge, num(p.H))}};
  // The anchor region is where periods start and end; `far` must be visited
  // in between.
  const std::string anchor = p.from_high ? "high" : "low";
  const std::string far = p.from_high ? "low" : "high";
  const Conjunction outside_anchor =
      p.from_high ? Conjunction{{cmp(A, Cmp::Lt, num(p.H))}} : Conjunction{{cmp(A, Cmp::Gt, num(p.L))}};

  d.locations = {
      {"l0", {}, clock},
      {"l0'", outside_anchor, clock},
      {"low", low, clocks},
      {"mid", mid, clocks},
      {"high", high, clocks},
      {"end", {}, {}},
  };
  d.initial = {"l0"};
  d.final = {"end"};

  const Trigger any = Trigger::any();
  const Trigger hash = Trigger::autonomous();
  const Updates start_measure{{"t", num(0)}, {"n", num(-1)}};

  d.edges.push_back(edge("l0", "l0", any));
  d.edges.push_back(edge("l0", "l0'", hash, {{cmp(id("t"), Cmp::Ge, num(p.initT))}}));
  d.edges.push_back(edge("l0", anchor, hash, {{cmp(id("t"), Cmp::Ge, num(p.initT))}}, start_measure));
  d.edges.push_back(edge("l0'", "l0'", any));
  d.edges.push_back(edge("l0'", anchor, any, {}, start_measure));

  // Plain region changes. Entering the far region raises `top`.
  const std::vector<std::string> regions{"low", "mid", "high"};
  for (const auto& from : regions) {
    for (const auto& to : regions) {
      if (to == anchor && from != anchor) continue;  // closing edges below
      Updates u;
      if (to == far && from != far) u.push_back({"top", num(1)});
      d.edges.push_back(edge(from, to, any, {}, u));
    }
  }

  const Expr new_mean = (tbar * n + tp) / (n + num(1));
  for (const auto& from : regions) {
    if (from == anchor) continue;
    // First anchor after the spurious leading interval.
    d.edges.push_back(edge(from, anchor, any, {{cmp(n, Cmp::Eq, num(-1)), cmp(top, Cmp::Eq, num(1))}},
                           {{"n", num(0)}, {"top", num(0)}, {"t", num(0)}, {"tp", num(0)}}));
    // First complete period.
    d.edges.push_back(edge(from, anchor, any, {{cmp(n, Cmp::Eq, num(0)), cmp(top, Cmp::Eq, num(1))}},
                           {{"n", num(1)}, {"tbar_p", tp}, {"s2_tp", num(0)}, {"tp", num(0)}, {"top", num(0)}}));
    // Later periods: running mean and population variance.
    d.edges.push_back(edge(
        from, anchor, any,
        {{cmp(num(1), Cmp::Le, n), cmp(n, Cmp::Le, num(N - 1)), cmp(top, Cmp::Eq, num(1))}},
        {{"n", n + num(1)},
         {"tbar_p", new_mean},
         {"s2_tp", (n * s2 + (tp - tbar) * (tp - new_mean)) / (n + num(1))},
         {"tp", num(0)},
         {"top", num(0)}}));
    // Back to the anchor region without visiting the far one.
    d.edges.push_back(edge(from, anchor, any, {{cmp(n, Cmp::Le, num(N - 1)), cmp(top, Cmp::Eq, num(0))}}));
  }
  d.edges.push_back(edge(anchor, "end", hash, {{cmp(n, Cmp::Eq, num(N))}}));
  return Lha(std::move(d));
}

EventPartition classify_events(const GspnModel& model, const std::string& species) {
  const auto place = model.place_index(species);
  if (!place) throw ModelError("unknown species '" + species + "'");
  EventPartition out;
  for (std::size_t t = 0; t < model.transitions().size(); ++t) {
    const auto eff = model.effect_on(t, *place);
    const auto& name = model.transitions()[t].name();
    (eff > 0 ? out.increasing : eff < 0 ? out.decreasing : out.neutral).insert(name);
  }
  return out;
}

void validate_partition(const EventPartition& partition, const GspnModel& model) {
  std::set<std::string> seen;
  for (const auto* set : {&partition.increasing, &partition.decreasing, &partition.neutral})
    for (const auto& e : *set)
      if (!seen.insert(e).second) throw ModelError("event '" + e + "' appears in more than one class");
  for (const auto& t : model.transitions())
    if (!seen.contains(t.name())) throw ModelError("event partition misses transition '" + t.name() + "'");
  if (seen.size() != model.transitions().size()) throw ModelError("event partition names unknown transitions");
}

Lha build_Apeaks(const PeaksParams& p) {
  if (!(p.delta > 0.0)) throw ModelError("peak automaton needs delta > 0");
  if (p.N < 1) throw ModelError("peak automaton needs N >= 1");
  if (!(p.initT >= 0.0)) throw ModelError("initT must be nonnegative");
  if (p.bound == 0) throw ModelError("peak arrays need a positive bound");
  {
    std::set<std::string> seen;
    for (const auto* set : {&p.partition.increasing, &p.partition.decreasing, &p.partition.neutral})
      for (const auto& e : *set)
        if (!seen.insert(e).second) throw ModelError("event '" + e + "' appears in more than one class");
  }

  const Expr A = id(p.species);
  const Expr x = id("x");
  const Expr diff = A - x;
  const Expr delta = num(p.delta);
  const Expr neg_delta = num(-p.delta);

  LhaDef d;
  d.events.insert(p.partition.increasing.begin(), p.partition.increasing.end());
  d.events.insert(p.partition.decreasing.begin(), p.partition.decreasing.end());
  d.events.insert(p.partition.neutral.begin(), p.partition.neutral.end());
  d.variables = {"t", "n_M", "n_m", "x", "Smax", "Smin"};
  d.arrays = {{"Lmax", p.bound}, {"Lmin", p.bound}};
  const std::map<std::string, Expr> clock{{"t", num(1)}};
  for (const char* name : {"l0", "start", "Max", "noisyDec", "Min", "noisyInc"})
    d.locations.push_back({name, {}, clock});
  d.locations.push_back({"end", {}, {}});
  d.initial = {"l0"};
  d.final = {"end"};

  const Trigger any = Trigger::any();
  const Trigger inc = Trigger::on(p.partition.increasing);
  const Trigger dec = Trigger::on(p.partition.decreasing);
  const Trigger same = Trigger::on(p.partition.neutral);
  const Updates track{{"x", A}};
  const Updates commit_max{{"Smax", id("Smax") + x}, {"n_M", id("n_M") + num(1)}, {"x", A}};
  const Updates commit_min{{"Smin", id("Smin") + x}, {"n_m", id("n_m") + num(1)}, {"x", A}};
  const Updates count_max{{"Lmax", x}};
  const Updates count_min{{"Lmin", x}};

  d.edges.push_back(edge("l0", "l0", any));
  d.edges.push_back(edge("l0", "start", Trigger::autonomous(), {{cmp(id("t"), Cmp::Ge, num(p.initT))}},
                         {{"x", A}, {"t", num(0)}}));

  d.edges.push_back(edge("start", "Max", any, {{cmp(diff, Cmp::Ge, delta)}}, track));
  d.edges.push_back(edge("start", "Min", any, {{cmp(diff, Cmp::Le, neg_delta)}}, track));
  d.edges.push_back(edge("start", "start", any, {{cmp(diff, Cmp::Gt, neg_delta), cmp(diff, Cmp::Lt, delta)}}));

  d.edges.push_back(edge("Max", "Max", inc, {}, track));
  d.edges.push_back(edge("Max", "Max", same));
  d.edges.push_back(edge("Max", "noisyDec", dec, {{cmp(diff, Cmp::Gt, neg_delta)}}));
  d.edges.push_back(edge("Max", "Min", dec, {{cmp(diff, Cmp::Le, neg_delta)}}, commit_max, count_max));
  d.edges.push_back(edge("noisyDec", "Max", any, {{cmp(diff, Cmp::Ge, num(0))}}, track));
  d.edges.push_back(edge("noisyDec", "noisyDec", any, {{cmp(diff, Cmp::Lt, num(0)), cmp(diff, Cmp::Gt, neg_delta)}}));
  d.edges.push_back(edge("noisyDec", "Min", any, {{cmp(diff, Cmp::Le, neg_delta)}}, commit_max, count_max));

  d.edges.push_back(edge("Min", "Min", dec, {}, track));
  d.edges.push_back(edge("Min", "Min", same));
  d.edges.push_back(edge("Min", "noisyInc", inc, {{cmp(diff, Cmp::Lt, delta)}}));
  d.edges.push_back(edge("Min", "Max", inc, {{cmp(diff, Cmp::Ge, delta)}}, commit_min, count_min));
  d.edges.push_back(edge("noisyInc", "Min", any, {{cmp(diff, Cmp::Le, num(0))}}, track));
  d.edges.push_back(edge("noisyInc", "noisyInc", any, {{cmp(diff, Cmp::Gt, num(0)), cmp(diff, Cmp::Lt, delta)}}));
  d.edges.push_back(edge("noisyInc", "Max", any, {{cmp(diff, Cmp::Ge, delta)}}, commit_min, count_min));

  d.edges.push_back(edge("Min", "end", Trigger::autonomous(), {{cmp(id("n_M"), Cmp::Eq, num(static_cast<double>(p.N)))}}));
  return Lha(std::move(d));
}

// ---------------------------------------------------------------------------
// Reference scans

namespace {

// Index of the first sample observed after the transient filter, and the
// value in force when the filter closes.
std::pair<std::size_t, double> after_filter(const std::vector<Sample>& trace, double initT) {
  std::size_t i = 0;
  double value = trace.empty() ? 0.0 : trace.front().value;
  if (!trace.empty()) i = 1;
  while (i < trace.size() && trace[i].time < initT) value = trace[i++].value;
  return {i, value};
}

}  // namespace

std::vector<double> offline_periods(const std::vector<Sample>& trace, double L, double H, double initT,
                                    std::optional<std::size_t> limit) {
  enum Region { Low, Mid, High };
  auto region = [&](double v) { return v <= L ? Low : v >= H ? High : Mid; };
  std::vector<double> periods;
  if (trace.empty()) return periods;

  auto [i, value] = after_filter(trace, initT);
  if (region(value) != Low) {
    while (i < trace.size() && region(trace[i].value) != Low) ++i;
    if (i == trace.size()) return periods;
    ++i;
  }
  Region current = Low;
  bool top = false;
  std::optional<double> last_anchor;
  for (; i < trace.size(); ++i) {
    const Region r = region(trace[i].value);
    if (r == High) top = true;
    if (r == Low && current != Low && top) {
      if (last_anchor) {
        periods.push_back(trace[i].time - *last_anchor);
        if (limit && periods.size() >= *limit) break;
      }
      last_anchor = trace[i].time;
      top = false;
    }
    current = r;
  }
  return periods;
}

Peaks offline_peaks(const std::vector<Sample>& trace, double delta, double initT,
                    std::optional<std::size_t> max_count) {
  enum State { Start, Max, NoisyDec, Min, NoisyInc };
  Peaks out;
  if (trace.empty()) return out;
  auto [i, x] = after_filter(trace, initT);
  State s = Start;
  for (; i < trace.size(); ++i) {
    if (max_count && out.maxima.size() >= *max_count) break;
    const double v = trace[i].value;
    const double d = v - x;
    switch (s) {
      case Start:
        if (d >= delta) { s = Max; x = v; }
        else if (d <= -delta) { s = Min; x = v; }
        break;
      case Max:
      case NoisyDec:
        if (d >= 0) { s = Max; x = v; }
        else if (d <= -delta) { out.maxima.push_back(x); s = Min; x = v; }
        else s = NoisyDec;
        break;
      case Min:
      case NoisyInc:
        if (d <= 0) { s = Min; x = v; }
        else if (d >= delta) { out.minima.push_back(x); s = Max; x = v; }
        else s = NoisyInc;
        break;
    }
  }
  return out;
}

std::vector<Sample> project(const std::vector<TimedEvent>& events, const Marking& initial, std::size_t place) {
  std::vector<Sample> out;
  out.reserve(events.size() + 1);
  out.push_back({0.0, static_cast<double>(initial.at(place))});
  for (const auto& e : events) out.push_back({e.time, static_cast<double>(e.marking_after.at(place))});
  return out;
}

PilotResult pilot(const GspnModel& model, const std::string& species, std::uint64_t seed, std::size_t runs,
                  double horizon) {
  const auto place = model.place_index(species);
  if (!place) throw ModelError("unknown species '" + species + "'");
  if (runs == 0) throw ModelError("pilot needs at least one run");
  PilotResult res;
  double sum = 0.0;
  for (std::size_t r = 0; r < runs; ++r) {
    StdRandomSource rng(derive_seed(seed, r));
    Simulator sim(model, rng);
    auto best = static_cast<double>(sim.marking()[*place]);
    while (sim.peek_time() <= horizon && sim.advance())
      best = std::max(best, static_cast<double>(sim.marking()[*place]));
    sum += best;
    res.max = std::max(res.max, best);
  }
  res.mean_max = sum / static_cast<double>(runs);
  return res;
}

}  // namespace hasl
