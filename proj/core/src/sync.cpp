#include "hasl/sync.hpp"

#include <algorithm>
#include <map>

namespace hasl {

std::string_view to_string(RejectReason r) noexcept {
  switch (r) {
    case RejectReason::None: return "none";
    case RejectReason::NoEdge: return "no-edge";
    case RejectReason::Deadlock: return "deadlock";
    case RejectReason::Budget: return "budget";
    case RejectReason::InitialInvariant: return "initial-invariant";
    case RejectReason::EndOfTrace: return "end-of-trace";
  }
  return "?";
}

double PathStat::average(AverageMode mode, double duration) const noexcept {
  if (mode == AverageMode::Event) return samples ? event_sum / static_cast<double>(samples) : last;
  return duration > 0.0 ? integral / duration : last;
}

std::vector<Expr> track_all_variables(const Lha& lha) {
  std::vector<Expr> out;
  for (const auto& v : lha.variables()) out.push_back(Expr::identifier(v));
  return out;
}

namespace {

class SimulatedSource {
 public:
  SimulatedSource(const GspnModel& model, RandomSource& rng) : sim_(model, rng) {}
  const Marking& marking() const { return sim_.marking(); }
  double peek_time() const { return sim_.peek_time(); }
  std::size_t peek_event() const { return *sim_.peek_transition(); }
  void advance() { sim_.advance(); }
  const std::string& event_name(std::size_t e) const { return sim_.model().transitions()[e].name(); }
  static constexpr RejectReason kExhausted = RejectReason::Deadlock;

 private:
  Simulator sim_;
};

class RecordedSource {
 public:
  RecordedSource(const Marking& initial, const std::vector<TimedEvent>& events,
                 const std::vector<std::size_t>& indices, const std::vector<std::string>& names)
      : marking_(initial), events_(&events), indices_(&indices), names_(&names) {}
  const Marking& marking() const { return marking_; }
  double peek_time() const { return pos_ < events_->size() ? (*events_)[pos_].time : kNever; }
  std::size_t peek_event() const { return (*indices_)[pos_]; }
  void advance() {
    marking_ = (*events_)[pos_].marking_after;
    ++pos_;
  }
  const std::string& event_name(std::size_t e) const { return (*names_)[e]; }
  static constexpr RejectReason kExhausted = RejectReason::EndOfTrace;

 private:
  Marking marking_;
  const std::vector<TimedEvent>* events_;
  const std::vector<std::size_t>* indices_;
  const std::vector<std::string>* names_;
  std::size_t pos_ = 0;
};

class Tracker {
 public:
  Tracker(const BoundLha& lha, const std::vector<Expr>& tracked) {
    const Resolver resolve = lha.resolver();
    for (const auto& e : tracked) {
      try {
        exprs_.push_back(CompiledExpr::compile(e, resolve));
      } catch (const ParseError& err) {
        throw ModelError("tracked expression '" + to_string(e) + "': " + err.what());
      }
    }
    stats_.resize(exprs_.size());
  }

  void start(std::span<const double> vars) {
    for (std::size_t i = 0; i < exprs_.size(); ++i) {
      const double v = exprs_[i].evaluate({}, vars);
      stats_[i] = PathStat{v, v, v, 0.0, v, 1};
    }
  }

  // Value at the end of a segment of length dt, before any update.
  void segment_end(std::span<const double> vars, double dt) {
    for (std::size_t i = 0; i < exprs_.size(); ++i) {
      PathStat& s = stats_[i];
      const double v = exprs_[i].evaluate({}, vars);
      if (dt > 0.0) s.integral += 0.5 * (s.last + v) * dt;
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
      s.last = v;
    }
  }

  // Value right after a move.
  void after_move(std::span<const double> vars) {
    for (std::size_t i = 0; i < exprs_.size(); ++i) {
      PathStat& s = stats_[i];
      const double v = exprs_[i].evaluate({}, vars);
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
      s.last = v;
      s.event_sum += v;
      ++s.samples;
    }
  }

  bool empty() const { return exprs_.empty(); }
  std::vector<PathStat> take() { return std::move(stats_); }

 private:
  std::vector<CompiledExpr> exprs_;
  std::vector<PathStat> stats_;
};

template <class Source>
SyncOutcome run(const BoundLha& lha, Source& src, const SyncOptions& opt) {
  SyncOutcome out;
  std::vector<double> vars(lha.variable_count(), 0.0);
  ArrayState arrays = lha.empty_arrays();
  Tracker tracker(lha, opt.tracked);
  double time = 0.0;
  std::uint64_t events = 0;

  auto finish = [&](Verdict v, RejectReason r, std::uint32_t loc) {
    out.verdict = v;
    out.reason = r;
    out.final_state = SyncState{src.marking(), loc, vars, time};
    out.arrays = std::move(arrays);
    out.stats = tracker.take();
    out.event_count = events;
    out.model_time = time;
    return std::move(out);
  };

  const auto initial = lha.initial_location(src.marking());
  if (!initial) return finish(Verdict::Rejected, RejectReason::InitialInvariant, 0);
  std::uint32_t loc = *initial;
  tracker.start(vars);

  const std::size_t chain_cap = std::max<std::size_t>(1, lha.location_count() * lha.location_count());
  std::size_t chain = 0;
  const auto& edges = lha.lha().edges();

  while (true) {
    if (lha.lha().is_final(loc)) return finish(Verdict::Accepted, RejectReason::None, loc);

    const double t_next = src.peek_time();
    if (lha.has_autonomous(loc)) {
      if (auto choice = lha.next_autonomous(loc, src.marking(), vars)) {
        const double t_auto = time + choice->delay;
        if (t_auto <= t_next && t_auto <= opt.budget.max_time) {
          chain = choice->delay == 0.0 ? chain + 1 : 1;
          if (chain > chain_cap)
            throw DeterminismFault("more than " + std::to_string(chain_cap) +
                                   " autonomous moves at one instant");
          lha.elapse(loc, src.marking(), vars, choice->delay);
          if (!tracker.empty()) tracker.segment_end(vars, choice->delay);
          time = t_auto;
          lha.apply_update(choice->edge, src.marking(), vars, arrays);
          const std::uint32_t to = lha.lha().target(choice->edge);
          if (opt.record_moves) out.moves.push_back({time, loc, to, choice->edge, {}});
          loc = to;
          if (!tracker.empty()) tracker.after_move(vars);
          continue;
        }
      }
    }

    if (t_next == kNever) return finish(Verdict::Rejected, Source::kExhausted, loc);
    if (events >= opt.budget.max_events || t_next > opt.budget.max_time)
      return finish(Verdict::Rejected, RejectReason::Budget, loc);

    const double dt = t_next - time;
    lha.elapse(loc, src.marking(), vars, dt);
    if (!tracker.empty()) tracker.segment_end(vars, dt);
    const std::size_t ev = src.peek_event();
    src.advance();
    ++events;
    time = t_next;
    chain = 0;

    const auto& marking = src.marking();
    std::optional<std::uint32_t> chosen;
    for (auto ei : lha.candidates(loc, ev)) {
      if (!lha.invariant_holds(lha.lha().target(ei), marking)) continue;
      if (!lha.guard_holds(ei, marking, vars)) continue;
      if (chosen)
        throw DeterminismFault("edges " + std::to_string(*chosen) + " and " + std::to_string(ei) +
                               " both capture event '" + src.event_name(ev) + "' in location '" +
                               edges[ei].source + "'");
      chosen = ei;
    }
    if (!chosen) return finish(Verdict::Rejected, RejectReason::NoEdge, loc);
    lha.apply_update(*chosen, marking, vars, arrays);
    const std::uint32_t to = lha.lha().target(*chosen);
    if (opt.record_moves) out.moves.push_back({time, loc, to, *chosen, src.event_name(ev)});
    loc = to;
    if (!tracker.empty()) tracker.after_move(vars);
  }
}

}  // namespace

SyncOutcome synchronize(const GspnModel& model, const BoundLha& lha, RandomSource& rng,
                        const SyncOptions& options) {
  SimulatedSource src(model, rng);
  return run(lha, src, options);
}

SyncOutcome replay(const std::vector<std::string>& places, const Marking& initial_marking,
                   const std::vector<TimedEvent>& events, const Lha& lha, const SyncOptions& options) {
  if (initial_marking.size() != places.size())
    throw ModelError("initial marking has " + std::to_string(initial_marking.size()) + " entries for " +
                     std::to_string(places.size()) + " places");
  std::vector<std::string> names(lha.def().events.begin(), lha.def().events.end());
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = i;
  std::vector<std::size_t> indices;
  indices.reserve(events.size());
  double previous = 0.0;
  for (const auto& e : events) {
    if (e.marking_after.size() != places.size())
      throw ModelError("event '" + e.event + "' carries a marking of the wrong dimension");
    if (e.time < previous) throw ModelError("event times must be nondecreasing");
    previous = e.time;
    auto [it, inserted] = index.emplace(e.event, names.size());
    if (inserted) names.push_back(e.event);
    indices.push_back(it->second);
  }
  BoundLha bound(lha, places, names);
  RecordedSource src(initial_marking, events, indices, names);
  return run(bound, src, options);
}

}  // namespace hasl
