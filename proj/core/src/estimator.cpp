#include "hasl/estimator.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

namespace hasl {

std::string_view to_string(PathOp op) noexcept {
  switch (op) {
    case PathOp::Last: return "last";
    case PathOp::Min: return "min";
    case PathOp::Max: return "max";
    case PathOp::Avg: return "avg";
  }
  return "?";
}

namespace {

std::optional<PathOp> path_op(std::string_view name) {
  if (name == "last") return PathOp::Last;
  if (name == "min") return PathOp::Min;
  if (name == "max") return PathOp::Max;
  if (name == "avg") return PathOp::Avg;
  return std::nullopt;
}

void check_inner(const Expr& e) {
  if (e.kind == Expr::Kind::Call || e.kind == Expr::Kind::Index)
    throw ParseError("path operators cannot be nested or indexed inside '" + to_string(e) + "'", e.position);
  for (const auto& a : e.args) check_inner(a);
}

// Validates the tree and wraps bare identifiers into last().
Expr normalize(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Constant: return e;
    case Expr::Kind::Identifier: return Expr::call("last", {e});
    case Expr::Kind::Call: {
      if (!path_op(e.name)) throw ParseError("unknown path operator '" + e.name + "'", e.position);
      if (e.args.size() != 1) throw ParseError("'" + e.name + "' takes one argument", e.position);
      check_inner(e.args[0]);
      return e;
    }
    case Expr::Kind::Index: throw ParseError("indexing is not supported in target measures", e.position);
    default: {
      Expr out = e;
      for (auto& a : out.args) a = normalize(a);
      return out;
    }
  }
}

bool only_last(const Expr& e) {
  if (e.kind == Expr::Kind::Call) return e.name == "last";
  return std::all_of(e.args.begin(), e.args.end(), only_last);
}

bool has_leaf(const Expr& e) {
  if (e.kind == Expr::Kind::Call) return true;
  return std::any_of(e.args.begin(), e.args.end(), has_leaf);
}

Expr strip_last(const Expr& e) {
  if (e.kind == Expr::Kind::Call) return e.args[0];
  Expr out = e;
  for (auto& a : out.args) a = strip_last(a);
  return out;
}

void collect_leaves(const Expr& e, std::vector<PathFormula>& out) {
  if (e.kind == Expr::Kind::Call) {
    out.push_back({*path_op(e.name), e.args[0]});
    return;
  }
  for (const auto& a : e.args) collect_leaves(a, out);
}

double parse_number(TokenStream& ts) {
  const Expr e = parse_sum(ts);
  if (!e.is_constant()) throw ParseError("expected a numeric constant", e.position);
  return e.value;
}

}  // namespace

std::vector<PathFormula> HaslExpression::leaves() const {
  std::vector<PathFormula> out;
  if (kind != Kind::Probability) collect_leaves(y, out);
  return out;
}

std::size_t HaslExpression::bin_count() const { return hasl::bin_count(s, l, h); }

HaslExpression parse_hasl(std::string_view text) {
  TokenStream ts(text);
  HaslExpression out;
  const Token head = ts.peek();
  if (head.kind != Token::Kind::Identifier) ts.fail("expected E[..], P, PDF(..) or CDF(..)");

  if (head.text == "P" && (ts.peek(1).kind == Token::Kind::End)) {
    ts.next();
    out.kind = HaslExpression::Kind::Probability;
    return out;
  }
  if (head.text == "E") {
    ts.next();
    std::string close;
    if (ts.accept_symbol("[")) close = "]";
    else if (ts.accept_symbol("(")) close = ")";
    else ts.fail("expected '[' after E");
    out.kind = HaslExpression::Kind::Expectation;
    out.y = parse_sum(ts);
    ts.expect_symbol(close);
  } else if (head.text == "PDF" || head.text == "CDF") {
    ts.next();
    out.kind = head.text == "PDF" ? HaslExpression::Kind::Pdf : HaslExpression::Kind::Cdf;
    ts.expect_symbol("(");
    out.y = parse_sum(ts);
    ts.expect_symbol(",");
    const std::size_t pos = ts.peek().position;
    out.s = parse_number(ts);
    ts.expect_symbol(",");
    out.l = parse_number(ts);
    ts.expect_symbol(",");
    out.h = parse_number(ts);
    ts.expect_symbol(")");
    if (!(out.s > 0.0)) throw ParseError("bin width must be positive", pos);
    if (!(out.l < out.h)) throw ParseError("support must satisfy l < h", pos);
  } else {
    ts.fail("expected E[..], P, PDF(..) or CDF(..)");
  }
  if (!ts.at_end()) ts.fail("unexpected trailing input");

  out.y = normalize(out.y);
  if (has_leaf(out.y) && only_last(out.y) && !(out.y.kind == Expr::Kind::Call))
    out.y = Expr::call("last", {strip_last(out.y)});
  return out;
}

std::string to_string(const HaslExpression& e) {
  auto num = [](double v) { return to_string(Expr::constant(v)); };
  switch (e.kind) {
    case HaslExpression::Kind::Expectation: return "E[" + to_string(e.y) + "]";
    case HaslExpression::Kind::Probability: return "P";
    case HaslExpression::Kind::Pdf:
    case HaslExpression::Kind::Cdf:
      return std::string(e.kind == HaslExpression::Kind::Pdf ? "PDF(" : "CDF(") + to_string(e.y) + ", " +
             num(e.s) + ", " + num(e.l) + ", " + num(e.h) + ")";
  }
  return {};
}

std::size_t bin_count(double s, double l, double h) {
  const double n = (h - l) / s;
  const double r = std::round(n);
  if (std::abs(n - r) <= 1e-9 * std::max(1.0, r)) return static_cast<std::size_t>(std::max(1.0, r));
  return static_cast<std::size_t>(std::ceil(n));
}

std::optional<std::size_t> bin_index(double value, double s, double l, double h) {
  if (!std::isfinite(value) || value < l || value > h) return std::nullopt;
  const std::size_t n = bin_count(s, l, h);
  const auto k = static_cast<std::size_t>(std::floor((value - l) / s));
  return std::min(k, n - 1);
}

// ---------------------------------------------------------------------------
// Path evaluation

PathEvaluator::PathEvaluator(const HaslExpression& expr, const Lha& lha) : expr_(expr), lha_(&lha) {
  if (expr.kind == HaslExpression::Kind::Probability) return;
  const std::size_t nvars = lha.variables().size();
  std::map<std::string, std::size_t> tracked_slots;

  // Leaves become slots __leaf<k> of the combining program.
  std::size_t counter = 0;
  std::function<Expr(const Expr&)> rewrite = [&](const Expr& e) -> Expr {
    if (e.kind != Expr::Kind::Call) {
      Expr out = e;
      for (auto& a : out.args) a = rewrite(a);
      return out;
    }
    const PathOp op = *path_op(e.name);
    const Expr& y = e.args[0];
    std::set<std::string> ids;
    collect_identifiers(y, ids);
    std::optional<std::uint32_t> array;
    for (const auto& id : ids) {
      if (lha.variable_index(id)) continue;
      if (auto a = lha.array_index(id)) {
        if (op != PathOp::Last) throw ModelError("array '" + id + "' can only be read through last()");
        if (array && *array != *a) throw ModelError("a target measure may read at most one array");
        array = *a;
        continue;
      }
      throw ModelError("unknown automaton variable '" + id + "' in " + to_string(expr_));
    }
    if (array) {
      if (array_ && *array_ != *array) throw ModelError("a target measure may read at most one array");
      array_ = array;
    }
    const std::string array_name = array ? lha.def().arrays[*array].name : std::string{};
    const Resolver resolve = [&](std::string_view name) -> std::optional<Symbol> {
      if (auto v = lha.variable_index(name)) return Symbol{SymbolKind::Variable, *v};
      if (!array_name.empty() && name == array_name)
        return Symbol{SymbolKind::Variable, static_cast<std::uint32_t>(nvars)};
      return std::nullopt;
    };
    Leaf leaf{op, CompiledExpr::compile(y, resolve), 0};
    if (op != PathOp::Last) {
      const std::string key = to_string(y);
      auto [it, inserted] = tracked_slots.emplace(key, tracked_.size());
      if (inserted) tracked_.push_back(y);
      leaf.tracked_index = it->second;
    }
    leaves_.push_back(std::move(leaf));
    return Expr::identifier("__leaf" + std::to_string(counter++));
  };
  combined_ = rewrite(expr.y);
  program_ = CompiledExpr::compile(combined_, [](std::string_view name) -> std::optional<Symbol> {
    if (name.starts_with("__leaf"))
      return Symbol{SymbolKind::Variable, static_cast<std::uint32_t>(std::stoul(std::string(name.substr(6))))};
    return std::nullopt;
  });
  if (array_) width_ = lha.def().arrays[*array_].bound;
}

std::vector<double> PathEvaluator::evaluate(const SyncOutcome& outcome, AverageMode mode) const {
  std::vector<double> out(width_, 0.0);
  if (expr_.kind == HaslExpression::Kind::Probability) {
    out[0] = outcome.accepted() ? 1.0 : 0.0;
    return out;
  }
  std::vector<double> slots(leaves_.size(), 0.0);
  std::vector<double> vars = outcome.final_state.valuation;
  vars.push_back(0.0);
  for (std::size_t c = 0; c < width_; ++c) {
    if (array_) vars.back() = outcome.arrays.counts[*array_][c];
    for (std::size_t k = 0; k < leaves_.size(); ++k) {
      const Leaf& leaf = leaves_[k];
      if (leaf.op == PathOp::Last) {
        slots[k] = leaf.expr.evaluate({}, vars);
        continue;
      }
      const PathStat& st = outcome.stats.at(leaf.tracked_index);
      switch (leaf.op) {
        case PathOp::Min: slots[k] = st.min; break;
        case PathOp::Max: slots[k] = st.max; break;
        case PathOp::Avg: slots[k] = st.average(mode, outcome.model_time); break;
        case PathOp::Last: break;
      }
    }
    out[c] = program_.evaluate({}, slots);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

void MeanAccumulator::add(double x) noexcept {
  ++n_;
  const double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

double MeanAccumulator::variance() const noexcept {
  return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double student_t_quantile(double confidence, std::uint64_t dof) {
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(boost::math::complement(dist, (1.0 - confidence) / 2.0));
}

double MeanAccumulator::halfwidth(double confidence) const {
  if (n_ < 2) return std::numeric_limits<double>::infinity();
  return student_t_quantile(confidence, n_ - 1) * std::sqrt(variance() / static_cast<double>(n_));
}

std::uint64_t Histogram::mass() const noexcept {
  std::uint64_t m = 0;
  for (auto c : counts) m += c;
  return m;
}

std::size_t Histogram::mode_bin() const noexcept {
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

// ---------------------------------------------------------------------------
// Estimation

namespace {

struct TrajectoryResult {
  bool accepted = false;
  RejectReason reason = RejectReason::None;
  std::vector<std::vector<double>> values;  // per measure
};

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  for (unsigned w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct MeasureState {
  std::vector<MeanAccumulator> acc;  // per component
  std::uint64_t discarded = 0;
  std::optional<Histogram> hist;
};

bool meets(const MeanAccumulator& a, const CiPolicy& p) {
  if (a.count() < std::max<std::uint64_t>(p.min_samples, 2)) return false;
  const double hw = a.halfwidth(p.confidence);
  if (p.halfwidth > 0.0 && !(hw <= p.halfwidth)) return false;
  if (p.relative_width && !(hw <= *p.relative_width * std::abs(a.mean()))) return false;
  return true;
}

}  // namespace

std::vector<EstimationReport> estimate_all(const std::vector<HaslExpression>& exprs, const GspnModel& model,
                                           const Lha& lha, const CiPolicy& policy, const RunConfig& run) {
  const auto started = std::chrono::steady_clock::now();
  if (!(policy.confidence > 0.0 && policy.confidence < 1.0))
    throw EstimationError("confidence level must lie in (0, 1)");
  if (policy.min_samples < 2) throw EstimationError("min_samples must be at least 2");
  if (policy.max_samples < policy.min_samples) throw EstimationError("max_samples is below min_samples");
  if (policy.batch == 0) throw EstimationError("batch size must be positive");

  const auto det = check_determinism(lha);
  if (!det.ok()) {
    std::string msg = "automaton is not deterministic:";
    for (const auto& v : det.violations) msg += " [" + std::string(to_string(v.condition)) + "] " + v.message;
    throw ModelError(msg);
  }
  const BoundLha bound(lha, model.places(), model.transition_names());

  std::vector<PathEvaluator> evaluators;
  std::vector<std::size_t> offsets;
  SyncOptions options;
  options.budget = run.budget;
  for (const auto& e : exprs) {
    evaluators.emplace_back(e, lha);
    offsets.push_back(options.tracked.size());
    for (const auto& t : evaluators.back().tracked()) options.tracked.push_back(t);
  }

  std::vector<MeasureState> states(exprs.size());
  for (std::size_t m = 0; m < exprs.size(); ++m) {
    states[m].acc.resize(evaluators[m].width());
    const auto& e = exprs[m];
    if (e.kind == HaslExpression::Kind::Pdf || e.kind == HaslExpression::Kind::Cdf) {
      Histogram h;
      h.s = e.s;
      h.l = e.l;
      h.h = e.h;
      h.counts.assign(e.bin_count(), 0);
      h.cumulative = e.kind == HaslExpression::Kind::Cdf;
      states[m].hist = std::move(h);
    }
  }

  std::uint64_t total = 0;
  std::uint64_t accepted = 0;
  std::map<RejectReason, std::uint64_t> reasons;
  std::vector<TrajectoryResult> batch;
  bool done = false;

  while (!done && total < policy.max_samples) {
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(policy.batch, policy.max_samples - total));
    batch.assign(n, {});
    const std::uint64_t base = total;
    parallel_for(n, run.workers, [&](std::size_t i) {
      StdRandomSource rng(derive_seed(run.seed, base + i));
      SyncOutcome out = synchronize(model, bound, rng, options);
      TrajectoryResult& r = batch[i];
      r.accepted = out.accepted();
      r.reason = out.reason;
      if (!r.accepted) return;
      // Each evaluator reads its own slice of the tracked statistics.
      std::vector<PathStat> all = std::move(out.stats);
      for (std::size_t m = 0; m < evaluators.size(); ++m) {
        out.stats.assign(all.begin() + static_cast<std::ptrdiff_t>(offsets[m]),
                         all.begin() + static_cast<std::ptrdiff_t>(offsets[m] + evaluators[m].tracked().size()));
        r.values.push_back(evaluators[m].evaluate(out, run.average));
      }
    });

    for (const auto& r : batch) {  // ordered reduction
      ++total;
      if (r.accepted) ++accepted;
      else ++reasons[r.reason];
      for (std::size_t m = 0; m < exprs.size(); ++m) {
        MeasureState& st = states[m];
        if (exprs[m].kind == HaslExpression::Kind::Probability) {
          st.acc[0].add(r.accepted ? 1.0 : 0.0);
          continue;
        }
        if (!r.accepted) continue;
        const auto& v = r.values[m];
        const bool finite = std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
        if (st.hist) {
          if (auto b = bin_index(v[0], st.hist->s, st.hist->l, st.hist->h)) ++st.hist->counts[*b];
          else ++st.hist->overflow;
        }
        if (!finite) {
          ++st.discarded;
          continue;
        }
        for (std::size_t c = 0; c < v.size(); ++c) st.acc[c].add(v[c]);
      }
    }

    done = std::all_of(states.begin(), states.end(), [&](const MeasureState& st) {
      return std::all_of(st.acc.begin(), st.acc.end(), [&](const MeanAccumulator& a) { return meets(a, policy); });
    });
  }

  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::vector<EstimationReport> reports;
  for (std::size_t m = 0; m < exprs.size(); ++m) {
    const auto& e = exprs[m];
    MeasureState& st = states[m];
    if (e.kind != HaslExpression::Kind::Probability && st.acc[0].count() == 0)
      throw EstimationError("no accepted trajectory with a finite value for " + to_string(e) + " within " +
                            std::to_string(total) + " trajectories (" + std::to_string(accepted) + " accepted)");
    EstimationReport rep;
    rep.expression = to_string(e);
    rep.kind = e.kind;
    rep.confidence = policy.confidence;
    rep.samples_used = total;
    rep.accepted_count = accepted;
    rep.rejected_count = total - accepted;
    rep.discarded_count = st.discarded;
    for (const auto& [r, c] : reasons) rep.rejections.emplace_back(std::string(to_string(r)), c);
    rep.seed = run.seed;
    rep.workers = run.workers;
    rep.elapsed_seconds = elapsed;
    rep.converged = std::all_of(st.acc.begin(), st.acc.end(), [&](const auto& a) { return meets(a, policy); });
    for (const auto& a : st.acc) {
      const double hw = a.halfwidth(policy.confidence);
      rep.components.push_back({a.mean(), a.mean() - hw, a.mean() + hw, a.count()});
    }
    if (evaluators[m].array_valued()) {
      rep.estimate = rep.ci_low = rep.ci_high = rep.halfwidth = std::numeric_limits<double>::quiet_NaN();
    } else {
      rep.estimate = rep.components[0].estimate;
      rep.ci_low = rep.components[0].ci_low;
      rep.ci_high = rep.components[0].ci_high;
      rep.halfwidth = st.acc[0].halfwidth(policy.confidence);
      if (e.kind == HaslExpression::Kind::Probability) {
        rep.ci_low = std::max(0.0, rep.ci_low);
        rep.ci_high = std::min(1.0, rep.ci_high);
      }
      rep.components.clear();
    }
    if (st.hist) {
      Histogram& h = *st.hist;
      double run_total = 0.0;
      for (auto c : h.counts) {
        run_total = h.cumulative ? run_total + static_cast<double>(c) : static_cast<double>(c);
        h.frequency.push_back(total ? run_total / static_cast<double>(total) : 0.0);
        h.frequency_accepted.push_back(accepted ? run_total / static_cast<double>(accepted) : 0.0);
      }
      rep.histogram = std::move(h);
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

EstimationReport estimate(const HaslExpression& expr, const GspnModel& model, const Lha& lha,
                          const CiPolicy& policy, const RunConfig& run) {
  return estimate_all({expr}, model, lha, policy, run).front();
}

}  // namespace hasl
