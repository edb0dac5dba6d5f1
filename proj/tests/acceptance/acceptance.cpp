// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. The circadian estimates take several minutes on a single core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hasl/estimator.hpp"
#include "hasl/models.hpp"
#include "hasl/oscillation.hpp"
#include "hasl/sync.hpp"
#include "synthetic.hpp"

using namespace hasl;
using namespace hasl::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;
std::string only;  // optional substring filter from the command line

void report(const std::string& name, const std::function<Outcome()>& check) {
  if (!only.empty() && name.find(only) == std::string::npos) return;
  const auto started = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::printf("%s %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(double x, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << x;
  return os.str();
}

std::string ci(const EstimationReport& r) {
  return fmt(r.estimate) + " [" + fmt(r.ci_low) + ", " + fmt(r.ci_high) + "] n=" + std::to_string(r.accepted_count);
}

bool strictly_decreasing(const std::vector<double>& xs) {
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] < xs[i - 1])) return false;
  return true;
}

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// Thirty-two accepted trajectories per point; no width target.
CiPolicy circadian_policy() {
  CiPolicy p;
  p.confidence = 0.99;
  p.min_samples = 32;
  p.batch = 32;
  p.max_samples = 256;
  return p;
}

GspnModel circadian_with(double delta_R) {
  CircadianRates r;
  r.delta_R = delta_R;
  return circadian(r);
}

// ---------------------------------------------------------------------------
// Circadian periods

struct PeriodPoint {
  double delta_R;
  EstimationReport mean, fluctuation, pdf;
};

const std::vector<double> kSweep{0.1, 0.2, 2.0};

std::map<double, PeriodPoint>& period_points() {
  static std::map<double, PeriodPoint> points = [] {
    std::map<double, PeriodPoint> out;
    const Lha aper = build_Aper({"A", 1, 1000, 0, 100});
    for (std::size_t i = 0; i < kSweep.size(); ++i) {
      RunConfig rc;
      rc.seed = 2024 + i;
      rc.workers = workers();
      const auto reps = estimate_all({parse_hasl("E[last(tbar_p)]"), parse_hasl("E[last(s2_tp)]"),
                                      parse_hasl("PDF(tbar_p, 0.1, 0, 50)")},
                                     circadian_with(kSweep[i]), aper, circadian_policy(), rc);
      out[kSweep[i]] = {kSweep[i], reps[0], reps[1], reps[2]};
    }
    return out;
  }();
  return points;
}

Outcome baseline_period() {
  const auto& p = period_points().at(0.2);
  const bool ok = p.mean.accepted_count >= 30 && p.mean.estimate >= 23.5 && p.mean.estimate <= 26.5;
  return {ok, "E[last(tbar_p)] = " + ci(p.mean) + ", expected in [23.5, 26.5]"};
}

Outcome period_scaling() {
  const auto& pts = period_points();
  const double slow = pts.at(0.1).mean.estimate;
  const double base = pts.at(0.2).mean.estimate;
  const double fast = pts.at(2.0).mean.estimate;
  const bool ok = fast >= 10.0 && fast <= 11.6 && slow >= 38.0 && slow <= 43.5 && strictly_decreasing({slow, base, fast});
  return {ok, "delta_R=0.1: " + ci(pts.at(0.1).mean) + "; delta_R=0.2: " + fmt(base) + "; delta_R=2: " +
                  ci(pts.at(2.0).mean)};
}

Outcome fluctuation_trend() {
  std::vector<double> s2;
  std::string detail;
  for (double d : kSweep) {
    s2.push_back(period_points().at(d).fluctuation.estimate);
    detail += "delta_R=" + fmt(d) + ": " + ci(period_points().at(d).fluctuation) + "; ";
  }
  return {strictly_decreasing(s2), detail};
}

// ---------------------------------------------------------------------------
// Peaks

struct PeakMeans {
  EstimationReport max_mean, min_mean;
  double delta = 0;
};

PeakMeans peak_means(double delta_R, const std::string& species, std::uint64_t seed) {
  const GspnModel m = circadian_with(delta_R);
  const PilotResult pr = pilot(m, species, seed);
  PeaksParams p;
  p.species = species;
  p.delta = std::max(1.0, std::ceil(0.1 * pr.mean_max));
  p.N = 100;
  p.partition = classify_events(m, species);
  p.bound = static_cast<std::size_t>(std::max(16.0, std::ceil(4.0 * pr.max)));
  RunConfig rc;
  rc.seed = seed;
  rc.workers = workers();
  const auto reps = estimate_all({parse_hasl("E[last(Smax / n_M)]"), parse_hasl("E[last(Smin / n_m)]")}, m,
                                 build_Apeaks(p), circadian_policy(), rc);
  return {reps[0], reps[1], p.delta};
}

Outcome peaks() {
  std::vector<double> a_max, r_max, r_min;
  std::string detail;
  std::uint64_t seed = 77;
  for (double d : kSweep) {
    const PeakMeans a = peak_means(d, "A", seed++);
    const PeakMeans r = peak_means(d, "R", seed++);
    a_max.push_back(a.max_mean.estimate);
    r_max.push_back(r.max_mean.estimate);
    r_min.push_back(r.min_mean.estimate);
    detail += "delta_R=" + fmt(d) + ": A max " + fmt(a.max_mean.estimate) + " (delta " + fmt(a.delta) +
              "), R max " + fmt(r.max_mean.estimate) + ", R min " + fmt(r.min_mean.estimate) + " (delta " +
              fmt(r.delta) + "); ";
  }
  const auto [lo, hi] = std::minmax_element(a_max.begin(), a_max.end());
  const double spread = (*hi - *lo) / *lo;
  const bool ok = spread < 0.10 && strictly_decreasing(r_max) &&
                  std::all_of(r_min.begin(), r_min.end(), [](double x) { return x < 1.0; });
  return {ok, detail + "A max spread " + fmt(100 * spread, 3) + "%"};
}

// ---------------------------------------------------------------------------
// Erlang oracle

Outcome erlang() {
  const GspnModel m = poisson_source(2.0);
  const Lha a = build_counter("fire", 3);
  const auto expr = parse_hasl("E[last(t)]");
  CiPolicy p;
  p.halfwidth = 0.01;
  int covered = 0;
  std::uint64_t samples = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    RunConfig rc;
    rc.seed = 5000 + k;
    rc.workers = workers();
    const auto r = estimate(expr, m, a, p, rc);
    covered += (r.ci_low <= 1.5 && 1.5 <= r.ci_high) ? 1 : 0;
    samples += r.samples_used;
  }
  RunConfig rc;
  rc.workers = workers();
  const auto single = estimate(expr, m, a, p, rc);
  const bool close = std::abs(single.estimate - 1.5) <= 0.015 && single.halfwidth <= 0.01;
  return {covered >= 95 && close, "coverage " + std::to_string(covered) + "/100 (mean " +
                                      std::to_string(samples / 100) + " samples), seed 1: " + ci(single)};
}

// ---------------------------------------------------------------------------
// Synthetic oracles

Outcome online_statistics() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> log_len(std::log(2.0), std::log(1e4));
  std::normal_distribution<double> period(25.0, 3.0);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto len = static_cast<std::size_t>(std::lround(std::exp(log_len(rng))));
    std::vector<double> xs(std::max<std::size_t>(2, len));
    for (auto& x : xs) x = std::abs(period(rng));
    double m = xs[0], s2 = 0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
      const auto n = static_cast<std::int64_t>(i + 1);
      s2 = update_fluctuation(s2, m, xs[i], n);
      m = update_mean(m, xs[i], n - 1);
    }
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double var = ss / xs.size();
    worst = std::max({worst, std::abs(m - mean) / mean, var > 0 ? std::abs(s2 - var) / var : std::abs(s2)});
  }
  return {worst <= 1e-9, "max relative error " + fmt(worst, 3)};
}

Outcome equivalence() {
  std::mt19937_64 rng(41);
  int per_traces = 0, peak_traces = 0, mismatches = 0;
  std::string first;
  // Period automaton on noisy staircases, some too short to be accepted.
  for (int k = 0; k < 250; ++k) {
    StaircaseParams sp;
    sp.L = 2 + k % 7;
    sp.H = sp.L + 10 + (k * 7) % 60;
    sp.initT = (k % 4) * 15.0;
    sp.cycles = 2 + k % 9;
    sp.max_step = 1 + k % 5;
    const auto trace = noisy_periodic(rng, sp);
    const auto N = static_cast<std::int64_t>(1 + (k * 3) % 8);
    const Lha a = build_Aper({"A", static_cast<double>(sp.L), static_cast<double>(sp.H), sp.initT, N});
    const auto r = replay_recorded(trace, a);
    const auto got = periods_from_moves(a, r);
    const auto ref = offline_periods(samples_of(trace), sp.L, sp.H, sp.initT, static_cast<std::size_t>(N));
    bool ok = got == ref && r.accepted() == (ref.size() == static_cast<std::size_t>(N));
    if (ok && r.accepted()) {
      const double mean = std::accumulate(ref.begin(), ref.end(), 0.0) / ref.size();
      ok = std::abs(variable(a, r, "tbar_p") - mean) <= 1e-9 * mean;
    }
    if (!ok && first.empty()) first = "periods, trace " + std::to_string(k);
    mismatches += ok ? 0 : 1;
    ++per_traces;
  }
  // Peak automaton on random walks and staircases.
  const std::vector<double> deltas{1, 2, 5, 10};
  for (int k = 0; k < 250; ++k) {
    const double delta = deltas[k % 4];
    RecordedTrace trace;
    if (k % 2 == 0) {
      trace = random_walk(rng, 200 + k * 4, 1 + k % 8, 300);
    } else {
      StaircaseParams sp;
      sp.cycles = 4;
      trace = noisy_periodic(rng, sp);
    }
    PeaksParams p;
    p.delta = delta;
    p.initT = (k % 3) * 10.0;
    p.N = (k % 5 == 0) ? 3 : 100000;
    p.partition = direction_partition();
    p.bound = 8192;
    const Lha a = build_Apeaks(p);
    const auto r = replay_recorded(trace, a);
    const Peaks ref = offline_peaks(samples_of(trace), delta, p.initT, static_cast<std::size_t>(p.N));
    const std::string why = compare_peaks(a, r, ref);
    if (!why.empty() && first.empty()) first = "peaks, trace " + std::to_string(k) + ": " + why;
    mismatches += why.empty() ? 0 : 1;
    ++peak_traces;
  }
  std::string detail = std::to_string(per_traces) + " period traces, " + std::to_string(peak_traces) +
                       " peak traces, " + std::to_string(mismatches) + " mismatches";
  if (!first.empty()) detail += "; first: " + first;
  return {mismatches == 0, detail};
}

Outcome noisy_periodic_acceptance() {
  std::mt19937_64 rng(51);
  int accepted = 0, rejected = 0;
  for (int k = 0; k < 200; ++k) {
    StaircaseParams sp;
    sp.initT = (k % 5) * 20.0;
    sp.cycles = 11;
    const Lha a = build_Aper({"A", static_cast<double>(sp.L), static_cast<double>(sp.H), sp.initT, 10});
    accepted += replay_recorded(noisy_periodic(rng, sp), a).accepted() ? 1 : 0;
  }
  for (int k = 0; k < 200; ++k) {
    const Lha a = build_Aper({"A", 5, 50, 0, 1});
    rejected += replay_recorded(bounded_walk(rng, 50, 3000, 4), a).accepted() ? 0 : 1;
  }
  return {accepted == 200 && rejected == 200,
          std::to_string(accepted) + "/200 noisy-periodic accepted, " + std::to_string(rejected) +
              "/200 never-high not accepted"};
}

Outcome determinism() {
  std::string detail;
  bool ok = true;
  const auto expect_ok = [&](const char* name, const Lha& a) {
    const bool good = check_determinism(a).ok();
    ok &= good;
    detail += std::string(name) + (good ? " ok; " : " REJECTED; ");
  };
  expect_ok("A_per", build_Aper({"A", 1, 1000, 0, 100}));
  expect_ok("A_per(from high)", build_Aper({"A", 1, 1000, 50, 10, true}));
  PeaksParams pp;
  pp.partition = classify_events(circadian(), "A");
  expect_ok("A_peaks", build_Apeaks(pp));

  const auto expect_bad = [&](const char* name, const LhaDef& d, DeterminismViolation::Condition c) {
    const auto rep = check_determinism(Lha(d));
    const bool good = rep.has(c);
    ok &= good;
    detail += std::string(name) + " -> ";
    for (const auto& v : rep.violations) detail += std::string(to_string(v.condition)) + " ";
    detail += "; ";
  };
  const std::map<std::string, Expr> clock{{"t", parse_expression("1")}};
  LhaDef dual;
  dual.variables = {"t"};
  dual.locations = {{"a", {}, clock}, {"b", {}, clock}, {"f", {}, {}}};
  dual.initial = {"a", "b"};
  dual.final = {"f"};
  expect_bad("dual initial", dual, DeterminismViolation::Condition::C1);

  LhaDef overlap;
  overlap.variables = {"t"};
  overlap.locations = {{"a", {}, clock}, {"b", {}, clock}, {"c", {}, clock}};
  overlap.initial = {"a"};
  overlap.final = {"c"};
  overlap.edges = {{"a", "b", Trigger::any(), parse_conjunction("A >= 3"), {}, {}},
                   {"a", "c", Trigger::any(), parse_conjunction("A <= 5"), {}, {}}};
  expect_bad("overlapping guards", overlap, DeterminismViolation::Condition::C2);

  LhaDef cycle;
  cycle.variables = {"t"};
  cycle.locations = {{"a", {}, clock}, {"b", {}, clock}, {"f", {}, {}}};
  cycle.initial = {"a"};
  cycle.final = {"f"};
  cycle.edges = {{"a", "b", Trigger::autonomous(), parse_conjunction("t >= 1"), {}, {}},
                 {"b", "a", Trigger::autonomous(), parse_conjunction("t >= 2"), {}, {}}};
  expect_bad("autonomous cycle", cycle, DeterminismViolation::Condition::C4);
  return {ok, detail};
}

Outcome histograms() {
  std::string detail;
  bool ok = true;
  const auto check = [&](const std::string& name, const EstimationReport& r) {
    const Histogram& h = *r.histogram;
    const bool good = h.mass() + h.overflow == r.accepted_count;
    ok &= good;
    detail += name + ": " + std::to_string(h.mass()) + "+" + std::to_string(h.overflow) + "=" +
              std::to_string(r.accepted_count) + (good ? "; " : " MISMATCH; ");
  };
  for (double d : kSweep) check("tbar_p delta_R=" + fmt(d), period_points().at(d).pdf);

  CiPolicy p;
  p.min_samples = 5000;
  RunConfig rc;
  rc.workers = workers();
  const auto erl = estimate_all({parse_hasl("PDF(last(t), 0.05, 0, 3)"), parse_hasl("CDF(last(t), 0.05, 0, 3)")},
                                poisson_source(2.0), build_counter("fire", 3), p, rc);
  check("erlang pdf", erl[0]);
  check("erlang cdf", erl[1]);

  const Histogram& base = *period_points().at(0.2).pdf.histogram;
  const std::size_t mode = base.mode_bin();
  const bool in_range = base.bin_low(mode) >= 23.5 && base.bin_high(mode) <= 26.5;
  ok &= in_range;
  detail += "baseline mode bin [" + fmt(base.bin_low(mode)) + ", " + fmt(base.bin_high(mode)) + ")";
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) only = argv[1];
  std::printf("acceptance suite, %u worker(s)\n", workers());
  report("determinism validation", determinism);
  report("online statistics oracle", online_statistics);
  report("automaton/oracle equivalence", equivalence);
  report("noisy-periodic acceptance property", noisy_periodic_acceptance);
  report("erlang oracle", erlang);
  report("circadian period baseline", baseline_period);
  report("period scaling", period_scaling);
  report("fluctuation trend", fluctuation_trend);
  report("histogram integrity", histograms);
  report("peak means", peaks);
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
