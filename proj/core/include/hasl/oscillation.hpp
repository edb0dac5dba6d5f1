#pragma once

// Period and peak measurement for stochastic oscillators: automaton
// generators, online statistics and reference scans over recorded traces.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hasl/desp.hpp"
#include "hasl/lha.hpp"

namespace hasl {

/// Running mean after adding `tp` to `n` previous samples with mean `mean`.
double update_mean(double mean, double tp, std::int64_t n) noexcept;

/// Running population variance after adding `tp`. `n` counts samples
/// including `tp`; `s2` and `mean` describe the previous n-1 samples.
double update_fluctuation(double s2, double mean, double tp, std::int64_t n) noexcept;

struct PeriodParams {
  std::string species = "A";
  double L = 1.0;
  double H = 1000.0;
  double initT = 0.0;
  std::int64_t N = 100;
  bool from_high = false;  // anchor periods on entries into the high region
};

/// Locations l0, l0', low, mid, high, end. Variables t, n, top, tp,
/// tbar_p (running mean of the period) and s2_tp (running fluctuation).
Lha build_Aper(const PeriodParams& p);

struct EventPartition {
  std::set<std::string> increasing;
  std::set<std::string> decreasing;
  std::set<std::string> neutral;
};

/// Splits the model's transitions by the sign of their net effect on `species`.
EventPartition classify_events(const GspnModel& model, const std::string& species);

/// Throws ModelError unless the partition covers every transition of the
/// model exactly once.
void validate_partition(const EventPartition& partition, const GspnModel& model);

struct PeaksParams {
  std::string species = "A";
  double delta = 1.0;
  double initT = 0.0;
  std::int64_t N = 100;
  EventPartition partition;
  std::size_t bound = 4096;  // size of the Lmax / Lmin frequency arrays
};

/// Locations l0, start, Max, noisyDec, Min, noisyInc, end. Variables t,
/// n_M, n_m, x, Smax, Smin; arrays Lmax and Lmin. Accepts after N maxima.
Lha build_Apeaks(const PeaksParams& p);

// ---------------------------------------------------------------------------
// Reference scans

/// Value of the observed species from `time` until the next sample.
struct Sample {
  double time = 0.0;
  double value = 0.0;
};

/// Durations between successive entries into the low region (A <= L) that
/// follow a visit of the high region (A >= H). Observation starts at initT;
/// at most `limit` periods are returned.
std::vector<double> offline_periods(const std::vector<Sample>& trace, double L, double H, double initT = 0.0,
                                    std::optional<std::size_t> limit = std::nullopt);

struct Peaks {
  std::vector<double> maxima;
  std::vector<double> minima;
};

/// delta-separated extrema committed by the register procedure, observing
/// from initT and stopping after `max_count` maxima.
Peaks offline_peaks(const std::vector<Sample>& trace, double delta, double initT = 0.0,
                    std::optional<std::size_t> max_count = std::nullopt);

/// Projection of a recorded trajectory on one place; the first sample is the
/// initial marking at time 0.
std::vector<Sample> project(const std::vector<TimedEvent>& events, const Marking& initial, std::size_t place);

struct PilotResult {
  double mean_max = 0.0;  // average over runs of the per-run maximum
  double max = 0.0;       // overall maximum
};

/// Simulates `runs` trajectories up to `horizon` and records the maximum of
/// `species` on each.
PilotResult pilot(const GspnModel& model, const std::string& species, std::uint64_t seed, std::size_t runs = 10,
                  double horizon = 500.0);

}  // namespace hasl
