#pragma once

// Joint execution of a model and an automaton.

#include <cstdint>
#include <string>
#include <vector>

#include "hasl/desp.hpp"
#include "hasl/lha.hpp"

namespace hasl {

struct Budget {
  std::uint64_t max_events = 1'000'000'000;
  double max_time = 1e6;
};

enum class Verdict { Accepted, Rejected };

enum class RejectReason { None, NoEdge, Deadlock, Budget, InitialInvariant, EndOfTrace };

std::string_view to_string(RejectReason r) noexcept;

enum class AverageMode { Time, Event };

/// Running statistics of one expression over automaton variables.
struct PathStat {
  double last = 0.0;
  double min = 0.0;
  double max = 0.0;
  double integral = 0.0;   // time integral, trapezoid rule between moves
  double event_sum = 0.0;  // sum of values after each move
  std::uint64_t samples = 0;

  double average(AverageMode mode, double duration) const noexcept;
};

struct SyncOptions {
  Budget budget;
  /// Expressions over automaton variables to track along the path.
  std::vector<Expr> tracked;
  bool record_moves = false;
};

/// Tracks every automaton variable by name.
std::vector<Expr> track_all_variables(const Lha& lha);

struct SyncState {
  Marking marking;
  std::uint32_t location = 0;
  std::vector<double> valuation;
  double time = 0.0;
};

struct Move {
  double time = 0.0;
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  std::size_t edge = 0;
  std::string event;  // empty for autonomous moves
};

struct SyncOutcome {
  Verdict verdict = Verdict::Rejected;
  RejectReason reason = RejectReason::None;
  SyncState final_state;
  ArrayState arrays;
  std::vector<PathStat> stats;  // parallel to SyncOptions::tracked
  std::uint64_t event_count = 0;
  double model_time = 0.0;
  std::vector<Move> moves;

  bool accepted() const noexcept { return verdict == Verdict::Accepted; }
};

/// Runs D x A on a fresh trajectory of `model`. `lha` must be bound against
/// the model's places and transition names.
SyncOutcome synchronize(const GspnModel& model, const BoundLha& lha, RandomSource& rng,
                        const SyncOptions& options = {});

/// Same decision procedure on a recorded trajectory.
SyncOutcome replay(const std::vector<std::string>& places, const Marking& initial_marking,
                   const std::vector<TimedEvent>& events, const Lha& lha, const SyncOptions& options = {});

}  // namespace hasl
