#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "ddcam/unit_set.hpp"

namespace ddcam {

// Maps an active unit set to the predicted class. Must be pure.
using Classifier = std::function<std::size_t(const UnitSet&)>;

struct SearchStats {
  std::size_t forward_evaluations = 0;  // memo misses
  std::size_t total_requests = 0;       // including memo hits
  std::size_t rounds = 0;               // DD invocations / one-pass sweeps
  std::size_t repair_evaluations = 0;   // forward evaluations spent in repair sweeps
  std::chrono::duration<double, std::milli> wall_time{0};
};

/// Memoized prediction test "does activating only S keep the target class?".
///
/// The target class is computed once from the full unit set at construction
/// and frozen; that evaluation is cached but not counted. Every request is
/// counted in total_requests; only memo misses count as forward evaluations.
/// The memo is keyed on the exact active set and is safe for concurrent use.
class PredictionOracle {
 public:
  PredictionOracle(std::size_t universe, Classifier classify);

  std::size_t universe() const { return universe_; }
  std::size_t target() const { return target_; }

  std::size_t classify(const UnitSet& active);
  bool preserves(const UnitSet& active) { return classify(active) == target_; }

  // Like classify(), but with a value computed elsewhere for this exact set
  // (speculative parallel evaluation). Accounting is identical to classify().
  std::size_t classify_with(const UnitSet& active, std::size_t computed);

  // Pure evaluation: no memo, no accounting.
  std::size_t evaluate(const UnitSet& active) const { return classify_(active); }
  std::optional<std::size_t> cached(const UnitSet& active) const;

  // When on, memo hits are re-evaluated and a differing class raises
  // NondeterminismError. Re-evaluations are not counted.
  void set_verify_memo_hits(bool on) { verify_hits_ = on; }

  SearchStats counters() const;

 private:
  std::size_t record(const UnitSet& active, std::size_t cls);

  std::size_t universe_;
  Classifier classify_;
  std::size_t target_ = 0;
  bool verify_hits_ = false;

  mutable std::mutex mutex_;
  std::unordered_map<UnitSet, std::size_t, UnitSetHash> memo_;
  std::atomic<std::size_t> forward_evaluations_{0};
  std::atomic<std::size_t> total_requests_{0};
};

struct SearchResult {
  UnitSet selected;
  SearchStats stats;
};

struct GeneralOptions {
  std::size_t initial_granularity = 2;
  // Evaluate the complements of a round concurrently. Selection is still by
  // lowest partition index and accounting matches the sequential run exactly.
  bool parallel = false;
  // Called at the start of every DD invocation with the candidate set and granularity.
  std::function<void(const UnitSet&, std::size_t)> on_round;
};

struct OnePassOptions {
  // Re-sweep the survivors until nothing more can be removed.
  bool repair = true;
};

// Splits s into n contiguous runs (in index order) whose sizes differ by at
// most one, larger runs first. Requires 1 <= n <= |s|.
std::vector<UnitSet> partition(const UnitSet& s, std::size_t n);

// Delta debugging over complements: on the first preserving complement the
// search restarts on it with granularity 2, otherwise granularity grows to
// min(2n, |S|) until n == |S|. Sets of one unit test the empty set directly.
SearchResult find_minimal_general(PredictionOracle& oracle, const GeneralOptions& options = {});

// Tests each unit once, in index order, against the current survivors and
// drops it when the prediction is kept. Exactly M forward evaluations
// without repair.
SearchResult find_minimal_onepass(PredictionOracle& oracle, const OnePassOptions& options = {});

bool is_sufficient(PredictionOracle& oracle, const UnitSet& s);
bool is_one_minimal(PredictionOracle& oracle, const UnitSet& s);

inline constexpr std::size_t kBruteForceMaxUnits = 20;

// Every 1-minimal sufficient set, by exhaustive enumeration of the 2^M subsets,
// ordered by bitmask value. Refuses M > kBruteForceMaxUnits. Does not touch the
// oracle's memo or counters.
std::vector<UnitSet> brute_force_minimal_sets(const PredictionOracle& oracle);

}  // namespace ddcam
