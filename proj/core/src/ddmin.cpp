#include "ddcam/ddmin.hpp"

#include <algorithm>
#include <exception>
#include <thread>

#include "ddcam/error.hpp"

namespace ddcam {

namespace {

using Clock = std::chrono::steady_clock;

SearchStats since(const SearchStats& before, const SearchStats& after, Clock::time_point t0) {
  SearchStats s;
  s.forward_evaluations = after.forward_evaluations - before.forward_evaluations;
  s.total_requests = after.total_requests - before.total_requests;
  s.wall_time = Clock::now() - t0;
  return s;
}

// Evaluates every set not already memoized, spreading the work over threads.
std::vector<std::size_t> evaluate_speculatively(const PredictionOracle& oracle,
                                                const std::vector<UnitSet>& sets) {
  std::vector<std::size_t> values(sets.size());
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (auto hit = oracle.cached(sets[i])) {
      values[i] = *hit;
    } else {
      missing.push_back(i);
    }
  }
  if (missing.empty()) return values;

  const std::size_t workers =
      std::min<std::size_t>(missing.size(), std::max(1U, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (auto k = next.fetch_add(1); k < missing.size(); k = next.fetch_add(1)) {
            values[missing[k]] = oracle.evaluate(sets[missing[k]]);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return values;
}

}  // namespace

PredictionOracle::PredictionOracle(std::size_t universe, Classifier classify)
    : universe_(universe), classify_(std::move(classify)) {
  if (!classify_) throw DomainError("PredictionOracle needs a classifier");
  const UnitSet full = UnitSet::full(universe_);
  target_ = classify_(full);
  memo_.emplace(full, target_);
}

std::optional<std::size_t> PredictionOracle::cached(const UnitSet& active) const {
  std::lock_guard lock(mutex_);
  if (auto it = memo_.find(active); it != memo_.end()) return it->second;
  return std::nullopt;
}

std::size_t PredictionOracle::record(const UnitSet& active, std::size_t cls) {
  std::lock_guard lock(mutex_);
  auto [it, inserted] = memo_.emplace(active, cls);
  if (inserted) {
    ++forward_evaluations_;
  } else if (it->second != cls) {
    throw NondeterminismError("oracle returned class " + std::to_string(cls) + " for " +
                              active.to_string() + ", previously " + std::to_string(it->second));
  }
  return it->second;
}

std::size_t PredictionOracle::classify(const UnitSet& active) {
  if (active.universe() != universe_) {
    throw DomainError("active set over " + std::to_string(active.universe()) +
                      " units queried on an oracle over " + std::to_string(universe_));
  }
  ++total_requests_;
  if (auto hit = cached(active)) {
    if (verify_hits_) record(active, classify_(active));
    return *hit;
  }
  return record(active, classify_(active));
}

std::size_t PredictionOracle::classify_with(const UnitSet& active, std::size_t computed) {
  ++total_requests_;
  if (auto hit = cached(active)) {
    if (*hit != computed) {
      throw NondeterminismError("oracle returned class " + std::to_string(computed) + " for " +
                                active.to_string() + ", previously " + std::to_string(*hit));
    }
    return *hit;
  }
  return record(active, computed);
}

SearchStats PredictionOracle::counters() const {
  SearchStats s;
  s.forward_evaluations = forward_evaluations_.load();
  s.total_requests = total_requests_.load();
  return s;
}

std::vector<UnitSet> partition(const UnitSet& s, std::size_t n) {
  const auto members = s.indices();
  if (n < 1 || n > members.size()) {
    throw DomainError("partition: cannot split " + std::to_string(members.size()) +
                      " units into " + std::to_string(n) + " parts");
  }
  const std::size_t base = members.size() / n;
  const std::size_t larger = members.size() % n;
  std::vector<UnitSet> parts;
  parts.reserve(n);
  std::size_t pos = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t len = base + (p < larger ? 1 : 0);
    UnitSet part(s.universe());
    for (std::size_t k = 0; k < len; ++k) part.insert(members[pos++]);
    parts.push_back(std::move(part));
  }
  return parts;
}

SearchResult find_minimal_general(PredictionOracle& oracle, const GeneralOptions& options) {
  const auto t0 = Clock::now();
  const auto before = oracle.counters();

  UnitSet current = UnitSet::full(oracle.universe());
  std::size_t granularity = std::max<std::size_t>(2, options.initial_granularity);
  std::size_t rounds = 0;

  while (true) {
    ++rounds;
    const std::size_t size = current.size();
    if (size <= 1) {
      if (options.on_round) options.on_round(current, size);
      if (size == 1 && oracle.preserves(UnitSet::empty(oracle.universe()))) {
        current = UnitSet::empty(oracle.universe());
      }
      break;
    }
    granularity = std::min(granularity, size);
    if (options.on_round) options.on_round(current, granularity);

    std::vector<UnitSet> complements;
    complements.reserve(granularity);
    for (const auto& part : partition(current, granularity)) complements.push_back(current.minus(part));

    std::optional<std::size_t> removable;
    if (options.parallel) {
      const auto values = evaluate_speculatively(oracle, complements);
      for (std::size_t i = 0; i < complements.size(); ++i) {
        if (oracle.classify_with(complements[i], values[i]) == oracle.target()) {
          removable = i;
          break;
        }
      }
    } else {
      for (std::size_t i = 0; i < complements.size(); ++i) {
        if (oracle.preserves(complements[i])) {
          removable = i;
          break;
        }
      }
    }

    if (removable) {
      current = std::move(complements[*removable]);
      granularity = 2;
      continue;
    }
    if (granularity == size) break;
    granularity = std::min(2 * granularity, size);
  }

  SearchResult result{std::move(current), since(before, oracle.counters(), t0)};
  result.stats.rounds = rounds;
  return result;
}

SearchResult find_minimal_onepass(PredictionOracle& oracle, const OnePassOptions& options) {
  const auto t0 = Clock::now();
  const auto before = oracle.counters();

  UnitSet current = UnitSet::full(oracle.universe());
  for (std::size_t i = 0; i < oracle.universe(); ++i) {
    auto candidate = current.without(i);
    if (oracle.preserves(candidate)) current = std::move(candidate);
  }
  std::size_t rounds = 1;

  const auto after_pass = oracle.counters();
  if (options.repair) {
    bool removed = true;
    while (removed) {
      ++rounds;
      removed = false;
      for (auto i : current.indices()) {
        auto candidate = current.without(i);
        if (oracle.preserves(candidate)) {
          current = std::move(candidate);
          removed = true;
        }
      }
    }
  }

  const auto after = oracle.counters();
  SearchResult result{std::move(current), since(before, after, t0)};
  result.stats.rounds = rounds;
  result.stats.repair_evaluations = after.forward_evaluations - after_pass.forward_evaluations;
  return result;
}

bool is_sufficient(PredictionOracle& oracle, const UnitSet& s) { return oracle.preserves(s); }

bool is_one_minimal(PredictionOracle& oracle, const UnitSet& s) {
  if (!oracle.preserves(s)) return false;
  for (auto i : s.indices()) {
    if (oracle.preserves(s.without(i))) return false;
  }
  return true;
}

std::vector<UnitSet> brute_force_minimal_sets(const PredictionOracle& oracle) {
  const std::size_t m = oracle.universe();
  if (m > kBruteForceMaxUnits) {
    throw DomainError("brute force refused: " + std::to_string(m) + " units exceeds the limit of " +
                      std::to_string(kBruteForceMaxUnits));
  }
  const std::uint64_t count = std::uint64_t{1} << m;
  std::vector<char> sufficient(count);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    sufficient[mask] = oracle.evaluate(UnitSet::from_mask(m, mask)) == oracle.target();
  }
  std::vector<UnitSet> minimal;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    if (!sufficient[mask]) continue;
    bool one_minimal = true;
    for (std::size_t i = 0; i < m && one_minimal; ++i) {
      const std::uint64_t bit = std::uint64_t{1} << i;
      if ((mask & bit) && sufficient[mask ^ bit]) one_minimal = false;
    }
    if (one_minimal) minimal.push_back(UnitSet::from_mask(m, mask));
  }
  return minimal;
}

}  // namespace ddcam
