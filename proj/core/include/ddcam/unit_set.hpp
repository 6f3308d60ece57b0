#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

namespace ddcam {

/// Subset of the representational units {0, ..., universe-1}.
///
/// Stored as a packed bitset so that it can key the oracle memo table
/// directly. Iteration (indices()) is always in increasing order.
class UnitSet {
 public:
  UnitSet() = default;
  explicit UnitSet(std::size_t universe);
  UnitSet(std::size_t universe, std::initializer_list<std::size_t> indices);
  UnitSet(std::size_t universe, const std::vector<std::size_t>& indices);

  static UnitSet full(std::size_t universe);
  static UnitSet empty(std::size_t universe) { return UnitSet(universe); }
  // Bit i of `mask` selects unit i. Requires universe <= 64.
  static UnitSet from_mask(std::size_t universe, std::uint64_t mask);

  std::size_t universe() const { return universe_; }
  std::size_t size() const;
  bool is_empty() const { return size() == 0; }

  bool contains(std::size_t index) const;
  void insert(std::size_t index);
  void erase(std::size_t index);

  std::vector<std::size_t> indices() const;

  UnitSet without(std::size_t index) const;
  UnitSet minus(const UnitSet& other) const;
  UnitSet united(const UnitSet& other) const;
  bool is_subset_of(const UnitSet& other) const;

  const std::vector<std::uint64_t>& words() const { return words_; }

  // "{0, 3, 7}"
  std::string to_string() const;

  friend bool operator==(const UnitSet&, const UnitSet&) = default;

 private:
  void check_index(std::size_t index) const;
  void check_same_universe(const UnitSet& other) const;

  std::size_t universe_ = 0;
  std::vector<std::uint64_t> words_;
};

struct UnitSetHash {
  std::size_t operator()(const UnitSet& s) const noexcept;
};

}  // namespace ddcam
