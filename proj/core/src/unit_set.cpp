#include "ddcam/unit_set.hpp"

#include <bit>
#include <sstream>

#include "ddcam/error.hpp"

namespace ddcam {

namespace {
constexpr std::size_t kWordBits = 64;

std::size_t word_count(std::size_t universe) { return (universe + kWordBits - 1) / kWordBits; }
}  // namespace

UnitSet::UnitSet(std::size_t universe) : universe_(universe), words_(word_count(universe), 0) {}

UnitSet::UnitSet(std::size_t universe, std::initializer_list<std::size_t> indices)
    : UnitSet(universe) {
  for (auto i : indices) insert(i);
}

UnitSet::UnitSet(std::size_t universe, const std::vector<std::size_t>& indices)
    : UnitSet(universe) {
  for (auto i : indices) insert(i);
}

UnitSet UnitSet::full(std::size_t universe) {
  UnitSet s(universe);
  for (std::size_t w = 0; w < s.words_.size(); ++w) s.words_[w] = ~std::uint64_t{0};
  if (const auto tail = universe % kWordBits; tail != 0) {
    s.words_.back() = (std::uint64_t{1} << tail) - 1;
  }
  return s;
}

UnitSet UnitSet::from_mask(std::size_t universe, std::uint64_t mask) {
  if (universe > kWordBits) throw DomainError("UnitSet::from_mask: universe exceeds 64 units");
  UnitSet s(universe);
  if (universe == 0) return s;
  if (universe < kWordBits && (mask >> universe) != 0) {
    throw DomainError("UnitSet::from_mask: mask has bits beyond the universe");
  }
  s.words_[0] = mask;
  return s;
}

std::size_t UnitSet::size() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

void UnitSet::check_index(std::size_t index) const {
  if (index >= universe_) {
    throw DomainError("unit index " + std::to_string(index) + " out of range for " +
                      std::to_string(universe_) + " units");
  }
}

void UnitSet::check_same_universe(const UnitSet& other) const {
  if (other.universe_ != universe_) {
    throw DomainError("unit sets over different universes (" + std::to_string(universe_) +
                      " vs " + std::to_string(other.universe_) + ")");
  }
}

bool UnitSet::contains(std::size_t index) const {
  check_index(index);
  return (words_[index / kWordBits] >> (index % kWordBits)) & 1U;
}

void UnitSet::insert(std::size_t index) {
  check_index(index);
  words_[index / kWordBits] |= std::uint64_t{1} << (index % kWordBits);
}

void UnitSet::erase(std::size_t index) {
  check_index(index);
  words_[index / kWordBits] &= ~(std::uint64_t{1} << (index % kWordBits));
}

std::vector<std::size_t> UnitSet::indices() const {
  std::vector<std::size_t> out;
  out.reserve(size());
  for (std::size_t w = 0; w < words_.size(); ++w) {
    auto bits = words_[w];
    while (bits != 0) {
      out.push_back(w * kWordBits + static_cast<std::size_t>(std::countr_zero(bits)));
      bits &= bits - 1;
    }
  }
  return out;
}

UnitSet UnitSet::without(std::size_t index) const {
  UnitSet s = *this;
  s.erase(index);
  return s;
}

UnitSet UnitSet::minus(const UnitSet& other) const {
  check_same_universe(other);
  UnitSet s = *this;
  for (std::size_t w = 0; w < words_.size(); ++w) s.words_[w] &= ~other.words_[w];
  return s;
}

UnitSet UnitSet::united(const UnitSet& other) const {
  check_same_universe(other);
  UnitSet s = *this;
  for (std::size_t w = 0; w < words_.size(); ++w) s.words_[w] |= other.words_[w];
  return s;
}

bool UnitSet::is_subset_of(const UnitSet& other) const {
  check_same_universe(other);
  for (std::size_t w = 0; w < words_.size(); ++w) {
    if ((words_[w] & ~other.words_[w]) != 0) return false;
  }
  return true;
}

std::string UnitSet::to_string() const {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (auto i : indices()) {
    if (!first) os << ", ";
    os << i;
    first = false;
  }
  os << '}';
  return os.str();
}

std::size_t UnitSetHash::operator()(const UnitSet& s) const noexcept {
  // FNV-1a over the words, seeded with the universe size.
  std::uint64_t h = 1469598103934665603ULL ^ s.universe();
  for (auto w : s.words()) {
    h ^= w;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

}  // namespace ddcam
