#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmrs {

// A set of user indices (0-based), stored as a bitmask.  Supports at most 16
// users, which keeps every subset enumeration that appears in the layer
// algebra comfortably in range.
class UserSet {
 public:
  static constexpr int kMaxUsers = 16;

  constexpr UserSet() = default;

  static constexpr UserSet of_bits(std::uint32_t bits) { return UserSet(bits); }

  static UserSet single(int user) {
    check_user(user);
    return UserSet(1u << user);
  }

  static UserSet all(int num_users) {
    if (num_users < 0 || num_users > kMaxUsers)
      throw std::invalid_argument("UserSet::all: bad user count");
    return UserSet(num_users == 0 ? 0u : ((1u << num_users) - 1u));
  }

  static UserSet of_users(std::initializer_list<int> users) {
    std::uint32_t bits = 0;
    for (int u : users) {
      check_user(u);
      bits |= 1u << u;
    }
    return UserSet(bits);
  }

  constexpr std::uint32_t bits() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool contains(int user) const { return (bits_ >> user) & 1u; }
  constexpr bool subset_of(UserSet o) const { return (bits_ & ~o.bits_) == 0; }
  constexpr bool intersects(UserSet o) const { return (bits_ & o.bits_) != 0; }

  constexpr UserSet operator|(UserSet o) const { return UserSet(bits_ | o.bits_); }
  constexpr UserSet operator&(UserSet o) const { return UserSet(bits_ & o.bits_); }
  constexpr UserSet minus(UserSet o) const { return UserSet(bits_ & ~o.bits_); }

  constexpr bool operator==(const UserSet&) const = default;

  std::vector<int> members() const {
    std::vector<int> out;
    out.reserve(size());
    for (std::uint32_t b = bits_; b != 0; b &= b - 1)
      out.push_back(std::countr_zero(b));
    return out;
  }

  std::string to_string() const {
    std::string s = "{";
    bool first = true;
    for (int u : members()) {
      if (!first) s += ",";
      s += std::to_string(u);
      first = false;
    }
    return s + "}";
  }

 private:
  explicit constexpr UserSet(std::uint32_t bits) : bits_(bits) {}

  static void check_user(int user) {
    if (user < 0 || user >= kMaxUsers)
      throw std::invalid_argument("user index out of range");
  }

  std::uint32_t bits_ = 0;
};

// Canonical ordering used everywhere a list of sets is materialized:
// ascending cardinality, ties broken lexicographically on the sorted element
// lists.  For sets of equal size, the lexicographically smaller element list
// is the one whose lowest differing element is smaller, which the bit trick
// below reads off without materializing the lists.
inline bool canonical_less(UserSet a, UserSet b) {
  if (a.size() != b.size()) return a.size() < b.size();
  if (a == b) return false;
  const std::uint32_t diff = a.bits() ^ b.bits();
  const std::uint32_t low = diff & (~diff + 1u);
  return (a.bits() & low) != 0;
}

// All nonempty subsets of `base`, in canonical order.
std::vector<UserSet> nonempty_subsets(UserSet base);

// All supersets of `base` within `universe` (i.e. sets X with base ⊆ X ⊆
// universe), in canonical order.
std::vector<UserSet> supersets_within(UserSet base, UserSet universe);

}  // namespace gmrs
