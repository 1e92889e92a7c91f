#include "gmrs/sets.hpp"

#include <algorithm>

namespace gmrs {

std::vector<UserSet> nonempty_subsets(UserSet base) {
  std::vector<UserSet> out;
  const std::uint32_t b = base.bits();
  // Enumerate submasks of b, then sort canonically.
  for (std::uint32_t m = b; m != 0; m = (m - 1) & b)
    out.push_back(UserSet::of_bits(m));
  std::sort(out.begin(), out.end(), canonical_less);
  return out;
}

std::vector<UserSet> supersets_within(UserSet base, UserSet universe) {
  if (!base.subset_of(universe))
    throw std::invalid_argument("supersets_within: base not contained in universe");
  std::vector<UserSet> out;
  const std::uint32_t free = universe.minus(base).bits();
  // Enumerate submasks of the free positions (including the empty one).
  std::uint32_t m = free;
  while (true) {
    out.push_back(UserSet::of_bits(base.bits() | m));
    if (m == 0) break;
    m = (m - 1) & free;
  }
  std::sort(out.begin(), out.end(), canonical_less);
  return out;
}

}  // namespace gmrs
