#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace disj {

inline constexpr int kMaxGroundSetSize = 63;

// Bits of the full ground set [n]; positions 0..n-1 carry elements 1..n.
constexpr std::uint64_t full_bits(int n) {
    return n <= 0 ? 0 : (~std::uint64_t{0} >> (64 - n));
}

// A subset of the ground set [n], packed into one machine word.
struct SubsetMask {
    std::uint64_t bits = 0;
    int n = 0;

    friend bool operator==(const SubsetMask&, const SubsetMask&) = default;
};

// Validating constructor; rejects bits outside [n] and n outside [1, 63].
SubsetMask make_mask(std::uint64_t bits, int n);

inline int set_size(SubsetMask m) { return std::popcount(m.bits); }
inline bool is_subset(SubsetMask a, SubsetMask u) { return (a.bits & ~u.bits) == 0; }
inline bool masks_disjoint(SubsetMask a, SubsetMask b) { return (a.bits & b.bits) == 0; }

inline SubsetMask intersect(SubsetMask a, SubsetMask b) {
    return SubsetMask{a.bits & b.bits, a.n};
}

// x \ u, both over the same ground set.
inline SubsetMask difference(SubsetMask x, SubsetMask u) {
    return SubsetMask{x.bits & ~u.bits, x.n};
}

// Bitwise union; the empty list yields the empty mask with n = 0.
SubsetMask union_of(std::span<const SubsetMask> masks);

// Human-readable form with 1-based elements, e.g. "{1,3,5}"; "{}" when empty.
std::string to_set_string(SubsetMask m);

// Accepts either an unsigned decimal word or the "{1,3,5}" element form.
SubsetMask parse_mask(std::string_view text, int n);

// Gather the bits of m that sit at the positions of x into a compact
// |x|-bit word (and the inverse scatter). Order-preserving for masks <= x.
std::uint64_t compress_bits(std::uint64_t m, std::uint64_t x);
std::uint64_t expand_bits(std::uint64_t c, std::uint64_t x);

struct GroundSet {
    SubsetMask mask;

    int size() const { return set_size(mask); }
    friend bool operator==(const GroundSet&, const GroundSet&) = default;
};

inline GroundSet full_ground_set(int n) { return GroundSet{SubsetMask{full_bits(n), n}}; }

// Removal-history representation of the family pair (A_i, B_i): a set is still
// in the A-side family iff it is not contained in any removed_a entry, and
// symmetrically for the B side. removed_b stores the tested mask V = X \ U
// directly. Membership is monotone: families only shrink.
struct FamilyState {
    GroundSet ground;
    std::vector<SubsetMask> removed_a;
    std::vector<SubsetMask> removed_b;

    void add_removal_a(SubsetMask u);
    void add_removal_b(SubsetMask v);
};

bool family_contains_a(const FamilyState& state, SubsetMask a);
bool family_contains_b(const FamilyState& state, SubsetMask b);

}  // namespace disj
