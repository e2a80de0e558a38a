#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "disj/rng.hpp"
#include "disj/sets.hpp"

namespace disj {

inline constexpr double kNormTolerance = 1e-9;

// Dense-table operations (sum-over-subsets transform, full downset tables)
// refuse ground sets beyond this many elements.
inline constexpr int kDenseTableBits = 24;

// Sparse finitely-supported distribution over subsets of [n]. Support entries
// are sorted by mask bits, distinct, strictly positive, and sum to 1 within
// kNormTolerance. The cumulative array serves inverse-CDF sampling.
struct Dist {
    int n = 0;
    std::vector<std::pair<SubsetMask, double>> support;
    std::vector<double> cdf;

    static Dist make(int n, std::vector<std::pair<std::uint64_t, double>> entries);

    // Mass of a single atom; 0 when absent from the support.
    double mass_of(std::uint64_t bits) const;
};

// Sparse distribution over pairs of subsets (a possibly-correlated joint).
struct JointDist {
    struct Entry {
        std::uint64_t a = 0;
        std::uint64_t b = 0;
        double w = 0.0;
    };

    int n = 0;
    std::vector<Entry> support;  // sorted by (a, b), distinct, w > 0
    std::vector<double> cdf;

    static JointDist make(int n, std::vector<Entry> entries);

    Dist marginal_a() const;
    Dist marginal_b() const;
};

// Information summary for a joint distribution.
struct InfoReport {
    double mutual_information_bits = 0.0;
    double i_infinity_bits = 0.0;
    std::optional<double> tv_to_reference;
};

SubsetMask sample(const Dist& d, RandomStream& rng);
std::pair<SubsetMask, SubsetMask> sample(const JointDist& j, RandomStream& rng);

// P_{A~d}[A subseteq u], by filtering the support.
double downset_measure(const Dist& d, SubsetMask u);

// Downset measure of every u simultaneously via the sum-over-subsets (zeta)
// transform, O(n 2^n) additions; indexed by u's bits. Guarded at n <= 24.
std::vector<double> downset_measure_all(const Dist& d);

// In-place zeta transform over an already-populated 2^nbits table.
void zeta_transform(std::vector<double>& table, int nbits);

// P_{A~da, B~db}[A and B disjoint].
double disjoint_probability(const Dist& da, const Dist& db);

// Condition d on membership in the A-side (resp. B-side) family and
// renormalize. nullopt signals zero surviving mass (degenerate family).
std::optional<Dist> restrict_a(const Dist& d, const FamilyState& state);
std::optional<Dist> restrict_b(const Dist& d, const FamilyState& state);

// Pushforward of d under A -> A intersect x; colliding images merge.
Dist project(const Dist& d, GroundSet x);

double mutual_information(const JointDist& j);
double i_infinity(const JointDist& j);
double tv_distance(const JointDist& p, const JointDist& q);

// Generators for the test corpus.
Dist generate_uniform_all(int n);
Dist generate_uniform_k_subsets(int n, int k);
Dist generate_random_sparse(int n, int support_size, RandomStream& rng);
Dist generate_per_element(std::span<const double> p);

// lambda * diagonal-uniform + (1 - lambda) * product-uniform over a support of
// support_size masks (negative means the full 2^n, guarded by pair count).
JointDist generate_correlated_mixture(int n, double lambda, RandomStream& rng,
                                      int support_size = -1);

}  // namespace disj
