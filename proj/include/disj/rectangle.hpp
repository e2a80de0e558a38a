#pragma once

#include <cstdint>
#include <optional>

#include "disj/dist.hpp"
#include "disj/rng.hpp"
#include "disj/sets.hpp"

namespace disj {

// A full rectangle for disjointness: every A in 2^u and B in 2^{x\u} are
// disjoint by construction. measure_a is the da-mass of 2^u, measure_b the
// db-mass of 2^{x\u}.
struct RectangleWitness {
    enum class Mode : std::uint8_t { Exact, Sampled };

    SubsetMask u;
    double measure_a = 0.0;
    double measure_b = 0.0;
    int ell = 0;
    Mode mode = Mode::Exact;
    // Whether measure_a >= 2^{-3|x|/ell} and measure_b >= eps^ell / 2 held at
    // extraction time. Always true in exact mode; sampled mode may fall back
    // to a best-effort witness below the guarantee.
    bool meets_bounds = true;
};

// floor(sqrt(n / log2(1/eps))), clamped below at 1. Requires
// eps in (2^-n, 1/2), both strict.
int lemma_ell(int n, double eps);

// Derandomized extraction: exhaustively scans all u subseteq x for the
// largest product downset(da, u) * downset(db, x\u); ties break toward the
// numerically smallest mask. Requires |x| <= 24, supports inside x, and
// disjoint_probability(da, db) >= eps.
RectangleWitness extract_exact(const Dist& da, const Dist& db, double eps, GroundSet x);

// The probabilistic construction: repeatedly draw ell sets from da, take the
// union, and accept when both measures clear the guarantees. Returns the
// first accepted witness, else the best-seen one flagged below-guarantee,
// else nullopt when max_retries == 0.
std::optional<RectangleWitness> extract_sampled(const Dist& da, const Dist& db, double eps,
                                                GroundSet x, RandomStream& rng,
                                                int max_retries);

struct WitnessReport {
    double recomputed_a = 0.0;
    double recomputed_b = 0.0;
    bool u_within_x = false;
    bool sampled_pairs_disjoint = false;
    bool measures_match = false;
    bool bound_a_met = false;
    bool bound_b_met = false;

    bool all_ok() const {
        return u_within_x && sampled_pairs_disjoint && measures_match && bound_a_met &&
               bound_b_met;
    }
};

// Recomputes both measures from scratch, checks containment, samples 100
// pairs from the rectangle for bitwise disjointness, and evaluates the
// lemma-level bounds at the witness's recorded ell.
WitnessReport verify_witness(const Dist& da, const Dist& db, const RectangleWitness& w,
                             GroundSet x, double eps, RandomStream& rng);

namespace detail {

// Best product over all u of table_a[u] * table_b[full ^ u] with
// smallest-mask tie-break; tables are over compressed coordinates.
struct ScanResult {
    std::uint64_t u_compressed = 0;
    double measure_a = 0.0;
    double measure_b = 0.0;
};
ScanResult exact_scan(const std::vector<double>& table_a, const std::vector<double>& table_b,
                      int xn);

}  // namespace detail

}  // namespace disj
