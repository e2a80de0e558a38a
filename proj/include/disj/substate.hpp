#pragma once

#include <cstdint>

#include "disj/dist.hpp"
#include "disj/protocol.hpp"

namespace disj {

// Result of truncating a joint at log-ratio threshold c: nu is mu restricted
// to the atoms with log2 density ratio <= c, renormalized. For one-sided
// truncation, tv equals removed_mass exactly.
struct TruncationResult {
    JointDist nu;
    double threshold_c = 0.0;
    double removed_mass = 0.0;
    double tv = 0.0;
    double i_inf_nu = 0.0;
};

TruncationResult truncate_joint(const JointDist& mu, double c);

// Smallest positive threshold, over the distinct log ratios of mu's support
// (floored just above zero), whose truncation removes at most tv_target mass.
// The largest ratio always qualifies with nothing removed.
double find_threshold(const JointDist& mu, double tv_target);

// The reference bound 4(k+1)/tv_target for comparison against measured
// thresholds.
inline double substate_reference_bits(double k_bits, double tv_target) {
    return 4.0 * (k_bits + 1.0) / tv_target;
}

enum class MiMode : std::uint8_t { PaperConstants, Measured };

// Everything input-independent about one bounded-mutual-information run:
// the truncation, the surrogate product marginals, and the shrunken error
// parameter eps_prime fed to the product-distribution protocol.
struct MiContext {
    TruncationResult trunc;
    double k_bits = 0.0;      // mutual information of mu
    double eps = 0.0;
    double eps_prime = 0.0;
    MiMode mode = MiMode::Measured;
    Dist nu_a, nu_b;
};

MiContext make_mi_context(const JointDist& mu, double eps, MiMode mode);

// Builds nu with tv <= eps/2, then runs the product protocol on
// nu_A x nu_B with the shrunken error parameter. Cost accounting unchanged.
RunOutcome bounded_mi_protocol(const JointDist& mu, double eps, std::uint64_t seed,
                               SubsetMask a, SubsetMask b, MiMode mode);

}  // namespace disj
