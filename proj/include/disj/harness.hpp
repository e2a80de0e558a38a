#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "disj/dist.hpp"
#include "disj/protocol.hpp"
#include "disj/substate.hpp"

namespace disj {

// Exhaustive evaluation refuses pair grids beyond this many runs.
inline constexpr long long kExactPairGuard = 1ll << 26;

struct EvalReport {
    double weighted_error = 0.0;
    long long max_cost_bits = 0;
    double mean_cost_bits = 0.0;  // mass-weighted
    std::map<std::string, long long> stop_histogram;
    long long pairs_evaluated = 0;
    double wall_time_seconds = 0.0;
    std::optional<double> confidence_half_width;  // sampled mode, 99% binomial
};

// Runs the protocol for every support pair of mu_a x mu_b, accumulating mass
// over incorrect answers. Deterministic: fixed chunking with an in-order
// merge, so thread count does not affect the result.
EvalReport evaluate_exact(const Dist& mu_a, const Dist& mu_b, double eps,
                          std::uint64_t seed, double t_cap_constant = 2.0);

// i.i.d. pairs from mu_a x mu_b; reports error frequency with a 99% binomial
// confidence half-width.
EvalReport evaluate_sampled(const Dist& mu_a, const Dist& mu_b, double eps,
                            std::uint64_t seed, long long num_samples,
                            double t_cap_constant = 2.0);

// Bounded-mutual-information wrapper evaluation over a joint distribution:
// the protocol runs on the truncated surrogate's product marginals while the
// error is weighted by (or sampled from) mu itself.
EvalReport evaluate_mi_exact(const JointDist& mu, double eps, std::uint64_t seed,
                             MiMode mode, double t_cap_constant = 2.0);
EvalReport evaluate_mi_sampled(const JointDist& mu, double eps, std::uint64_t seed,
                               long long num_samples, MiMode mode,
                               double t_cap_constant = 2.0);

// A distribution family for sweeps; parameters are resolved per ground-set
// size with a stream derived from the sweep seed.
struct GeneratorSpec {
    std::string kind;
    int k = -1;            // uniform-k-subsets; -1 means ceil(sqrt(n))
    int support_size = 64;  // random-sparse
    std::vector<double> p;  // per-element-independent; empty means draw from the range
    double p_low = 0.35;
    double p_high = 0.65;
    double lambda = 0.5;        // correlated-mixture
    int mixture_support = -1;   // correlated-mixture; -1 means full 2^n
};

Dist realize_marginal(const GeneratorSpec& spec, int n, RandomStream& rng);
JointDist realize_joint(const GeneratorSpec& spec, int n, RandomStream& rng);

// Seeded random product pair biased toward small sets, so the disjointness
// probability tends to clear extraction-lemma preconditions at desk scale.
// Even seeds give per-element-independent marginals, odd seeds sparse ones.
std::pair<Dist, Dist> biased_product_pair(int n, std::uint64_t seed);

struct FamilyConfig {
    std::string name;
    GeneratorSpec gen;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::vector<int> n_values;
    std::vector<double> eps_values;
    std::vector<FamilyConfig> families;
    bool sampled = false;
    long long num_samples = 100000;
    double t_cap_constant = 2.0;
    bool keep_going = false;
};

struct SweepRow {
    int n = 0;
    double eps = 0.0;
    std::string family;
    std::optional<EvalReport> report;
    std::string error;  // nonempty on failure
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::string csv;
    bool had_errors = false;
};

// Evaluates every (n, eps, family) cell and renders the fixed-format CSV:
// one metadata comment, a header, one row per cell, and per-family fitted
// max_cost / sqrt(n log2(1/eps)) ratios as trailing comments. Output is
// byte-identical across runs with the same config.
SweepResult run_sweep(const ExperimentConfig& config);

// Fixed 9-significant-digit float rendering used everywhere CSV determinism
// matters.
std::string format_double(double v);

}  // namespace disj
