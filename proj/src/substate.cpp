#include "disj/substate.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "disj/errors.hpp"

namespace disj {

namespace {

// Just above zero: the smallest admissible threshold when every positive-ratio
// atom can be dropped within budget (thresholds must stay positive).
constexpr double kThresholdFloor = 1e-9;

std::vector<double> support_log_ratios(const JointDist& mu) {
    const Dist ma = mu.marginal_a();
    const Dist mb = mu.marginal_b();
    std::vector<double> out;
    out.reserve(mu.support.size());
    for (const auto& e : mu.support) {
        out.push_back(std::log2(e.w / (ma.mass_of(e.a) * mb.mass_of(e.b))));
    }
    return out;
}

}  // namespace

TruncationResult truncate_joint(const JointDist& mu, double c) {
    if (!(c > 0.0)) throw PreconditionError("truncate: threshold must be positive");

    const std::vector<double> ratios = support_log_ratios(mu);
    double removed = 0.0;
    std::vector<JointDist::Entry> kept;
    kept.reserve(mu.support.size());
    for (std::size_t i = 0; i < mu.support.size(); ++i) {
        if (ratios[i] > c) {
            removed += mu.support[i].w;
        } else {
            kept.push_back(mu.support[i]);
        }
    }
    if (kept.empty()) {
        throw PreconditionError("truncate: threshold " + std::to_string(c) +
                                " removes the entire support");
    }

    const double keep_total = 1.0 - removed;
    for (auto& e : kept) e.w /= keep_total;

    TruncationResult result;
    result.nu = JointDist::make(mu.n, std::move(kept));
    result.threshold_c = c;
    result.removed_mass = removed;
    result.tv = tv_distance(mu, result.nu);
    result.i_inf_nu = i_infinity(result.nu);
    return result;
}

double find_threshold(const JointDist& mu, double tv_target) {
    if (!(tv_target > 0.0) || !(tv_target < 1.0)) {
        throw PreconditionError("find_threshold: tv_target must lie in (0, 1)");
    }

    std::vector<double> ratios = support_log_ratios(mu);

    // Sort atoms by descending ratio with a running removed-mass prefix, so
    // each candidate threshold is a single binary search.
    std::vector<std::size_t> order(ratios.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t l, std::size_t r) { return ratios[l] > ratios[r]; });
    std::vector<double> sorted_ratios(order.size());
    std::vector<double> prefix_mass(order.size() + 1, 0.0);
    for (std::size_t i = 0; i < order.size(); ++i) {
        sorted_ratios[i] = ratios[order[i]];
        prefix_mass[i + 1] = prefix_mass[i] + mu.support[order[i]].w;
    }
    // Mass strictly above a threshold c.
    auto removed_above = [&](double c) {
        std::size_t lo = 0;
        std::size_t hi = sorted_ratios.size();
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (sorted_ratios[mid] > c) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        return prefix_mass[lo];
    };

    // Candidates: the distinct positive ratios plus the floor just above 0.
    std::vector<double> candidates;
    candidates.push_back(kThresholdFloor);
    for (double r : sorted_ratios) {
        if (r > kThresholdFloor) candidates.push_back(r);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    for (double c : candidates) {
        const double removed = removed_above(c);
        if (removed < 1.0 && removed <= tv_target) return c;
    }
    // Unreachable: the largest ratio removes nothing.
    return candidates.back();
}

MiContext make_mi_context(const JointDist& mu, double eps, MiMode mode) {
    if (!(eps > 0.0) || !(eps < 0.5)) {
        throw PreconditionError("bounded-mi: eps must lie in (0, 1/2)");
    }

    MiContext ctx;
    ctx.eps = eps;
    ctx.mode = mode;
    ctx.k_bits = mutual_information(mu);

    const double c = find_threshold(mu, eps / 2.0);
    ctx.trunc = truncate_joint(mu, c);
    ctx.nu_a = ctx.trunc.nu.marginal_a();
    ctx.nu_b = ctx.trunc.nu.marginal_b();

    // The error parameter for the product protocol. The measured variant uses
    // the actual max-divergence of the constructed nu, keeping the chain
    // nu(S) <= 2^{I_inf} * eps' <= eps/2 with the measured exponent.
    if (mode == MiMode::PaperConstants) {
        ctx.eps_prime = eps * std::exp2(-8.0 * (ctx.k_bits + 1.0) / eps - 1.0);
    } else {
        ctx.eps_prime = eps * std::exp2(-ctx.trunc.i_inf_nu - 1.0);
    }

    if (!(ctx.eps_prime > std::ldexp(1.0, -mu.n))) {
        const int n_min =
            static_cast<int>(std::floor(std::log2(1.0 / ctx.eps_prime))) + 1;
        throw PreconditionError(
            "bounded-mi: eps' = " + std::to_string(ctx.eps_prime) +
            " is not above 2^-n at n = " + std::to_string(mu.n) +
            "; the extraction lemma needs n >= " + std::to_string(n_min));
    }
    return ctx;
}

RunOutcome bounded_mi_protocol(const JointDist& mu, double eps, std::uint64_t seed,
                               SubsetMask a, SubsetMask b, MiMode mode) {
    const MiContext ctx = make_mi_context(mu, eps, mode);
    return run_protocol(ctx.nu_a, ctx.nu_b, ctx.eps_prime, seed, a, b);
}

}  // namespace disj
