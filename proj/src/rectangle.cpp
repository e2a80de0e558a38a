#include "disj/rectangle.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "disj/errors.hpp"

namespace disj {

namespace {

void check_eps_window(int n, double eps, const char* who) {
    if (!(eps > std::ldexp(1.0, -n)) || !(eps < 0.5)) {
        throw PreconditionError(std::string(who) + ": eps must lie strictly in (2^-" +
                                std::to_string(n) + ", 1/2)");
    }
}

void check_support_inside(const Dist& d, GroundSet x, const char* who) {
    for (const auto& [mask, w] : d.support) {
        if (!is_subset(mask, x.mask)) {
            throw PreconditionError(std::string(who) + ": support extends outside x");
        }
    }
}

// Downset table of d over the compressed coordinates of x.
std::vector<double> compressed_downset_table(const Dist& d, GroundSet x) {
    const int xn = x.size();
    std::vector<double> table(std::size_t{1} << xn, 0.0);
    for (const auto& [mask, w] : d.support) {
        table[compress_bits(mask.bits, x.mask.bits)] += w;
    }
    zeta_transform(table, xn);
    return table;
}

}  // namespace

int lemma_ell(int n, double eps) {
    if (n < 1 || n > kMaxGroundSetSize) throw PreconditionError("lemma_ell: n outside [1, 63]");
    check_eps_window(n, eps, "lemma_ell");
    const int ell = static_cast<int>(std::floor(std::sqrt(n / std::log2(1.0 / eps))));
    return std::max(1, ell);
}

namespace detail {

ScanResult exact_scan(const std::vector<double>& table_a, const std::vector<double>& table_b,
                      int xn) {
    const std::uint64_t full = full_bits(xn);
    ScanResult best;
    double best_product = -1.0;
    for (std::uint64_t u = 0; u <= full; ++u) {
        const double product = table_a[u] * table_b[full ^ u];
        if (product > best_product) {
            best_product = product;
            best = ScanResult{u, table_a[u], table_b[full ^ u]};
        }
    }
    return best;
}

}  // namespace detail

RectangleWitness extract_exact(const Dist& da, const Dist& db, double eps, GroundSet x) {
    if (da.n != db.n || da.n != x.mask.n) {
        throw PreconditionError("extract_exact: mismatched ground sets");
    }
    const int xn = x.size();
    if (xn < 1) throw PreconditionError("extract_exact: empty ground set");
    if (xn > kDenseTableBits) {
        throw GuardError("extract_exact limited to |x| <= 24; use extract_sampled");
    }
    check_support_inside(da, x, "extract_exact");
    check_support_inside(db, x, "extract_exact");
    check_eps_window(xn, eps, "extract_exact");

    const std::vector<double> table_a = compressed_downset_table(da, x);
    const std::vector<double> table_b = compressed_downset_table(db, x);

    // The precondition of the extraction lemma; the caller should have taken
    // the almost-empty branch below it.
    const std::uint64_t full = full_bits(xn);
    double disj = 0.0;
    for (const auto& [mask, w] : db.support) {
        disj += w * table_a[full ^ compress_bits(mask.bits, x.mask.bits)];
    }
    if (disj < eps) {
        throw PreconditionError("extract_exact: disjointness probability " +
                                std::to_string(disj) + " below eps");
    }

    const detail::ScanResult best = detail::exact_scan(table_a, table_b, xn);
    const int ell = lemma_ell(xn, eps);

    RectangleWitness w;
    w.u = SubsetMask{expand_bits(best.u_compressed, x.mask.bits), da.n};
    w.measure_a = best.measure_a;
    w.measure_b = best.measure_b;
    w.ell = ell;
    w.mode = RectangleWitness::Mode::Exact;
    w.meets_bounds = w.measure_a >= std::exp2(-3.0 * xn / ell) &&
                     w.measure_b >= std::pow(eps, ell) / 2.0;
    return w;
}

std::optional<RectangleWitness> extract_sampled(const Dist& da, const Dist& db, double eps,
                                                GroundSet x, RandomStream& rng,
                                                int max_retries) {
    if (da.n != db.n || da.n != x.mask.n) {
        throw PreconditionError("extract_sampled: mismatched ground sets");
    }
    const int xn = x.size();
    if (xn < 1) throw PreconditionError("extract_sampled: empty ground set");
    check_support_inside(da, x, "extract_sampled");
    check_support_inside(db, x, "extract_sampled");
    check_eps_window(xn, eps, "extract_sampled");
    if (disjoint_probability(da, db) < eps) {
        throw PreconditionError("extract_sampled: disjointness probability below eps");
    }

    const int ell = lemma_ell(xn, eps);
    const double bound_a = std::exp2(-3.0 * xn / ell);
    const double bound_b = std::pow(eps, ell) / 2.0;

    std::optional<RectangleWitness> best;
    double best_product = -1.0;
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        std::uint64_t u_bits = 0;
        for (int i = 0; i < ell; ++i) u_bits |= sample(da, rng).bits;
        const SubsetMask u{u_bits, da.n};
        const double wa = downset_measure(da, u);
        const double wb = downset_measure(db, difference(x.mask, u));

        RectangleWitness w;
        w.u = u;
        w.measure_a = wa;
        w.measure_b = wb;
        w.ell = ell;
        w.mode = RectangleWitness::Mode::Sampled;
        w.meets_bounds = wa >= bound_a && wb >= bound_b;
        if (w.meets_bounds) return w;
        if (wa * wb > best_product) {
            best_product = wa * wb;
            best = w;
        }
    }
    return best;
}

WitnessReport verify_witness(const Dist& da, const Dist& db, const RectangleWitness& w,
                             GroundSet x, double eps, RandomStream& rng) {
    WitnessReport report;
    report.u_within_x = w.u.n == x.mask.n && is_subset(w.u, x.mask);

    report.recomputed_a = downset_measure(da, w.u);
    report.recomputed_b = downset_measure(db, difference(x.mask, w.u));
    report.measures_match = std::abs(report.recomputed_a - w.measure_a) <= 1e-12 &&
                            std::abs(report.recomputed_b - w.measure_b) <= 1e-12;

    report.sampled_pairs_disjoint = true;
    const std::uint64_t complement = x.mask.bits & ~w.u.bits;
    for (int i = 0; i < 100; ++i) {
        const std::uint64_t a = rng.word() & w.u.bits;
        const std::uint64_t b = rng.word() & complement;
        if ((a & b) != 0) report.sampled_pairs_disjoint = false;
    }

    const int xn = x.size();
    const int ell = w.ell > 0 ? w.ell : 1;
    report.bound_a_met = report.recomputed_a >= std::exp2(-3.0 * xn / ell);
    report.bound_b_met = report.recomputed_b >= std::pow(eps, ell) / 2.0;
    return report;
}

}  // namespace disj
