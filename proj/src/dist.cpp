#include "disj/dist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>

#include "disj/errors.hpp"

namespace disj {

namespace {

void check_normalized(double total) {
    if (std::abs(total - 1.0) > kNormTolerance) {
        throw PreconditionError("support weights sum to " + std::to_string(total) +
                                ", expected 1 within 1e-9");
    }
}

std::vector<double> cumulative(const std::vector<double>& weights) {
    std::vector<double> cdf(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        cdf[i] = acc;
    }
    return cdf;
}

std::size_t draw_index(const std::vector<double>& cdf, RandomStream& rng) {
    double u = rng.unit() * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    return static_cast<std::size_t>(it - cdf.begin());
}

}  // namespace

Dist Dist::make(int n, std::vector<std::pair<std::uint64_t, double>> entries) {
    if (n < 1 || n > kMaxGroundSetSize) {
        throw PreconditionError("ground-set size must be in [1, 63]");
    }
    const std::uint64_t full = full_bits(n);
    std::sort(entries.begin(), entries.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });

    Dist d;
    d.n = n;
    double total = 0.0;
    for (const auto& [bits, w] : entries) {
        if ((bits & ~full) != 0) throw PreconditionError("support mask outside the ground set");
        if (w < 0.0) throw PreconditionError("negative support weight");
        if (w == 0.0) continue;
        total += w;
        if (!d.support.empty() && d.support.back().first.bits == bits) {
            d.support.back().second += w;
        } else {
            d.support.emplace_back(SubsetMask{bits, n}, w);
        }
    }
    if (d.support.empty()) throw PreconditionError("empty support");
    check_normalized(total);

    std::vector<double> ws(d.support.size());
    for (std::size_t i = 0; i < ws.size(); ++i) ws[i] = d.support[i].second;
    d.cdf = cumulative(ws);
    return d;
}

double Dist::mass_of(std::uint64_t bits) const {
    auto it = std::lower_bound(
        support.begin(), support.end(), bits,
        [](const auto& entry, std::uint64_t key) { return entry.first.bits < key; });
    if (it == support.end() || it->first.bits != bits) return 0.0;
    return it->second;
}

JointDist JointDist::make(int n, std::vector<Entry> entries) {
    if (n < 1 || n > kMaxGroundSetSize) {
        throw PreconditionError("ground-set size must be in [1, 63]");
    }
    const std::uint64_t full = full_bits(n);
    std::sort(entries.begin(), entries.end(), [](const Entry& l, const Entry& r) {
        return l.a != r.a ? l.a < r.a : l.b < r.b;
    });

    JointDist j;
    j.n = n;
    double total = 0.0;
    for (const Entry& e : entries) {
        if ((e.a & ~full) != 0 || (e.b & ~full) != 0) {
            throw PreconditionError("joint support mask outside the ground set");
        }
        if (e.w < 0.0) throw PreconditionError("negative support weight");
        if (e.w == 0.0) continue;
        total += e.w;
        if (!j.support.empty() && j.support.back().a == e.a && j.support.back().b == e.b) {
            j.support.back().w += e.w;
        } else {
            j.support.push_back(e);
        }
    }
    if (j.support.empty()) throw PreconditionError("empty joint support");
    check_normalized(total);

    std::vector<double> ws(j.support.size());
    for (std::size_t i = 0; i < ws.size(); ++i) ws[i] = j.support[i].w;
    j.cdf = cumulative(ws);
    return j;
}

Dist JointDist::marginal_a() const {
    std::vector<std::pair<std::uint64_t, double>> acc;
    acc.reserve(support.size());
    for (const Entry& e : support) acc.emplace_back(e.a, e.w);
    return Dist::make(n, std::move(acc));
}

Dist JointDist::marginal_b() const {
    std::vector<std::pair<std::uint64_t, double>> acc;
    acc.reserve(support.size());
    for (const Entry& e : support) acc.emplace_back(e.b, e.w);
    return Dist::make(n, std::move(acc));
}

SubsetMask sample(const Dist& d, RandomStream& rng) {
    return d.support[draw_index(d.cdf, rng)].first;
}

std::pair<SubsetMask, SubsetMask> sample(const JointDist& j, RandomStream& rng) {
    const JointDist::Entry& e = j.support[draw_index(j.cdf, rng)];
    return {SubsetMask{e.a, j.n}, SubsetMask{e.b, j.n}};
}

double downset_measure(const Dist& d, SubsetMask u) {
    if (u.n != d.n || (u.bits & ~full_bits(d.n)) != 0) {
        throw PreconditionError("downset_measure: u outside the ground set");
    }
    double acc = 0.0;
    for (const auto& [mask, w] : d.support) {
        if (is_subset(mask, u)) acc += w;
    }
    return acc;
}

void zeta_transform(std::vector<double>& table, int nbits) {
    const std::size_t size = std::size_t{1} << nbits;
    for (int i = 0; i < nbits; ++i) {
        const std::size_t bit = std::size_t{1} << i;
        for (std::size_t m = 0; m < size; ++m) {
            if (m & bit) table[m] += table[m ^ bit];
        }
    }
}

std::vector<double> downset_measure_all(const Dist& d) {
    if (d.n > kDenseTableBits) {
        throw GuardError("downset_measure_all limited to n <= 24, got n = " + std::to_string(d.n));
    }
    std::vector<double> table(std::size_t{1} << d.n, 0.0);
    for (const auto& [mask, w] : d.support) table[mask.bits] += w;
    zeta_transform(table, d.n);
    return table;
}

double disjoint_probability(const Dist& da, const Dist& db) {
    if (da.n != db.n) throw PreconditionError("disjoint_probability: mismatched ground sets");
    const std::uint64_t full = full_bits(da.n);

    // Dense fast path for big dense supports; the naive sum otherwise.
    if (da.n <= kDenseTableBits &&
        da.support.size() * db.support.size() > (std::size_t{1} << 22)) {
        std::vector<double> table = downset_measure_all(da);
        double acc = 0.0;
        for (const auto& [mask, w] : db.support) acc += w * table[full & ~mask.bits];
        return acc;
    }

    double acc = 0.0;
    for (const auto& [bmask, bw] : db.support) {
        const std::uint64_t complement = full & ~bmask.bits;
        double inner = 0.0;
        for (const auto& [amask, aw] : da.support) {
            if ((amask.bits & ~complement) == 0) inner += aw;
        }
        acc += bw * inner;
    }
    return acc;
}

namespace {

template <typename Keep>
std::optional<Dist> restrict_impl(const Dist& d, const FamilyState& state, Keep keep) {
    if (d.n != state.ground.mask.n) {
        throw PreconditionError("restrict: distribution and family over different ground sets");
    }
    for (const auto& [mask, w] : d.support) {
        if (!is_subset(mask, state.ground.mask)) {
            throw PreconditionError("restrict: support extends outside the ground set");
        }
    }
    std::vector<std::pair<std::uint64_t, double>> kept;
    kept.reserve(d.support.size());
    double total = 0.0;
    for (const auto& [mask, w] : d.support) {
        if (keep(mask)) {
            kept.emplace_back(mask.bits, w);
            total += w;
        }
    }
    if (kept.empty()) return std::nullopt;
    if (kept.size() == d.support.size()) return d;  // conditioned on everything
    for (auto& [bits, w] : kept) w /= total;
    return Dist::make(d.n, std::move(kept));
}

}  // namespace

std::optional<Dist> restrict_a(const Dist& d, const FamilyState& state) {
    return restrict_impl(d, state, [&](SubsetMask m) { return family_contains_a(state, m); });
}

std::optional<Dist> restrict_b(const Dist& d, const FamilyState& state) {
    return restrict_impl(d, state, [&](SubsetMask m) { return family_contains_b(state, m); });
}

Dist project(const Dist& d, GroundSet x) {
    if (x.mask.n != d.n) throw PreconditionError("project: mismatched ground sets");
    std::vector<std::pair<std::uint64_t, double>> image;
    image.reserve(d.support.size());
    for (const auto& [mask, w] : d.support) image.emplace_back(mask.bits & x.mask.bits, w);
    return Dist::make(d.n, std::move(image));
}

namespace {

// Log2 density ratio of each joint atom against the product of marginals.
std::vector<double> log_ratios(const JointDist& j, const Dist& ma, const Dist& mb) {
    std::vector<double> out;
    out.reserve(j.support.size());
    for (const auto& e : j.support) {
        out.push_back(std::log2(e.w / (ma.mass_of(e.a) * mb.mass_of(e.b))));
    }
    return out;
}

}  // namespace

double mutual_information(const JointDist& j) {
    const Dist ma = j.marginal_a();
    const Dist mb = j.marginal_b();
    double acc = 0.0;
    for (const auto& e : j.support) {
        acc += e.w * std::log2(e.w / (ma.mass_of(e.a) * mb.mass_of(e.b)));
    }
    return acc;
}

double i_infinity(const JointDist& j) {
    const Dist ma = j.marginal_a();
    const Dist mb = j.marginal_b();
    double best = -std::numeric_limits<double>::infinity();
    for (double r : log_ratios(j, ma, mb)) best = std::max(best, r);
    return best;
}

double tv_distance(const JointDist& p, const JointDist& q) {
    if (p.n != q.n) throw PreconditionError("tv_distance: mismatched ground sets");
    double l1 = 0.0;
    std::size_t i = 0;
    std::size_t k = 0;
    auto key_less = [](const JointDist::Entry& l, const JointDist::Entry& r) {
        return l.a != r.a ? l.a < r.a : l.b < r.b;
    };
    while (i < p.support.size() || k < q.support.size()) {
        if (k == q.support.size() ||
            (i < p.support.size() && key_less(p.support[i], q.support[k]))) {
            l1 += p.support[i].w;
            ++i;
        } else if (i == p.support.size() || key_less(q.support[k], p.support[i])) {
            l1 += q.support[k].w;
            ++k;
        } else {
            l1 += std::abs(p.support[i].w - q.support[k].w);
            ++i;
            ++k;
        }
    }
    return 0.5 * l1;
}

Dist generate_uniform_all(int n) {
    if (n > kDenseTableBits) throw GuardError("uniform-all limited to n <= 24");
    const std::size_t size = std::size_t{1} << n;
    const double w = std::ldexp(1.0, -n);
    std::vector<std::pair<std::uint64_t, double>> entries;
    entries.reserve(size);
    for (std::uint64_t m = 0; m < size; ++m) entries.emplace_back(m, w);
    return Dist::make(n, std::move(entries));
}

Dist generate_uniform_k_subsets(int n, int k) {
    if (k < 0 || k > n) throw PreconditionError("uniform-k-subsets requires 0 <= k <= n");
    if (k == 0) return Dist::make(n, {{0, 1.0}});

    double count = 1.0;
    for (int i = 0; i < k; ++i) count = count * (n - i) / (i + 1);
    if (count > static_cast<double>(std::size_t{1} << kDenseTableBits)) {
        throw GuardError("uniform-k-subsets: binomial(n, k) too large to enumerate");
    }

    std::vector<std::pair<std::uint64_t, double>> entries;
    entries.reserve(static_cast<std::size_t>(count) + 1);
    const double w = 1.0 / count;
    std::uint64_t m = (std::uint64_t{1} << k) - 1;
    const std::uint64_t limit = std::uint64_t{1} << n;
    while (m < limit) {
        entries.emplace_back(m, w);
        // Gosper's hack: next mask with the same popcount.
        std::uint64_t c = m & (~m + 1);
        std::uint64_t r = m + c;
        m = (((r ^ m) >> 2) / c) | r;
    }
    // Exact uniform weights regardless of the floating-point count.
    const double exact = 1.0 / static_cast<double>(entries.size());
    for (auto& [bits, weight] : entries) weight = exact;
    return Dist::make(n, std::move(entries));
}

Dist generate_random_sparse(int n, int support_size, RandomStream& rng) {
    if (support_size < 1) throw PreconditionError("random-sparse requires support_size >= 1");
    const std::uint64_t full = full_bits(n);
    if (n <= 40 && static_cast<double>(support_size) > std::ldexp(1.0, n)) {
        throw PreconditionError("random-sparse: support_size exceeds 2^n");
    }
    std::set<std::uint64_t> masks;
    while (masks.size() < static_cast<std::size_t>(support_size)) {
        masks.insert(rng.word() & full);
    }
    std::vector<std::pair<std::uint64_t, double>> entries;
    entries.reserve(masks.size());
    double total = 0.0;
    for (std::uint64_t m : masks) {
        const double w = rng.unit() + 1e-3;
        entries.emplace_back(m, w);
        total += w;
    }
    for (auto& [bits, w] : entries) w /= total;
    return Dist::make(n, std::move(entries));
}

Dist generate_per_element(std::span<const double> p) {
    const int n = static_cast<int>(p.size());
    if (n < 1 || n > kDenseTableBits) {
        throw GuardError("per-element-independent limited to 1 <= n <= 24");
    }
    for (double pi : p) {
        if (pi < 0.0 || pi > 1.0) throw PreconditionError("inclusion probability outside [0, 1]");
    }
    const std::size_t size = std::size_t{1} << n;
    std::vector<std::pair<std::uint64_t, double>> entries;
    entries.reserve(size);
    for (std::uint64_t m = 0; m < size; ++m) {
        double w = 1.0;
        for (int i = 0; i < n; ++i) w *= (m >> i & 1) ? p[i] : 1.0 - p[i];
        if (w > 0.0) entries.emplace_back(m, w);
    }
    return Dist::make(n, std::move(entries));
}

JointDist generate_correlated_mixture(int n, double lambda, RandomStream& rng,
                                      int support_size) {
    if (lambda < 0.0 || lambda > 1.0) throw PreconditionError("lambda outside [0, 1]");

    std::vector<std::uint64_t> masks;
    if (support_size < 0) {
        if (n > 11) throw GuardError("full-support correlated-mixture limited to n <= 11");
        const std::uint64_t size = std::uint64_t{1} << n;
        masks.reserve(size);
        for (std::uint64_t m = 0; m < size; ++m) masks.push_back(m);
    } else {
        if (support_size < 1) throw PreconditionError("support_size must be >= 1");
        if (static_cast<double>(support_size) * support_size > std::ldexp(1.0, 22)) {
            throw GuardError("correlated-mixture: support too large");
        }
        const std::uint64_t full = full_bits(n);
        std::set<std::uint64_t> drawn;
        while (drawn.size() < static_cast<std::size_t>(support_size)) {
            drawn.insert(rng.word() & full);
        }
        masks.assign(drawn.begin(), drawn.end());
    }

    const double m = static_cast<double>(masks.size());
    const double off = (1.0 - lambda) / (m * m);
    const double diag = lambda / m;
    std::vector<JointDist::Entry> entries;
    entries.reserve(masks.size() * masks.size());
    for (std::uint64_t a : masks) {
        for (std::uint64_t b : masks) {
            entries.push_back({a, b, off + (a == b ? diag : 0.0)});
        }
    }
    return JointDist::make(n, std::move(entries));
}

}  // namespace disj
