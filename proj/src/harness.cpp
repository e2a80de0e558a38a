#include "disj/harness.hpp"

#include <algorithm>
#include <atomic>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "disj/errors.hpp"

namespace disj {

namespace {

constexpr int kChunks = 128;
constexpr double kZ99 = 2.5758293035489008;  // two-sided 99% normal quantile

struct Accum {
    double error_mass = 0.0;
    double weight = 0.0;
    double cost_mass = 0.0;
    long long max_cost = 0;
    std::array<long long, 6> kind_counts{};

    void absorb_run(const LeanOutcome& run, double w) {
        weight += w;
        if (!run.correct) error_mass += w;
        cost_mass += w * run.cost_bits;
        max_cost = std::max<long long>(max_cost, run.cost_bits);
        for (int l = 0; l < run.levels && l < static_cast<int>(run.kinds.size()); ++l) {
            ++kind_counts[static_cast<std::size_t>(run.kinds[static_cast<std::size_t>(l)])];
        }
    }

    void merge(const Accum& other) {
        error_mass += other.error_mass;
        weight += other.weight;
        cost_mass += other.cost_mass;
        max_cost = std::max(max_cost, other.max_cost);
        for (std::size_t i = 0; i < kind_counts.size(); ++i) {
            kind_counts[i] += other.kind_counts[i];
        }
    }
};

// Fixed chunk boundaries with an in-order merge keep results independent of
// the number of worker threads.
template <typename PerChunk>
void parallel_chunked(long long total, PerChunk per_chunk) {
    if (total <= 0) return;
    const int chunks = static_cast<int>(std::min<long long>(kChunks, total));
    auto chunk_begin = [&](int c) { return total * c / chunks; };

    unsigned hw = std::thread::hardware_concurrency();
    const int workers = static_cast<int>(std::max(1u, std::min(hw, 16u)));
    if (workers == 1 || total < 4096) {
        for (int c = 0; c < chunks; ++c) per_chunk(c, chunk_begin(c), chunk_begin(c + 1));
        return;
    }

    std::atomic<int> next{0};
    auto work = [&] {
        int c;
        while ((c = next.fetch_add(1)) < chunks) {
            per_chunk(c, chunk_begin(c), chunk_begin(c + 1));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
}

EvalReport finish_report(const Accum& acc, long long pairs, double wall_seconds) {
    EvalReport report;
    report.weighted_error = acc.error_mass;
    report.max_cost_bits = acc.max_cost;
    report.mean_cost_bits = acc.weight > 0.0 ? acc.cost_mass / acc.weight : 0.0;
    for (std::size_t i = 0; i < acc.kind_counts.size(); ++i) {
        if (acc.kind_counts[i] > 0) {
            report.stop_histogram[level_kind_name(static_cast<LevelKind>(i))] =
                acc.kind_counts[i];
        }
    }
    report.pairs_evaluated = pairs;
    report.wall_time_seconds = wall_seconds;
    return report;
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

EvalReport evaluate_exact(const Dist& mu_a, const Dist& mu_b, double eps,
                          std::uint64_t seed, double t_cap_constant) {
    const long long total = static_cast<long long>(mu_a.support.size()) *
                            static_cast<long long>(mu_b.support.size());
    if (total > kExactPairGuard) {
        throw GuardError("evaluate_exact: " + std::to_string(total) +
                         " support pairs exceed the 2^26 guard; use sampled mode");
    }
    const auto start = std::chrono::steady_clock::now();

    const ProtocolEngine engine(mu_a, mu_b, eps, seed, t_cap_constant);
    if (static_cast<double>(mu_a.n) > 4.0 * std::log2(1.0 / eps)) {
        engine.level(SubsetMask{full_bits(mu_a.n), mu_a.n});  // prewarm the top level
    }

    const long long b_count = static_cast<long long>(mu_b.support.size());
    std::vector<Accum> partial(kChunks);
    parallel_chunked(total, [&](int chunk, long long begin, long long end) {
        Accum& acc = partial[static_cast<std::size_t>(chunk)];
        for (long long idx = begin; idx < end; ++idx) {
            const auto& [amask, aw] = mu_a.support[static_cast<std::size_t>(idx / b_count)];
            const auto& [bmask, bw] = mu_b.support[static_cast<std::size_t>(idx % b_count)];
            acc.absorb_run(engine.run_lean(amask, bmask), aw * bw);
        }
    });

    Accum acc;
    for (const Accum& p : partial) acc.merge(p);
    return finish_report(acc, total, elapsed_seconds(start));
}

EvalReport evaluate_sampled(const Dist& mu_a, const Dist& mu_b, double eps,
                            std::uint64_t seed, long long num_samples,
                            double t_cap_constant) {
    if (num_samples < 1) throw PreconditionError("evaluate_sampled: num_samples >= 1");
    const auto start = std::chrono::steady_clock::now();

    const ProtocolEngine engine(mu_a, mu_b, eps, seed, t_cap_constant);
    RandomStream rng = RandomStream(seed, "eval-sampled");

    Accum acc;
    for (long long i = 0; i < num_samples; ++i) {
        const SubsetMask a = sample(mu_a, rng);
        const SubsetMask b = sample(mu_b, rng);
        acc.absorb_run(engine.run_lean(a, b), 1.0);
    }

    EvalReport report = finish_report(acc, num_samples, elapsed_seconds(start));
    const double p_hat = acc.error_mass / static_cast<double>(num_samples);
    report.weighted_error = p_hat;
    report.mean_cost_bits = acc.cost_mass / static_cast<double>(num_samples);
    report.confidence_half_width =
        kZ99 * std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(num_samples));
    return report;
}

EvalReport evaluate_mi_exact(const JointDist& mu, double eps, std::uint64_t seed,
                             MiMode mode, double t_cap_constant) {
    const long long total = static_cast<long long>(mu.support.size());
    if (total > kExactPairGuard) {
        throw GuardError("evaluate_mi_exact: joint support exceeds the 2^26 guard");
    }
    const auto start = std::chrono::steady_clock::now();

    const MiContext ctx = make_mi_context(mu, eps, mode);
    const ProtocolEngine engine(ctx.nu_a, ctx.nu_b, ctx.eps_prime, seed, t_cap_constant);
    if (static_cast<double>(mu.n) > 4.0 * std::log2(1.0 / ctx.eps_prime)) {
        engine.level(SubsetMask{full_bits(mu.n), mu.n});
    }

    std::vector<Accum> partial(kChunks);
    parallel_chunked(total, [&](int chunk, long long begin, long long end) {
        Accum& acc = partial[static_cast<std::size_t>(chunk)];
        for (long long idx = begin; idx < end; ++idx) {
            const JointDist::Entry& e = mu.support[static_cast<std::size_t>(idx)];
            acc.absorb_run(
                engine.run_lean(SubsetMask{e.a, mu.n}, SubsetMask{e.b, mu.n}), e.w);
        }
    });

    Accum acc;
    for (const Accum& p : partial) acc.merge(p);
    return finish_report(acc, total, elapsed_seconds(start));
}

EvalReport evaluate_mi_sampled(const JointDist& mu, double eps, std::uint64_t seed,
                               long long num_samples, MiMode mode, double t_cap_constant) {
    if (num_samples < 1) throw PreconditionError("evaluate_mi_sampled: num_samples >= 1");
    const auto start = std::chrono::steady_clock::now();

    const MiContext ctx = make_mi_context(mu, eps, mode);
    const ProtocolEngine engine(ctx.nu_a, ctx.nu_b, ctx.eps_prime, seed, t_cap_constant);
    RandomStream rng = RandomStream(seed, "eval-mi-sampled");

    Accum acc;
    for (long long i = 0; i < num_samples; ++i) {
        const auto [a, b] = sample(mu, rng);
        acc.absorb_run(engine.run_lean(a, b), 1.0);
    }

    EvalReport report = finish_report(acc, num_samples, elapsed_seconds(start));
    const double p_hat = acc.error_mass / static_cast<double>(num_samples);
    report.weighted_error = p_hat;
    report.mean_cost_bits = acc.cost_mass / static_cast<double>(num_samples);
    report.confidence_half_width =
        kZ99 * std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(num_samples));
    return report;
}

Dist realize_marginal(const GeneratorSpec& spec, int n, RandomStream& rng) {
    if (spec.kind == "uniform-all") return generate_uniform_all(n);
    if (spec.kind == "uniform-k-subsets") {
        const int k = spec.k >= 0
                          ? spec.k
                          : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
        return generate_uniform_k_subsets(n, k);
    }
    if (spec.kind == "random-sparse") {
        return generate_random_sparse(n, spec.support_size, rng);
    }
    if (spec.kind == "per-element-independent") {
        if (!spec.p.empty()) {
            if (static_cast<int>(spec.p.size()) != n) {
                throw PreconditionError("per-element-independent: |p| != n");
            }
            return generate_per_element(spec.p);
        }
        std::vector<double> p(static_cast<std::size_t>(n));
        for (double& pi : p) pi = spec.p_low + (spec.p_high - spec.p_low) * rng.unit();
        return generate_per_element(p);
    }
    throw PreconditionError("unknown marginal generator kind: " + spec.kind);
}

JointDist realize_joint(const GeneratorSpec& spec, int n, RandomStream& rng) {
    if (spec.kind == "correlated-mixture") {
        return generate_correlated_mixture(n, spec.lambda, rng, spec.mixture_support);
    }
    throw PreconditionError("unknown joint generator kind: " + spec.kind);
}

std::pair<Dist, Dist> biased_product_pair(int n, std::uint64_t seed) {
    RandomStream rng(seed, "biased-pair");
    auto one_side = [&](std::string_view tag) {
        RandomStream side = rng.derive(tag);
        if (seed % 2 == 0) {
            std::vector<double> p(static_cast<std::size_t>(n));
            for (double& pi : p) pi = 0.1 + 0.35 * side.unit();
            return generate_per_element(p);
        }
        // Sparse marginal over small random sets with random weights.
        std::vector<std::pair<std::uint64_t, double>> entries;
        double total = 0.0;
        for (int i = 0; i < 40; ++i) {
            std::uint64_t mask = 0;
            for (int bit = 0; bit < n; ++bit) {
                if (side.unit() < 0.25) mask |= std::uint64_t{1} << bit;
            }
            const double w = side.unit() + 1e-3;
            entries.emplace_back(mask, w);
            total += w;
        }
        for (auto& [bits, w] : entries) w /= total;
        return Dist::make(n, std::move(entries));
    };
    Dist da = one_side("a");
    Dist db = one_side("b");
    return {std::move(da), std::move(db)};
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
}

namespace {

std::string histogram_cell(const EvalReport& report) {
    std::string out;
    for (const auto& [name, count] : report.stop_histogram) {
        if (!out.empty()) out += ';';
        out += name;
        out += ':';
        out += std::to_string(count);
    }
    return out.empty() ? "-" : out;
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& config) {
    if (config.n_values.empty() || config.eps_values.empty() || config.families.empty()) {
        throw PreconditionError("sweep: n, eps, and families must all be nonempty");
    }

    SweepResult result;
    std::ostringstream csv;
    csv << "# {\"seed\":" << config.seed << ",\"C\":" << format_double(config.t_cap_constant)
        << ",\"mode\":\"" << (config.sampled ? "sampled" : "exact") << "\"";
    if (config.sampled) csv << ",\"num_samples\":" << config.num_samples;
    csv << "}\n";
    csv << "n,eps,family,weighted_error,max_cost_bits,mean_cost_bits,"
           "sqrt_n_log2_inv_eps,stop_histogram,status\n";

    for (int n : config.n_values) {
        for (double eps : config.eps_values) {
            for (const FamilyConfig& family : config.families) {
                SweepRow row;
                row.n = n;
                row.eps = eps;
                row.family = family.name;

                const double scale = std::sqrt(n * std::log2(1.0 / eps));
                csv << n << ',' << format_double(eps) << ',' << family.name << ',';
                try {
                    RandomStream rng_a =
                        RandomStream(config.seed, "family").derive(family.name).derive("a", n);
                    RandomStream rng_b =
                        RandomStream(config.seed, "family").derive(family.name).derive("b", n);
                    const Dist mu_a = realize_marginal(family.gen, n, rng_a);
                    const Dist mu_b = realize_marginal(family.gen, n, rng_b);
                    row.report = config.sampled
                                     ? evaluate_sampled(mu_a, mu_b, eps, config.seed,
                                                        config.num_samples,
                                                        config.t_cap_constant)
                                     : evaluate_exact(mu_a, mu_b, eps, config.seed,
                                                      config.t_cap_constant);
                    const EvalReport& rep = *row.report;
                    csv << format_double(rep.weighted_error) << ',' << rep.max_cost_bits
                        << ',' << format_double(rep.mean_cost_bits) << ','
                        << format_double(scale) << ',' << histogram_cell(rep) << ",ok\n";
                } catch (const std::exception& ex) {
                    row.error = ex.what();
                    result.had_errors = true;
                    if (!config.keep_going) throw;
                    std::string msg = row.error;
                    for (char& c : msg) {
                        if (c == ',' || c == '\n') c = ' ';
                    }
                    csv << "-,-,-," << format_double(scale) << ",-,error: " << msg << "\n";
                }
                result.rows.push_back(std::move(row));
            }
        }
    }

    // Per-family fitted constant: the smallest C' with
    // max_cost <= C' * sqrt(n log2(1/eps)) across that family's cells.
    for (const FamilyConfig& family : config.families) {
        double fitted = 0.0;
        for (const SweepRow& row : result.rows) {
            if (row.family != family.name || !row.report) continue;
            const double scale = std::sqrt(row.n * std::log2(1.0 / row.eps));
            fitted = std::max(fitted,
                              static_cast<double>(row.report->max_cost_bits) / scale);
        }
        csv << "# fit," << family.name << ',' << format_double(fitted) << "\n";
    }

    result.csv = csv.str();
    return result;
}

}  // namespace disj
