#include "disj/protocol.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "disj/errors.hpp"

namespace disj {

namespace {

constexpr int kDenseContextBits = 16;
constexpr int kScheduleSampleRetries = 256;
constexpr long long kTCapSaturation = 1'000'000'000'000'000ll;

std::string encode_bits(std::uint64_t value, int width) {
    std::string s(static_cast<std::size_t>(width), '0');
    for (int i = 0; i < width; ++i) {
        if (value >> i & 1) s[static_cast<std::size_t>(i)] = '1';
    }
    return s;
}

LevelKind declare_kind_for(StopReason reason) {
    switch (reason) {
        case StopReason::AlmostEmpty: return LevelKind::DeclareAlmostEmpty;
        case StopReason::Exhausted: return LevelKind::DeclareExhausted;
        case StopReason::DegenerateZeroMass: return LevelKind::DeclareDegenerate;
    }
    return LevelKind::DeclareAlmostEmpty;
}

// Shared machinery for building a schedule from already-projected marginals.
// Each iteration conditions both marginals on the surviving families, checks
// the almost-empty stop, extracts a witness, and applies the removal. The
// exact extractor guarantees both witness measures are positive, so every
// step removes at least one support atom and the loop is finite.
Schedule build_schedule_projected(const Dist& nu_a0, const Dist& nu_b0, GroundSet x,
                                  double eps, std::uint64_t seed, double t_cap_constant) {
    const int xn = x.size();
    const double log_inv_eps = std::log2(1.0 / eps);
    if (!(eps > 0.0) || !(eps < 0.5)) {
        throw PreconditionError("build_schedule: eps must lie in (0, 1/2)");
    }
    if (!(static_cast<double>(xn) > 4.0 * log_inv_eps)) {
        throw PreconditionError("build_schedule: |x| <= 4 log2(1/eps), the base case applies");
    }

    Schedule out;
    out.x = x;
    out.eps = eps;

    const double t_cap_raw =
        std::ceil(std::exp2(t_cap_constant * std::sqrt(xn * log_inv_eps)) *
                  (xn + log_inv_eps));
    out.t_cap = t_cap_raw > static_cast<double>(kTCapSaturation)
                    ? kTCapSaturation
                    : static_cast<long long>(t_cap_raw);

    const double eps_half = eps / 2.0;
    const bool exact = xn <= kDenseTableBits;
    const std::uint64_t full_c = full_bits(xn);

    struct Atom {
        std::uint64_t bits;  // uncompressed, inside x
        double w;            // raw projected weight
    };
    std::vector<Atom> sa, sb;
    sa.reserve(nu_a0.support.size());
    for (const auto& [mask, w] : nu_a0.support) sa.push_back({mask.bits, w});
    sb.reserve(nu_b0.support.size());
    for (const auto& [mask, w] : nu_b0.support) sb.push_back({mask.bits, w});
    double total_a = 0.0;
    for (const Atom& e : sa) total_a += e.w;
    double total_b = 0.0;
    for (const Atom& e : sb) total_b += e.w;

    RandomStream rng = RandomStream(seed, "schedule").derive("x", x.mask.bits);
    std::vector<double> table_a, table_b;

    for (long long i = 0;; ++i) {
        if (i >= out.t_cap) {
            out.stop = StopReason::Exhausted;
            out.stop_at_step = static_cast<int>(i);
            break;
        }
        if (sa.empty() || sb.empty()) {
            out.stop = StopReason::DegenerateZeroMass;
            out.stop_at_step = static_cast<int>(i);
            break;
        }

        std::uint64_t u_bits = 0;
        double wa = 0.0;
        double wb = 0.0;
        if (exact) {
            table_a.assign(std::size_t{1} << xn, 0.0);
            for (const Atom& e : sa) {
                table_a[compress_bits(e.bits, x.mask.bits)] += e.w / total_a;
            }
            zeta_transform(table_a, xn);
            table_b.assign(std::size_t{1} << xn, 0.0);
            for (const Atom& e : sb) {
                table_b[compress_bits(e.bits, x.mask.bits)] += e.w / total_b;
            }
            zeta_transform(table_b, xn);

            double disj = 0.0;
            for (const Atom& e : sb) {
                disj += (e.w / total_b) * table_a[full_c ^ compress_bits(e.bits, x.mask.bits)];
            }
            if (disj <= eps_half) {
                out.stop = StopReason::AlmostEmpty;
                out.stop_at_step = static_cast<int>(i);
                break;
            }

            const detail::ScanResult best = detail::exact_scan(table_a, table_b, xn);
            u_bits = expand_bits(best.u_compressed, x.mask.bits);
            wa = best.measure_a;
            wb = best.measure_b;
        } else {
            std::vector<std::pair<std::uint64_t, double>> ea, eb;
            ea.reserve(sa.size());
            for (const Atom& e : sa) ea.emplace_back(e.bits, e.w / total_a);
            eb.reserve(sb.size());
            for (const Atom& e : sb) eb.emplace_back(e.bits, e.w / total_b);
            const Dist da = Dist::make(nu_a0.n, std::move(ea));
            const Dist db = Dist::make(nu_b0.n, std::move(eb));

            if (disjoint_probability(da, db) <= eps_half) {
                out.stop = StopReason::AlmostEmpty;
                out.stop_at_step = static_cast<int>(i);
                break;
            }
            const auto witness =
                extract_sampled(da, db, eps_half, x, rng, kScheduleSampleRetries);
            u_bits = witness->u.bits;
            wa = witness->measure_a;
            wb = witness->measure_b;
        }

        const SubsetMask u{u_bits, x.mask.n};
        const int u_size = set_size(u);
        const Side side = u_size <= xn - u_size ? Side::A : Side::B;

        ScheduleStep step{u, side, wa * wb};
        out.steps.push_back(step);

        const SubsetMask tested = tested_mask(step, x);
        if (side == Side::A) {
            std::erase_if(sa, [&](const Atom& e) {
                return (e.bits & ~tested.bits) == 0;
            });
            total_a = 0.0;
            for (const Atom& e : sa) total_a += e.w;
        } else {
            std::erase_if(sb, [&](const Atom& e) {
                return (e.bits & ~tested.bits) == 0;
            });
            total_b = 0.0;
            for (const Atom& e : sb) total_b += e.w;
        }
    }

    if (static_cast<long long>(out.steps.size()) > out.t_cap) {
        throw std::logic_error("schedule exceeded its t cap");
    }
    return out;
}

}  // namespace

SubsetMask y_candidate(const ScheduleStep& step, GroundSet x) {
    return step.side == Side::A ? step.u : difference(x.mask, step.u);
}

SubsetMask tested_mask(const ScheduleStep& step, GroundSet x) {
    return y_candidate(step, x);
}

Schedule build_schedule(const Dist& mu_a, const Dist& mu_b, GroundSet x, double eps,
                        std::uint64_t seed, double t_cap_constant) {
    if (mu_a.n != mu_b.n || mu_a.n != x.mask.n) {
        throw PreconditionError("build_schedule: mismatched ground sets");
    }
    return build_schedule_projected(project(mu_a, x), project(mu_b, x), x, eps, seed,
                                    t_cap_constant);
}

std::optional<int> first_yes_a(const Schedule& s, SubsetMask a_prime) {
    if (a_prime.n != s.x.mask.n || !is_subset(a_prime, s.x.mask)) {
        throw PreconditionError("first_yes_a: set not inside the ground set");
    }
    for (std::size_t j = 0; j < s.steps.size(); ++j) {
        if (s.steps[j].side == Side::A && is_subset(a_prime, s.steps[j].u)) {
            return static_cast<int>(j);
        }
    }
    return std::nullopt;
}

std::optional<int> first_yes_b(const Schedule& s, SubsetMask b_prime) {
    if (b_prime.n != s.x.mask.n || !is_subset(b_prime, s.x.mask)) {
        throw PreconditionError("first_yes_b: set not inside the ground set");
    }
    for (std::size_t j = 0; j < s.steps.size(); ++j) {
        if (s.steps[j].side == Side::B &&
            is_subset(b_prime, difference(s.x.mask, s.steps[j].u))) {
            return static_cast<int>(j);
        }
    }
    return std::nullopt;
}

void Transcript::append(Side speaker, std::string bits, std::string label) {
    total_bits += static_cast<long long>(bits.size());
    messages.push_back(Message{speaker, std::move(bits), std::move(label)});
}

const char* level_kind_name(LevelKind kind) {
    switch (kind) {
        case LevelKind::DeclareThreshold: return "declare-threshold";
        case LevelKind::DeclareAlmostEmpty: return "declare-almost-empty";
        case LevelKind::DeclareDegenerate: return "declare-degenerate";
        case LevelKind::DeclareExhausted: return "declare-exhausted";
        case LevelKind::Recurse: return "recurse";
        case LevelKind::BaseCase: return "base-case";
    }
    return "unknown";
}

double LevelContext::atom_measure_a(std::uint64_t a_prime_bits) const {
    if (dense) return atom_a[compress_bits(a_prime_bits, x.mask.bits)];
    return nu_a0.mass_of(a_prime_bits);
}

double LevelContext::atom_measure_b(std::uint64_t b_prime_bits) const {
    if (dense) return atom_b[compress_bits(b_prime_bits, x.mask.bits)];
    return nu_b0.mass_of(b_prime_bits);
}

std::optional<int> LevelContext::lookup_first_yes_a(std::uint64_t a_prime_bits) const {
    if (dense) {
        const std::int32_t j = fy_a[compress_bits(a_prime_bits, x.mask.bits)];
        if (j < 0) return std::nullopt;
        return j;
    }
    return first_yes_a(schedule, SubsetMask{a_prime_bits, x.mask.n});
}

std::optional<int> LevelContext::lookup_first_yes_b(std::uint64_t b_prime_bits) const {
    if (dense) {
        const std::int32_t j = fy_b[compress_bits(b_prime_bits, x.mask.bits)];
        if (j < 0) return std::nullopt;
        return j;
    }
    return first_yes_b(schedule, SubsetMask{b_prime_bits, x.mask.n});
}

LevelContext build_level_context(const Dist& mu_a, const Dist& mu_b, GroundSet x, double eps,
                                 std::uint64_t seed, double t_cap_constant) {
    LevelContext ctx;
    ctx.x = x;
    ctx.eps = eps;
    ctx.xn = x.size();
    ctx.threshold = std::ldexp(eps, -2 * ctx.xn);
    ctx.nu_a0 = project(mu_a, x);
    ctx.nu_b0 = project(mu_b, x);
    ctx.schedule =
        build_schedule_projected(ctx.nu_a0, ctx.nu_b0, x, eps, seed, t_cap_constant);
    ctx.index_width =
        std::bit_width(static_cast<std::uint64_t>(ctx.schedule.steps.size() + 1));

    ctx.dense = ctx.xn <= kDenseContextBits;
    if (ctx.dense) {
        const std::size_t size = std::size_t{1} << ctx.xn;
        ctx.atom_a.assign(size, 0.0);
        for (const auto& [mask, w] : ctx.nu_a0.support) {
            ctx.atom_a[compress_bits(mask.bits, x.mask.bits)] += w;
        }
        ctx.atom_b.assign(size, 0.0);
        for (const auto& [mask, w] : ctx.nu_b0.support) {
            ctx.atom_b[compress_bits(mask.bits, x.mask.bits)] += w;
        }

        ctx.fy_a.assign(size, -1);
        ctx.fy_b.assign(size, -1);
        for (std::size_t j = 0; j < ctx.schedule.steps.size(); ++j) {
            const ScheduleStep& step = ctx.schedule.steps[j];
            const std::uint64_t tested_c =
                compress_bits(tested_mask(step, x).bits, x.mask.bits);
            std::vector<std::int32_t>& fy = step.side == Side::A ? ctx.fy_a : ctx.fy_b;
            std::uint64_t s = tested_c;
            while (true) {
                if (fy[s] < 0) fy[s] = static_cast<std::int32_t>(j);
                if (s == 0) break;
                s = (s - 1) & tested_c;
            }
        }
    }
    return ctx;
}

SubResult run_subprotocol(const LevelContext& ctx, SubsetMask a, SubsetMask b,
                          Transcript* transcript) {
    const std::uint64_t a_prime = a.bits & ctx.x.mask.bits;
    const std::uint64_t b_prime = b.bits & ctx.x.mask.bits;

    SubResult result;

    // Threshold step: both bits are always sent so message lengths do not
    // depend on their values.
    const bool bit_a = ctx.atom_measure_a(a_prime) <= ctx.threshold;
    const bool bit_b = ctx.atom_measure_b(b_prime) <= ctx.threshold;
    if (transcript) {
        transcript->append(Side::A, bit_a ? "1" : "0", "threshold-a");
        transcript->append(Side::B, bit_b ? "1" : "0", "threshold-b");
    }
    result.bits_sent = 2;
    if (bit_a || bit_b) {
        result.type = SubResult::Type::Declare;
        result.answer_disjoint = false;
        result.kind = LevelKind::DeclareThreshold;
        return result;
    }

    const std::vector<ScheduleStep>& steps = ctx.schedule.steps;
    if (steps.empty()) {
        result.type = SubResult::Type::Declare;
        result.answer_disjoint = false;
        result.kind = declare_kind_for(ctx.schedule.stop);
        return result;
    }

    // Index exchange: each party reports its first-yes step (or "none",
    // encoded as |steps|); the minimum is the true sequential stopping step.
    const std::optional<int> ia = ctx.lookup_first_yes_a(a_prime);
    const std::optional<int> ib = ctx.lookup_first_yes_b(b_prime);
    const int none = static_cast<int>(steps.size());
    if (transcript) {
        transcript->append(Side::A,
                           encode_bits(static_cast<std::uint64_t>(ia.value_or(none)),
                                       ctx.index_width),
                           "index-a");
        transcript->append(Side::B,
                           encode_bits(static_cast<std::uint64_t>(ib.value_or(none)),
                                       ctx.index_width),
                           "index-b");
    }
    result.bits_sent += 2 * ctx.index_width;

    const int m = std::min(ia.value_or(none), ib.value_or(none));
    if (m < none) {
        result.type = SubResult::Type::Recurse;
        result.kind = LevelKind::Recurse;
        result.step_index = m;
        result.y = GroundSet{y_candidate(steps[static_cast<std::size_t>(m)], ctx.x)};
        return result;
    }

    result.type = SubResult::Type::Declare;
    result.answer_disjoint = false;
    result.kind = declare_kind_for(ctx.schedule.stop);
    return result;
}

SubResult run_sequential_reference(const LevelContext& ctx, SubsetMask a, SubsetMask b,
                                   int& membership_bits) {
    const SubsetMask a_prime{a.bits & ctx.x.mask.bits, ctx.x.mask.n};
    const SubsetMask b_prime{b.bits & ctx.x.mask.bits, ctx.x.mask.n};
    membership_bits = 0;

    SubResult result;
    const bool bit_a = ctx.atom_measure_a(a_prime.bits) <= ctx.threshold;
    const bool bit_b = ctx.atom_measure_b(b_prime.bits) <= ctx.threshold;
    result.bits_sent = 2;
    if (bit_a || bit_b) {
        result.type = SubResult::Type::Declare;
        result.answer_disjoint = false;
        result.kind = LevelKind::DeclareThreshold;
        return result;
    }

    // Literal walk: one membership bit per step, with the family history
    // materialized as removal masks.
    FamilyState state{ctx.x, {}, {}};
    for (std::size_t j = 0; j < ctx.schedule.steps.size(); ++j) {
        const ScheduleStep& step = ctx.schedule.steps[j];
        const SubsetMask tested = tested_mask(step, ctx.x);
        ++membership_bits;
        if (step.side == Side::A) {
            if (is_subset(a_prime, tested) && family_contains_a(state, a_prime)) {
                result.type = SubResult::Type::Recurse;
                result.kind = LevelKind::Recurse;
                result.step_index = static_cast<int>(j);
                result.y = GroundSet{y_candidate(step, ctx.x)};
                result.bits_sent += membership_bits;
                return result;
            }
            state.add_removal_a(tested);
        } else {
            if (is_subset(b_prime, tested) && family_contains_b(state, b_prime)) {
                result.type = SubResult::Type::Recurse;
                result.kind = LevelKind::Recurse;
                result.step_index = static_cast<int>(j);
                result.y = GroundSet{y_candidate(step, ctx.x)};
                result.bits_sent += membership_bits;
                return result;
            }
            state.add_removal_b(tested);
        }
    }

    result.type = SubResult::Type::Declare;
    result.answer_disjoint = false;
    result.kind = declare_kind_for(ctx.schedule.stop);
    result.bits_sent += membership_bits;
    return result;
}

SubResult run_subprotocol(const Dist& mu_a, const Dist& mu_b, GroundSet x, double eps,
                          std::uint64_t seed, SubsetMask a, SubsetMask b,
                          Transcript& transcript, double t_cap_constant) {
    const LevelContext ctx = build_level_context(mu_a, mu_b, x, eps, seed, t_cap_constant);
    return run_subprotocol(ctx, a, b, &transcript);
}

SubResult run_sequential_reference(const Dist& mu_a, const Dist& mu_b, GroundSet x,
                                   double eps, std::uint64_t seed, SubsetMask a,
                                   SubsetMask b, int& membership_bits,
                                   double t_cap_constant) {
    const LevelContext ctx = build_level_context(mu_a, mu_b, x, eps, seed, t_cap_constant);
    return run_sequential_reference(ctx, a, b, membership_bits);
}

ProtocolEngine::ProtocolEngine(Dist mu_a, Dist mu_b, double eps, std::uint64_t seed,
                               double t_cap_constant)
    : mu_a_(std::move(mu_a)),
      mu_b_(std::move(mu_b)),
      eps_(eps),
      seed_(seed),
      t_cap_constant_(t_cap_constant) {
    if (mu_a_.n != mu_b_.n) throw PreconditionError("engine: mismatched ground sets");
    if (!(eps_ > 0.0) || !(eps_ < 0.5)) {
        throw PreconditionError("engine: eps must lie in (0, 1/2)");
    }
}

std::shared_ptr<const LevelContext> ProtocolEngine::level(SubsetMask x_mask) const {
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        auto it = cache_.find(x_mask.bits);
        if (it != cache_.end()) return it->second;
    }
    auto built = std::make_shared<const LevelContext>(build_level_context(
        mu_a_, mu_b_, GroundSet{x_mask}, eps_, seed_, t_cap_constant_));
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto [it, inserted] = cache_.try_emplace(x_mask.bits, std::move(built));
    return it->second;
}

namespace {

// One protocol run; Transcript/trace sinks may be null for the lean path.
template <typename TraceSink>
void run_loop(const ProtocolEngine& engine, SubsetMask a, SubsetMask b,
              Transcript* transcript, TraceSink&& record, bool& answer_disjoint,
              long long& cost_bits) {
    const int n = engine.n();
    if (a.n != n || b.n != n || (a.bits & ~full_bits(n)) != 0 ||
        (b.bits & ~full_bits(n)) != 0) {
        throw PreconditionError("run: inputs outside the ground set");
    }
    const double log_inv_eps = std::log2(1.0 / engine.eps());

    GroundSet x = full_ground_set(n);
    cost_bits = 0;
    for (int depth = 0;; ++depth) {
        if (depth > kMaxGroundSetSize + 1) {
            throw std::logic_error("protocol failed to terminate");
        }
        // Semantic invariant: outside the current ground set the inputs are
        // already known disjoint.
        if (((a.bits & ~x.mask.bits) & (b.bits & ~x.mask.bits)) != 0) {
            throw std::logic_error("ground-set invariant violated");
        }

        const int xn = x.size();
        if (static_cast<double>(xn) <= 4.0 * log_inv_eps) {
            const std::uint64_t a_prime = a.bits & x.mask.bits;
            if (transcript) {
                transcript->append(Side::A,
                                   encode_bits(compress_bits(a_prime, x.mask.bits), xn),
                                   "base-a");
            }
            cost_bits += xn;
            answer_disjoint = (a_prime & b.bits & x.mask.bits) == 0;
            record(x.mask, LevelKind::BaseCase, -1);
            return;
        }

        const auto ctx = engine.level(x.mask);
        const SubResult sub = run_subprotocol(*ctx, a, b, transcript);
        cost_bits += sub.bits_sent;
        if (sub.type == SubResult::Type::Declare) {
            answer_disjoint = sub.answer_disjoint;
            record(x.mask, sub.kind, -1);
            return;
        }

        if (set_size(sub.y.mask) > xn / 2) {
            throw std::logic_error("halving violated: |Y| > |X|/2");
        }
        record(x.mask, LevelKind::Recurse, sub.step_index);
        x = sub.y;
    }
}

}  // namespace

RunOutcome ProtocolEngine::run(SubsetMask a, SubsetMask b) const {
    RunOutcome out;
    run_loop(
        *this, a, b, &out.transcript,
        [&](SubsetMask x, LevelKind kind, int step) {
            out.trace.push_back(LevelTrace{x, kind, step});
        },
        out.answer_disjoint, out.cost_bits);
    out.correct = out.answer_disjoint == masks_disjoint(a, b);
    return out;
}

LeanOutcome ProtocolEngine::run_lean(SubsetMask a, SubsetMask b) const {
    LeanOutcome out;
    long long cost = 0;
    run_loop(
        *this, a, b, nullptr,
        [&](SubsetMask, LevelKind kind, int) {
            if (out.levels < static_cast<int>(out.kinds.size())) {
                out.kinds[static_cast<std::size_t>(out.levels)] = kind;
            }
            ++out.levels;
        },
        out.answer_disjoint, cost);
    out.cost_bits = static_cast<int>(cost);
    out.correct = out.answer_disjoint == masks_disjoint(a, b);
    return out;
}

RunOutcome run_protocol(const Dist& mu_a, const Dist& mu_b, double eps, std::uint64_t seed,
                        SubsetMask a, SubsetMask b, double t_cap_constant) {
    const ProtocolEngine engine(mu_a, mu_b, eps, seed, t_cap_constant);
    return engine.run(a, b);
}

std::optional<Side> first_divergence_speaker(const Transcript& t1, const Transcript& t2) {
    const std::size_t common = std::min(t1.messages.size(), t2.messages.size());
    for (std::size_t i = 0; i < common; ++i) {
        const Message& m1 = t1.messages[i];
        const Message& m2 = t2.messages[i];
        if (m1.speaker != m2.speaker || m1.bits != m2.bits || m1.label != m2.label) {
            return m1.speaker;
        }
    }
    if (t1.messages.size() != t2.messages.size()) {
        const Transcript& longer = t1.messages.size() > t2.messages.size() ? t1 : t2;
        return longer.messages[common].speaker;
    }
    return std::nullopt;
}

}  // namespace disj
