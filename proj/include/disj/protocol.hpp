#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "disj/dist.hpp"
#include "disj/rectangle.hpp"
#include "disj/sets.hpp"

namespace disj {

enum class Side : std::uint8_t { A, B };

// One rectangle removal along the all-no path. side == A means the tested set
// is F = A_i intersect 2^u with Y-candidate u; side == B means the tested set
// is G = B_i intersect 2^{x\u} with Y-candidate x\u. rect_measure is the
// conditioned measure of the removed rectangle.
struct ScheduleStep {
    SubsetMask u;
    Side side = Side::A;
    double rect_measure = 0.0;
};

SubsetMask y_candidate(const ScheduleStep& step, GroundSet x);
SubsetMask tested_mask(const ScheduleStep& step, GroundSet x);

enum class StopReason : std::uint8_t { AlmostEmpty, Exhausted, DegenerateZeroMass };

// The input-independent removal sequence for one subprotocol invocation.
// Computable from (mu, x, eps, seed) alone; both parties derive it locally.
struct Schedule {
    GroundSet x;
    double eps = 0.0;
    std::vector<ScheduleStep> steps;
    StopReason stop = StopReason::AlmostEmpty;
    int stop_at_step = 0;
    long long t_cap = 0;
};

Schedule build_schedule(const Dist& mu_a, const Dist& mu_b, GroundSet x, double eps,
                        std::uint64_t seed, double t_cap_constant = 2.0);

// Smallest A-side step index whose tested mask contains a_prime (first-yes
// containment subsumes family membership), and the B-side analogue.
std::optional<int> first_yes_a(const Schedule& s, SubsetMask a_prime);
std::optional<int> first_yes_b(const Schedule& s, SubsetMask b_prime);

struct Message {
    Side speaker;
    std::string bits;
    std::string label;
};

struct Transcript {
    std::vector<Message> messages;
    long long total_bits = 0;

    void append(Side speaker, std::string bits, std::string label);
};

// Why a protocol level ended.
enum class LevelKind : std::uint8_t {
    DeclareThreshold,
    DeclareAlmostEmpty,
    DeclareDegenerate,
    DeclareExhausted,
    Recurse,
    BaseCase,
};

const char* level_kind_name(LevelKind kind);

struct SubResult {
    enum class Type : std::uint8_t { Declare, Recurse } type = Type::Declare;
    bool answer_disjoint = false;  // valid for Declare
    LevelKind kind = LevelKind::DeclareThreshold;
    GroundSet y;          // valid for Recurse
    int step_index = -1;  // valid for Recurse
    int bits_sent = 0;
};

// All input-independent data for running the subprotocol on ground set x:
// projected marginals, the schedule, the per-party index-message width, and
// (for small x) dense atom-measure and first-yes lookup tables over the
// compressed coordinates of x.
struct LevelContext {
    GroundSet x;
    double eps = 0.0;
    double threshold = 0.0;  // eps / 2^{2|x|}
    int xn = 0;
    Dist nu_a0, nu_b0;
    Schedule schedule;
    int index_width = 1;

    bool dense = false;
    std::vector<double> atom_a, atom_b;
    std::vector<std::int32_t> fy_a, fy_b;  // -1 = none

    double atom_measure_a(std::uint64_t a_prime_bits) const;
    double atom_measure_b(std::uint64_t b_prime_bits) const;
    std::optional<int> lookup_first_yes_a(std::uint64_t a_prime_bits) const;
    std::optional<int> lookup_first_yes_b(std::uint64_t b_prime_bits) const;
};

LevelContext build_level_context(const Dist& mu_a, const Dist& mu_b, GroundSet x, double eps,
                                 std::uint64_t seed, double t_cap_constant = 2.0);

// Index-exchange realization: 2 threshold bits, then one first-yes index per
// party. Outcome provably equals the sequential walk because the all-no
// family evolution is input-independent and the minimum of the two first-yes
// indices is the true stopping step. transcript may be null (lean mode).
SubResult run_subprotocol(const LevelContext& ctx, SubsetMask a, SubsetMask b,
                          Transcript* transcript);

// The literal one-membership-bit-per-step walk, maintaining family state
// explicitly. Used as the equivalence oracle for the index exchange;
// membership_bits counts the bits its loop would send.
SubResult run_sequential_reference(const LevelContext& ctx, SubsetMask a, SubsetMask b,
                                   int& membership_bits);

// Convenience wrappers that build a one-shot context.
SubResult run_subprotocol(const Dist& mu_a, const Dist& mu_b, GroundSet x, double eps,
                          std::uint64_t seed, SubsetMask a, SubsetMask b,
                          Transcript& transcript, double t_cap_constant = 2.0);
SubResult run_sequential_reference(const Dist& mu_a, const Dist& mu_b, GroundSet x, double eps,
                                   std::uint64_t seed, SubsetMask a, SubsetMask b,
                                   int& membership_bits, double t_cap_constant = 2.0);

struct LevelTrace {
    SubsetMask x;
    LevelKind kind;
    int step_index = -1;
};

struct RunOutcome {
    bool answer_disjoint = false;
    bool correct = false;
    long long cost_bits = 0;
    std::vector<LevelTrace> trace;
    Transcript transcript;
};

// Allocation-light outcome for exhaustive evaluation.
struct LeanOutcome {
    bool answer_disjoint = false;
    bool correct = false;
    int cost_bits = 0;
    int levels = 0;
    std::array<LevelKind, 8> kinds{};
};

// Shares schedules and projected marginals across runs. Level contexts are
// memoized by ground-set mask (eps and seed are fixed per engine); entries
// are immutable and the first writer wins.
class ProtocolEngine {
  public:
    ProtocolEngine(Dist mu_a, Dist mu_b, double eps, std::uint64_t seed,
                   double t_cap_constant = 2.0);

    RunOutcome run(SubsetMask a, SubsetMask b) const;
    LeanOutcome run_lean(SubsetMask a, SubsetMask b) const;

    std::shared_ptr<const LevelContext> level(SubsetMask x_mask) const;

    double eps() const { return eps_; }
    int n() const { return mu_a_.n; }
    std::uint64_t seed() const { return seed_; }

  private:
    Dist mu_a_, mu_b_;
    double eps_;
    std::uint64_t seed_;
    double t_cap_constant_;
    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<std::uint64_t, std::shared_ptr<const LevelContext>> cache_;
};

// Full protocol: iterate the subprotocol from x = [n], halving until
// |x| <= 4 log2(1/eps), then Alice ships a intersect x verbatim and Bob
// answers exactly. The output announcement is not counted as communication.
RunOutcome run_protocol(const Dist& mu_a, const Dist& mu_b, double eps, std::uint64_t seed,
                        SubsetMask a, SubsetMask b, double t_cap_constant = 2.0);

// Speaker of the first message where the transcripts differ (or where one
// ends while the other continues); nullopt when identical. Supports the
// information-flow replay check.
std::optional<Side> first_divergence_speaker(const Transcript& t1, const Transcript& t2);

}  // namespace disj
