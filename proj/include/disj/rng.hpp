#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace disj {

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace detail

// Named, seeded deterministic random stream. Each consumer owns its stream;
// there is no hidden global randomness. derive() produces an independent child
// stream for a sub-purpose, so draw sequences do not depend on the order in
// which unrelated components consume randomness.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed, std::string_view name = "")
        : seed_(detail::splitmix64(seed ^ detail::fnv1a(name))), gen_(seed_) {}

    std::uint64_t word() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) {
        return bound == 0 ? 0 : word() % bound;
    }

    std::uint64_t seed() const { return seed_; }

    RandomStream derive(std::string_view tag, std::uint64_t salt = 0) const {
        return RandomStream(detail::splitmix64(seed_ ^ salt), tag);
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace disj
