#include "disj/sets.hpp"

#include <charconv>
#include <cstdlib>

#include "disj/errors.hpp"

namespace disj {

SubsetMask make_mask(std::uint64_t bits, int n) {
    if (n < 1 || n > kMaxGroundSetSize) {
        throw PreconditionError("ground-set size must be in [1, 63], got " + std::to_string(n));
    }
    if ((bits & ~full_bits(n)) != 0) {
        throw PreconditionError("mask has elements outside the ground set [" + std::to_string(n) + "]");
    }
    return SubsetMask{bits, n};
}

SubsetMask union_of(std::span<const SubsetMask> masks) {
    if (masks.empty()) return SubsetMask{0, 0};
    SubsetMask out{0, masks.front().n};
    for (const SubsetMask& m : masks) {
        if (m.n != out.n) throw PreconditionError("union_of: masks over different ground sets");
        out.bits |= m.bits;
    }
    return out;
}

std::string to_set_string(SubsetMask m) {
    std::string out = "{";
    bool first = true;
    for (int i = 0; i < 64; ++i) {
        if (m.bits >> i & 1) {
            if (!first) out += ',';
            out += std::to_string(i + 1);
            first = false;
        }
    }
    out += '}';
    return out;
}

SubsetMask parse_mask(std::string_view text, int n) {
    // Trim surrounding whitespace.
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    if (text.empty()) throw PreconditionError("empty mask text");

    std::uint64_t bits = 0;
    if (text.front() == '{') {
        if (text.back() != '}') throw PreconditionError("unterminated set literal: " + std::string(text));
        text = text.substr(1, text.size() - 2);
        while (!text.empty()) {
            std::size_t comma = text.find(',');
            std::string_view tok = text.substr(0, comma);
            while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
            while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
            if (!tok.empty()) {
                int element = 0;
                auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), element);
                if (ec != std::errc{} || p != tok.data() + tok.size()) {
                    throw PreconditionError("bad set element: " + std::string(tok));
                }
                if (element < 1 || element > n) {
                    throw PreconditionError("element " + std::to_string(element) +
                                            " outside ground set [" + std::to_string(n) + "]");
                }
                bits |= std::uint64_t{1} << (element - 1);
            }
            if (comma == std::string_view::npos) break;
            text.remove_prefix(comma + 1);
        }
    } else {
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), bits);
        if (ec != std::errc{} || p != text.data() + text.size()) {
            throw PreconditionError("bad mask literal: " + std::string(text));
        }
    }
    return make_mask(bits, n);
}

std::uint64_t compress_bits(std::uint64_t m, std::uint64_t x) {
    std::uint64_t out = 0;
    int pos = 0;
    while (x != 0) {
        std::uint64_t low = x & (~x + 1);
        if (m & low) out |= std::uint64_t{1} << pos;
        x ^= low;
        ++pos;
    }
    return out;
}

std::uint64_t expand_bits(std::uint64_t c, std::uint64_t x) {
    std::uint64_t out = 0;
    int pos = 0;
    while (x != 0) {
        std::uint64_t low = x & (~x + 1);
        if (c >> pos & 1) out |= low;
        x ^= low;
        ++pos;
    }
    return out;
}

void FamilyState::add_removal_a(SubsetMask u) {
    if (u.n != ground.mask.n || !is_subset(u, ground.mask)) {
        throw PreconditionError("removal mask not contained in the ground set");
    }
    removed_a.push_back(u);
}

void FamilyState::add_removal_b(SubsetMask v) {
    if (v.n != ground.mask.n || !is_subset(v, ground.mask)) {
        throw PreconditionError("removal mask not contained in the ground set");
    }
    removed_b.push_back(v);
}

bool family_contains_a(const FamilyState& state, SubsetMask a) {
    if (a.n != state.ground.mask.n || !is_subset(a, state.ground.mask)) {
        throw PreconditionError("set not contained in the ground set");
    }
    for (const SubsetMask& u : state.removed_a) {
        if (is_subset(a, u)) return false;
    }
    return true;
}

bool family_contains_b(const FamilyState& state, SubsetMask b) {
    if (b.n != state.ground.mask.n || !is_subset(b, state.ground.mask)) {
        throw PreconditionError("set not contained in the ground set");
    }
    for (const SubsetMask& v : state.removed_b) {
        if (is_subset(b, v)) return false;
    }
    return true;
}

}  // namespace disj
