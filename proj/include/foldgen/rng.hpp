#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace foldgen {

// splitmix64, used both as a mixer for seed derivation and to seed the
// main generator. Reference: Steele, Lea, Flood (2014).
inline std::uint64_t splitmix64_next(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic sub-seed derivation: hash the base seed with a sequence of
// indices (category, garment, episode...). Worker-count independent by
// construction. Each part is mixed through the full splitmix finalizer and
// the running hash re-mixed, so nearby index tuples land far apart.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> parts) {
    std::uint64_t s = base;
    std::uint64_t h = splitmix64_next(s);
    std::uint64_t i = 1;
    for (std::uint64_t p : parts) {
        std::uint64_t t = p ^ (0x9e3779b97f4a7c15ull * i++);
        h ^= splitmix64_next(t);
        h = splitmix64_next(h);
    }
    return h;
}

// xoshiro256++ with explicit double conversion. Not std::mt19937 +
// distributions: the std distribution algorithms are implementation
// defined and we need bit-identical streams everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) w = splitmix64_next(s);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive bounds
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    // Box-Muller, no cached spare so the stream layout stays obvious
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

}  // namespace foldgen
