#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace fame {

// FNV-1a over raw bytes, optionally chained from a previous hash value.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t basis = 0xcbf29ce484222325ull) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic PRNG with platform-stable output. <random> distributions are
// implementation-defined, so everything that must reproduce bit-exactly
// (subsampling, shuffles, synthetic corpora) goes through this.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Unbiased draw from [0, bound); bound
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = bound * (UINT64_MAX / bound);
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % bound;
    }

    // Uniform double in [0, 1).
    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            using std::swap;
            swap(v[i - 1], v[j]);
        }
    }

    // Floyd's algorithm would bias ordering; plain partial Fisher-Yates keeps
    // the draw order deterministic and the result sorted afterwards if needed.
    std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n) {
        std::vector<std::size_t> idx(population);
        for (std::size_t i = 0; i < population; ++i) idx[i] = i;
        if (n >= population) return idx;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t j = i + static_cast<std::size_t>(below(population - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(n);
        return idx;
    }

private:
    std::uint64_t state_;
};

// Every pipeline stage derives its own stream from the root seed, so changing
// the root changes all stages and no stage perturbs another.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stage) {
    std::uint64_t s = fnv1a64(stage) ^ root;
    return splitmix64(s);
}

} // namespace fame
