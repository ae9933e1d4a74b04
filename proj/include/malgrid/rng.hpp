#ifndef MALGRID_RNG_HPP
#define MALGRID_RNG_HPP

#include <cstdint>
#include <vector>

namespace malgrid {

// SplitMix64 finalizer. Bijective on 64-bit words, used to turn small
// user-facing seeds into well-mixed generator states and to derive
// per-stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic seed derivation for independent streams (per-epoch
// shuffles, per-fold model seeds, per-layer init draws).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
}

// xorshift64* — the project PRNG. 64-bit state, 64-bit output, identical
// sequences on every platform. Not cryptographic.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {
        if (state_ == 0) state_ = 0x9e3779b97f4a7c15ULL;
    }

    std::uint64_t next_u64() {
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dULL;
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double next_double(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    std::uint8_t next_byte() { return static_cast<std::uint8_t>(next_u64() & 0xff); }

private:
    std::uint64_t state_;
};

// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(v[i - 1], v[j]);
    }
}

// 0..n-1 shuffled by a fresh generator for the given seed.
inline std::vector<int> shuffled_indices(int n, std::uint64_t seed) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    Rng rng(seed);
    shuffle(idx, rng);
    return idx;
}

}  // namespace malgrid

#endif
