#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ipdlab {

// splitmix64 finalizer; used for seed derivation so that every simulation,
// round and decision gets an independent, schedule-invariant stream.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> streams) {
    std::uint64_t s = mix64(base);
    for (std::uint64_t v : streams) s = mix64(s ^ mix64(v));
    return s;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a) { return derive_seed(base, {a}); }
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) { return derive_seed(base, {a, b}); }
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) { return derive_seed(base, {a, b, c}); }

// FNV-1a, used to fingerprint datasets so resampling streams follow content.
inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a_u64(std::uint64_t v, std::uint64_t h) { return fnv1a(&v, sizeof(v), h); }

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1). Explicit construction instead of
    // std::uniform_real_distribution keeps streams identical across
    // standard-library implementations.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n). Modulo bias is negligible for the sizes used
    // here and the result is implementation-independent.
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 gen_;
};

}  // namespace ipdlab
