#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace rtraj {

/// Deterministic random stream.
///
/// Wraps std::mt19937_64 but generates doubles and bounded integers from raw
/// 64-bit draws, so the produced sequence depends only on the seed, never on
/// the standard library's distribution implementations. Every stochastic
/// component (parameter init, noise vectors, batch shuffles, scene synthesis)
/// draws from an Rng derived from the run seed, which is what makes whole
/// pipeline runs byte-reproducible.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; second value cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // Avoid log(0).
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * M_PI * u2;
        cached_ = r * std::sin(t);
        has_cached_ = true;
        return r * std::cos(t);
    }

    std::vector<double> normal_vec(std::size_t n) {
        std::vector<double> out(n);
        for (auto& v : out) v = normal();
        return out;
    }

    /// Uniform integer in [0, n). n must be > 0.
    std::size_t below(std::size_t n) {
        return static_cast<std::size_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

  private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// FNV-1a over a label; used to derive independent substreams from one seed.
inline std::uint64_t hash_label(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t mix_u64(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined value.
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Substream derivation: derive_rng(seed, "pretrain/fwd/noise", epoch).
inline Rng derive_rng(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) {
    return Rng(mix_u64(mix_u64(seed, hash_label(label)), index));
}

}  // namespace rtraj
