#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace albi {

/// Deterministic random source. Wraps std::mt19937_64 (whose output sequence
/// is fixed by the standard) and derives every variate with explicit integer
/// arithmetic instead of the std distributions, whose draw sequences differ
/// across standard library implementations. Identical seeds therefore yield
/// identical draw sequences on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). Unbiased via rejection of the partial
    /// final block of the 2^64 range.
    std::uint64_t below(std::uint64_t n) {
        assert(n > 0);
        const std::uint64_t min = (-n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t x = next_u64();
            if (x >= min) return x % n;
        }
    }

    /// True with probability p. Always consumes exactly one draw.
    bool bernoulli(double p) { return next_double() < p; }

    /// Standard normal via Box-Muller. Consumes two uniforms per call.
    double gaussian() {
        double u1 = next_double();
        const double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();  // guard log(0)
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    /// In-place Fisher-Yates shuffle (descending index order).
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// k draws without replacement from `pool`, returned in draw order.
    /// Each draw removes the chosen element; remaining order is preserved,
    /// so the draw sequence is a pure function of (pool, k, state).
    template <typename T>
    std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t k) {
        assert(k <= pool.size());
        std::vector<T> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = static_cast<std::size_t>(below(pool.size()));
            out.push_back(pool[j]);
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
        }
        return out;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace albi
