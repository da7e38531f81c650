#ifndef DNSREFL_RNG_HPP
#define DNSREFL_RNG_HPP

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace dnsrefl {

/// Deterministic 64-bit generator (splitmix64, Steele et al.). Every seeded
/// code path in the toolkit draws from this so that runs are reproducible
/// regardless of platform or standard-library version. State is one word;
/// the same seed always produces the same stream.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    uint64_t below(uint64_t n) {
        if (n == 0)
            return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    /// Uniform integer in [lo, hi] inclusive.
    int64_t range(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
    }

    /// Exponential inter-arrival time with the given rate (events per unit).
    double exponential(double rate) { return -std::log(1.0 - uniform()) / rate; }

    /// Bernoulli draw with probability expressed in permille.
    bool permille(int p) { return static_cast<int>(below(1000)) < p; }

private:
    uint64_t state_;
};

/// Fisher-Yates shuffle driven by Rng (std::shuffle's output is not pinned
/// across standard-library implementations).
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace dnsrefl

#endif
