#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fervit {

// Deterministic random source. mt19937_64 output is fully specified by the
// standard; the std:: distributions are not, so the draws below are spelled
// out to keep seeded runs reproducible across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, n) via rejection sampling (no modulo bias).
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform_real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller (one value per call, no caching so the
    // stream position is easy to reason about).
    double normal() {
        double u1;
        do {
            u1 = uniform_real();
        } while (u1 <= 0.0);
        const double u2 = uniform_real();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool bernoulli(double p) { return uniform_real() < p; }

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Draw k distinct indices from [0, n) uniformly without replacement.
    // Partial Fisher-Yates over an index table; output order is the draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::vector<std::size_t> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k && i < n; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(uniform_index(n - i));
            std::swap(idx[i], idx[j]);
            out.push_back(idx[i]);
        }
        return out;
    }

    // Engine state round-trips through text for exact-resume checkpoints.
    std::string serialize() const {
        std::ostringstream oss;
        oss << engine_;
        return oss.str();
    }

    void deserialize(const std::string& s) {
        std::istringstream iss(s);
        iss >> engine_;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace fervit
