#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>

namespace perfrec {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// FNV-1a over a byte view, for keying streams by labels or feature rows.
std::uint64_t hash_bytes(std::span<const std::byte> bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t hash_label(std::string_view label);
std::uint64_t hash_row(std::span<const double> row);

/// A seeded random stream. Every sampling operation in the library takes one
/// explicitly; streams for parallel tasks are derived from (master, ids...).
class Stream {
public:
    using engine_type = std::mt19937_64;

    explicit Stream(std::uint64_t seed) : engine_(mix64(seed)) {}

    static Stream derive(std::uint64_t master, std::initializer_list<std::uint64_t> ids);

    engine_type& engine() { return engine_; }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    double normal(double mu = 0.0, double sigma = 1.0) {
        return std::normal_distribution<double>(mu, sigma)(engine_);
    }
    bool bernoulli(double p) { return uniform() < p; }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
    int binomial(int n, double p) { return std::binomial_distribution<int>(n, p)(engine_); }

    /// Draw an index proportional to nonnegative weights (total must be > 0).
    std::size_t categorical(std::span<const double> weights, double total);

private:
    engine_type engine_;
};

}  // namespace perfrec
