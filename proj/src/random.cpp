#include "perfrec/random.hpp"

#include <cstring>

namespace perfrec {

std::uint64_t hash_bytes(std::span<const std::byte> bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (std::byte b : bytes) {
        h ^= static_cast<std::uint64_t>(b);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t hash_label(std::string_view label) {
    return hash_bytes(std::as_bytes(std::span<const char>(label.data(), label.size())));
}

std::uint64_t hash_row(std::span<const double> row) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : row) {
        // -0.0 and 0.0 denote the same observation
        const double canon = v == 0.0 ? 0.0 : v;
        std::uint64_t bits = 0;
        std::memcpy(&bits, &canon, sizeof bits);
        h = mix64(h ^ bits);
    }
    return h;
}

Stream Stream::derive(std::uint64_t master, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t s = mix64(master);
    for (std::uint64_t id : ids) s = mix64(s ^ mix64(id + 0x632be59bd9b4e019ULL));
    return Stream(s);
}

std::size_t Stream::categorical(std::span<const double> weights, double total) {
    const double r = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (r < acc) return i;
    }
    // rounding at the top end: last positive weight
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0) return i;
    return 0;
}

}  // namespace perfrec
