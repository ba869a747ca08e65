#pragma once
#include <cmath>
#include <cstdint>

namespace fpmlab {

// Philox4x32-10 counter-based generator. Stateless: every draw is a pure
// function of (key, counter), so particle updates are reproducible bit-exactly
// at any thread count and iteration order.
struct Philox {
    static constexpr std::uint32_t M0 = 0xD2511F53u;
    static constexpr std::uint32_t M1 = 0xCD9E8D57u;
    static constexpr std::uint32_t W0 = 0x9E3779B9u;
    static constexpr std::uint32_t W1 = 0xBB67AE85u;

    struct Block {
        std::uint32_t v[4];
    };

    static Block round10(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2,
                         std::uint32_t c3, std::uint32_t k0, std::uint32_t k1) {
        for (int r = 0; r < 10; ++r) {
            const std::uint64_t p0 = std::uint64_t(M0) * c0;
            const std::uint64_t p1 = std::uint64_t(M1) * c2;
            const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
            const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
            const std::uint32_t n0 = hi1 ^ c1 ^ k0;
            const std::uint32_t n1 = lo1;
            const std::uint32_t n2 = hi0 ^ c3 ^ k1;
            const std::uint32_t n3 = lo0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += W0; k1 += W1;
        }
        return Block{{c0, c1, c2, c3}};
    }
};

// uniform in (0, 1]: (x + 1) * 2^-32 keeps log() finite in Box-Muller
inline double u32_to_unit(std::uint32_t x) {
    return (double(x) + 1.0) * 2.3283064365386962890625e-10;
}

// One keyed draw of a pair of independent standard Gaussians (Box-Muller).
// Streams are disjoint by construction of the counter tuple.
struct GaussianPair {
    double g0, g1;
};

inline GaussianPair gaussian_pair(std::uint64_t seed, std::uint32_t replica,
                                  std::uint32_t particle, std::uint32_t step,
                                  std::uint32_t pair_index) {
    const auto b = Philox::round10(replica, particle, step, pair_index,
                                   std::uint32_t(seed), std::uint32_t(seed >> 32));
    const double u1 = u32_to_unit(b.v[0]);
    const double u2 = u32_to_unit(b.v[1]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 6.283185307179586476925286766559 * u2;
    return {r * std::cos(th), r * std::sin(th)};
}

// Keyed uniform quadruple in (0,1], for samplers that need several
// independent uniforms per object (inverse-CDF cell pick + in-cell jitter).
struct UniformQuad {
    double u[4];
};

inline UniformQuad uniform_quad(std::uint64_t seed, std::uint32_t replica,
                                std::uint32_t particle, std::uint32_t step,
                                std::uint32_t slot) {
    const auto b = Philox::round10(replica, particle, step, slot,
                                   std::uint32_t(seed) ^ 0x5851F42Du,
                                   std::uint32_t(seed >> 32) ^ 0x4C957F2Du);
    return {{u32_to_unit(b.v[0]), u32_to_unit(b.v[1]),
             u32_to_unit(b.v[2]), u32_to_unit(b.v[3])}};
}

} // namespace fpmlab
