#pragma once

// Counter-based random streams. Every draw is a pure function of
// (seed, counter words), so sampling is reproducible bit-for-bit no matter
// how work is partitioned across threads.

#include <array>
#include <complex>
#include <cstdint>

namespace eqz {

// Philox4x32-10 block cipher (Salmon et al. counter-based generator).
struct Philox4x32 {
  static std::array<std::uint32_t, 4> block(const std::array<std::uint32_t, 2>& key,
                                            std::array<std::uint32_t, 4> ctr);
};

// Two uniforms in (0,1) from one Philox block.
std::array<double, 2> uniform2(std::uint64_t seed, std::uint32_t w0, std::uint32_t w1,
                               std::uint32_t w2, std::uint32_t w3);

// Standard complex Gaussian, E|a|^2 = 1 (so Re and Im are N(0, 1/2)).
// One Philox block per draw; counter words are the caller's provenance
// (this library uses w0 = p, w1 = sample, w2 = factor/purpose, w3 = index).
std::complex<double> gaussian_c(std::uint64_t seed, std::uint32_t w0, std::uint32_t w1,
                                std::uint32_t w2, std::uint32_t w3);

}  // namespace eqz
