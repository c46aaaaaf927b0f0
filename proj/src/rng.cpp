#include "eqz/rng.hpp"

#include <cmath>

namespace eqz {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void round_once(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
  std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
  std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
  std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
  std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> Philox4x32::block(const std::array<std::uint32_t, 2>& key,
                                               std::array<std::uint32_t, 4> ctr) {
  std::array<std::uint32_t, 2> k = key;
  for (int r = 0; r < 9; ++r) {
    round_once(ctr, k);
    k[0] += kW0;
    k[1] += kW1;
  }
  round_once(ctr, k);
  return ctr;
}

std::array<double, 2> uniform2(std::uint64_t seed, std::uint32_t w0, std::uint32_t w1,
                               std::uint32_t w2, std::uint32_t w3) {
  std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed),
                                   static_cast<std::uint32_t>(seed >> 32)};
  auto x = Philox4x32::block(key, {w0, w1, w2, w3});
  auto mk = [](std::uint32_t a, std::uint32_t b) {
    std::uint64_t v = (static_cast<std::uint64_t>(a) << 32) | b;
    return (static_cast<double>(v >> 11) + 0.5) * 0x1p-53;  // strictly inside (0,1)
  };
  return {mk(x[0], x[1]), mk(x[2], x[3])};
}

std::complex<double> gaussian_c(std::uint64_t seed, std::uint32_t w0, std::uint32_t w1,
                                std::uint32_t w2, std::uint32_t w3) {
  auto u = uniform2(seed, w0, w1, w2, w3);
  double amp = std::sqrt(-std::log(u[0]));
  double ph = 2.0 * 3.14159265358979323846 * u[1];
  return {amp * std::cos(ph), amp * std::sin(ph)};
}

}  // namespace eqz
