#include <doctest.h>

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "eqz/rng.hpp"

using namespace eqz;

TEST_SUITE("rng") {

TEST_CASE("philox4x32-10 known-answer vectors") {
  // Reference vectors from the Random123 distribution (kat_vectors).
  auto r0 = Philox4x32::block({0u, 0u}, {0u, 0u, 0u, 0u});
  CHECK(r0[0] == 0x6627e8d5u);
  CHECK(r0[1] == 0xe169c58du);
  CHECK(r0[2] == 0xbc57ac4cu);
  CHECK(r0[3] == 0x9b00dbd8u);

  auto rf = Philox4x32::block(
      {0xffffffffu, 0xffffffffu},
      {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu});
  CHECK(rf[0] == 0x408f276du);
  CHECK(rf[1] == 0x41c83b0eu);
  CHECK(rf[2] == 0xa20bc7c6u);
  CHECK(rf[3] == 0x6d5451fdu);

  auto rp = Philox4x32::block({0xa4093822u, 0x299f31d0u},
                              {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u});
  CHECK(rp[0] == 0xd16cfe09u);
  CHECK(rp[1] == 0x94fdccebu);
  CHECK(rp[2] == 0x5001e420u);
  CHECK(rp[3] == 0x24126ea1u);
}

TEST_CASE("uniforms are pure functions of the counter words") {
  auto a = uniform2(42, 1, 2, 3, 4);
  auto b = uniform2(42, 1, 2, 3, 4);
  CHECK(a[0] == b[0]);
  CHECK(a[1] == b[1]);
  CHECK(a[0] > 0.0);
  CHECK(a[0] < 1.0);
  CHECK(a[1] > 0.0);
  CHECK(a[1] < 1.0);
  auto c = uniform2(42, 1, 2, 3, 5);
  CHECK(a[0] != c[0]);
  auto d = uniform2(43, 1, 2, 3, 4);
  CHECK(a[0] != d[0]);
}

TEST_CASE("gaussian_c moments and normality") {
  const long n = 200000;
  long double sr = 0, si = 0, s2 = 0, s4 = 0;
  std::vector<long> bins(20, 0);
  // equiprobable bins for N(0, 1/2): cdf(x) = 0.5 erfc(-x) since sigma*sqrt(2) = 1
  auto cdf = [](double x) { return 0.5 * std::erfc(-x); };
  for (long i = 0; i < n; ++i) {
    std::complex<double> g = gaussian_c(2024, 0, std::uint32_t(i), 0, 0);
    sr += g.real();
    si += g.imag();
    s2 += std::norm(g);
    s4 += std::norm(g) * std::norm(g);
    int b = int(cdf(g.real()) * 20.0);
    ++bins[std::min(19, std::max(0, b))];
  }
  CHECK(std::abs(double(sr / n)) < 0.01);
  CHECK(std::abs(double(si / n)) < 0.01);
  CHECK(double(s2 / n) == doctest::Approx(1.0).epsilon(0.01));   // E|g|^2 = 1
  CHECK(double(s4 / n) == doctest::Approx(2.0).epsilon(0.03));   // E|g|^4 = 2

  // chi-square goodness of fit on Re(g), 19 df, 1% critical value 36.191;
  // the draw is deterministic, so this never flakes.
  double chi2 = 0;
  double expect = double(n) / 20.0;
  for (long b : bins) chi2 += (double(b) - expect) * (double(b) - expect) / expect;
  CHECK(chi2 < 36.191);
}

TEST_CASE("gaussian streams keyed by distinct words do not collide") {
  std::complex<double> a = gaussian_c(7, 20, 0, 0, 3);
  CHECK(a != gaussian_c(7, 20, 0, 0, 4));
  CHECK(a != gaussian_c(7, 20, 0, 1, 3));
  CHECK(a != gaussian_c(7, 20, 1, 0, 3));
  CHECK(a != gaussian_c(7, 21, 0, 0, 3));
  CHECK(a != gaussian_c(8, 20, 0, 0, 3));
  CHECK(a == gaussian_c(7, 20, 0, 0, 3));
}

}  // TEST_SUITE
