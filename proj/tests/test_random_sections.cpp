#include <doctest.h>

#include <cmath>
#include <complex>
#include <memory>
#include <sstream>

#include "eqz/bergman.hpp"
#include "eqz/discrepancy.hpp"
#include "eqz/random_sections.hpp"
#include "eqz/rng.hpp"
#include "eqz/sphere.hpp"
#include "eqz/weights.hpp"

using namespace eqz;

namespace {

std::shared_ptr<const QuadratureGrid> shared_grid() {
  static auto g = std::make_shared<QuadratureGrid>(make_grid(96, 64));
  return g;
}

std::complex<double> as_z(const ZeroEntry& e) {
  return e.point.in_chart(Chart::Z);
}

// Horner residual in the entry's own chart, relative to the coefficient mass;
// an independent backward-error certificate for every claimed root.
double root_residual(const Eigen::VectorXcd& c, const ZeroEntry& e) {
  int n = int(c.size()) - 1;
  long double scale = 0;
  for (int j = 0; j <= n; ++j) scale += std::abs(c[j]);
  std::complex<long double> acc = 0;
  std::complex<long double> v(e.point.coord.real(), e.point.coord.imag());
  if (e.point.chart == Chart::Z) {
    for (int j = n; j >= 0; --j)
      acc = acc * v + std::complex<long double>(c[j].real(), c[j].imag());
  } else {
    for (int j = 0; j <= n; ++j)
      acc = acc * v + std::complex<long double>(c[j].real(), c[j].imag());
  }
  return double(std::abs(acc) / scale);
}

}  // namespace

TEST_SUITE("random_sections") {

TEST_CASE("sampling is keyed by (seed; p, index, factor, j)") {
  SectionSpace s = build_space(6, 0, constant_weight(0.0), shared_grid());
  RandomSection r = sample_section(s, 42, 3);
  REQUIRE(r.a.size() == 7);
  CHECK(r.p == 6);
  CHECK(r.index == 3);
  for (int j = 0; j < 7; ++j)
    CHECK(r.a[j] == gaussian_c(42, 6, 3, 0, std::uint32_t(j)));

  auto tup = sample_tuple(s, 3, 42, 3);
  REQUIRE(tup.size() == 3);
  for (int f = 0; f < 3; ++f) {
    CHECK(tup[std::size_t(f)].factor == std::uint32_t(f));
    for (int j = 0; j < 7; ++j)
      CHECK(tup[std::size_t(f)].a[j] ==
            gaussian_c(42, 6, 3, std::uint32_t(f), std::uint32_t(j)));
  }
  // k = 1 collapses to the plain draw, bit for bit
  auto t1 = sample_tuple(s, 1, 42, 3);
  REQUIRE(t1.size() == 1);
  CHECK(t1[0].a == r.a);
  CHECK_THROWS_AS(sample_tuple(s, 0, 42), std::invalid_argument);

  // E|a_j|^2 = 1 across the stream
  long double acc = 0;
  for (std::uint32_t i = 0; i < 2000; ++i)
    acc += std::norm(sample_section(s, 9, i).a[2]);
  CHECK(double(acc / 2000) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("degree-1 and monomial sections have closed-form zeros") {
  SectionSpace s1 = build_space(1, 0, constant_weight(0.0), shared_grid());
  RandomSection r;
  r.p = 1;
  r.m = 0;
  r.a = Eigen::VectorXcd(2);
  r.a << std::complex<double>(0.7, -0.2), std::complex<double>(1.1, 0.4);
  Eigen::VectorXcd c = monomial_coefficients(s1, r.a);
  std::complex<double> expect = -c[0] / c[1];
  ZeroSet zs = zeros(r, s1);
  REQUIRE(zs.entries.size() == 1);
  CHECK(zs.total_multiplicity() == 1);
  CHECK(std::abs(as_z(zs.entries[0]) - expect) <= 1e-12 * std::abs(expect));

  // pure monomial z^p: all mass at the origin; constant: all at infinity
  SectionSpace sp = build_space(20, 0, constant_weight(0.0), shared_grid());
  RandomSection mono;
  mono.p = 20;
  mono.m = 0;
  mono.a = Eigen::VectorXcd::Zero(21);
  mono.a[20] = 1.0;
  ZeroSet zmono = zeros(mono, sp);
  REQUIRE(zmono.entries.size() == 1);
  CHECK(zmono.entries[0].multiplicity == 20);
  CHECK(zmono.entries[0].point.chart == Chart::Z);
  CHECK(std::abs(zmono.entries[0].point.coord) == 0.0);

  RandomSection cst;
  cst.p = 20;
  cst.m = 0;
  cst.a = Eigen::VectorXcd::Zero(21);
  cst.a[0] = std::complex<double>(0.3, 0.9);
  ZeroSet zcst = zeros(cst, sp);
  REQUIRE(zcst.entries.size() == 1);
  CHECK(zcst.entries[0].multiplicity == 20);
  CHECK(zcst.entries[0].point.chart == Chart::W);
  CHECK(std::abs(zcst.entries[0].point.coord) == 0.0);

  RandomSection zero;
  zero.p = 20;
  zero.m = 0;
  zero.a = Eigen::VectorXcd::Zero(21);
  CHECK_THROWS_AS(zeros(zero, sp), std::invalid_argument);
}

TEST_CASE("random sections: degree count, Vieta, and root residuals") {
  SectionSpace s = build_space(20, 0, gauss_bump(2.0, 0.7), shared_grid());
  for (std::uint32_t idx = 0; idx < 5; ++idx) {
    RandomSection r = sample_section(s, 5, idx);
    Eigen::VectorXcd c = monomial_coefficients(s, r.a);
    ZeroSet zs = zeros(r, s);
    CHECK(zs.total_multiplicity() == 20);
    std::complex<double> sum = 0, prod = 1;
    bool finite = true;
    for (const ZeroEntry& e : zs.entries) {
      CHECK(std::abs(e.point.coord) <= 1.0 + 1e-15);  // canonical chart
      CHECK(root_residual(c, e) <= 1e-10);
      if (e.point.chart == Chart::W && std::abs(e.point.coord) == 0.0) {
        finite = false;  // a root at infinity: Vieta in z does not apply
        continue;
      }
      std::complex<double> z = as_z(e);
      for (int q = 0; q < e.multiplicity; ++q) {
        sum += z;
        prod *= z;
      }
    }
    if (finite) {
      std::complex<double> vieta_sum = -c[19] / c[20];
      std::complex<double> vieta_prod = c[0] / c[20];  // (-1)^20 c0/c20
      CHECK(std::abs(sum - vieta_sum) <= 1e-9 * (1.0 + std::abs(vieta_sum)));
      CHECK(std::abs(prod - vieta_prod) <= 1e-8 * (1.0 + std::abs(vieta_prod)));
    }
  }

  // twisted space: degree p + m
  SectionSpace tw = build_space(12, -2, gauss_bump(2.0, 0.7), shared_grid());
  ZeroSet zt = zeros(sample_section(tw, 5, 0), tw);
  CHECK(zt.total_multiplicity() == 10);
}

TEST_CASE("zero sets are exactly invariant under power-of-two scalings") {
  SectionSpace s = build_space(15, 0, gauss_bump(2.0, 0.7), shared_grid());
  RandomSection r = sample_section(s, 13, 2);
  ZeroSet base = zeros(r, s);
  RandomSection scaled = r;
  scaled.a *= 0.0078125;  // 2^-7
  ZeroSet same = zeros(scaled, s);
  REQUIRE(same.entries.size() == base.entries.size());
  for (std::size_t i = 0; i < base.entries.size(); ++i) {
    CHECK(same.entries[i].point.chart == base.entries[i].point.chart);
    CHECK(same.entries[i].point.coord.real() == base.entries[i].point.coord.real());
    CHECK(same.entries[i].point.coord.imag() == base.entries[i].point.coord.imag());
    CHECK(same.entries[i].multiplicity == base.entries[i].multiplicity);
  }
  // arbitrary scalings move roots by at most ~1 ulp of coefficient noise
  RandomSection pi_scaled = r;
  pi_scaled.a *= 3.14159265358979323846;
  ZeroSet close = zeros(pi_scaled, s);
  REQUIRE(close.entries.size() == base.entries.size());
  for (std::size_t i = 0; i < base.entries.size(); ++i)
    CHECK(sphere_distance(close.entries[i].point, base.entries[i].point) <= 1e-10);
}

TEST_CASE("a clustered double root is recovered to square-root accuracy") {
  SectionSpace s = build_space(2, 0, constant_weight(0.0), shared_grid());
  // build a from target monomial coefficients via the diagonal map
  Eigen::VectorXcd d(3);
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(3);
    e[j] = 1.0;
    d[j] = monomial_coefficients(s, e)[j];
  }
  RandomSection r;
  r.p = 2;
  r.m = 0;
  r.a = Eigen::VectorXcd(3);
  // (z - 0.5)^2 = 0.25 - z + z^2
  r.a[0] = 0.25 / d[0];
  r.a[1] = -1.0 / d[1];
  r.a[2] = 1.0 / d[2];
  ZeroSet zs = zeros(r, s);
  CHECK(zs.total_multiplicity() == 2);
  for (const ZeroEntry& e : zs.entries)
    CHECK(std::abs(as_z(e) - 0.5) <= 1e-6);
}

TEST_CASE("empirical pairing averages test functions over the divisor") {
  ZeroSet zs;
  zs.p = 10;
  zs.m = 0;
  zs.entries.push_back({SpherePoint::from_chart(Chart::Z, {0.5, 0.0}), 3});
  zs.entries.push_back({SpherePoint::from_chart(Chart::Z, {0.0, -0.25}), 7});
  CHECK(mass(zs) == doctest::Approx(1.0).epsilon(1e-15));

  TestFunction u;
  u.label = "height";
  u.degree = 1;
  u.value = [](const SpherePoint& x) { return x.z; };
  u.s2_laplacian = [](const SpherePoint& x) { return -2.0 * x.z; };
  u.gradient = [](const SpherePoint&) { return std::array<double, 3>{0, 0, 0}; };
  double expect = (3.0 * zs.entries[0].point.z + 7.0 * zs.entries[1].point.z) / 10.0;
  CHECK(empirical_pairing(zs, u, 10) == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("mp_constant: exact k=1 row, closed forms, bounds") {
  for (long d : {1L, 2L, 10L, 1000L, 1000000L}) CHECK(mp_constant(d, 1) == 1.0);
  CHECK(mp_constant(1, 2) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(mp_constant(2, 3) == doctest::Approx(std::pow(90.0, -1.0 / 6.0)).epsilon(1e-14));
  for (long k = 2; k <= 8; ++k) {
    double prev = 1.0;
    for (long d = 1; d <= 30; ++d) {
      double c = mp_constant(d, k);
      CHECK(c > 1.0 / double(k));  // Stirling lower bound, k-dependent
      CHECK(c <= 1.0);
      CHECK(c <= prev + 1e-15);  // decreasing toward 1/k
      prev = c;
      CHECK(mp_constant(d, k) < mp_constant(d, k - 1) + 1e-15);
    }
  }
  CHECK_THROWS_AS(mp_constant(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(mp_constant(1, 0), std::invalid_argument);
}

TEST_CASE("zero rows serialize exactly") {
  ZeroSet zs;
  zs.p = 4;
  zs.m = 0;
  zs.entries.push_back({SpherePoint::from_chart(Chart::Z, {0.5, -0.25}), 2});
  zs.entries.push_back({SpherePoint::from_chart(Chart::W, {0.0, 0.0}), 2});
  std::ostringstream out;
  write_zero_rows(out, zs, 7);
  CHECK(out.str() == "7,z,0.5,-0.25,2\n7,w,0,0,2\n");
}

}  // TEST_SUITE
