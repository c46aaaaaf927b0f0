#pragma once

// Geometry of the Riemann sphere with its two stereographic charts, the
// Fubini-Study quadrature grids every other module integrates against, and
// C^2-certified spherical-harmonic test functions.
//
// Conventions used throughout the library:
//   z = (X + iY)/(1 - Z), so z = 0 is the south pole (0,0,-1) and the north
//   pole is z = infinity; w = 1/z covers the north pole. The round metric of
//   the unit sphere pulls back to 4/(1+|c|^2)^2 |dc|^2 in either chart.
//   omega_FS is normalized to total mass 1, i.e. (1/pi)(1+|z|^2)^{-2} dx dy
//   per chart, equivalently (1/4pi) dA on the unit sphere.
//   With d^c = (1/2 pi i)(d' - d''), dd^c u has density 2*Lap_{S^2} u with
//   respect to omega_FS.

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace eqz {

enum class Chart : std::uint8_t { Z, W };

// A point of the sphere carrying its unit 3-vector together with the
// coordinate in its canonical chart (the chart where |coord| <= 1; points on
// the equator |z| = 1 canonicalize to the z-chart).
struct SpherePoint {
  double x{0}, y{0}, z{-1};
  Chart chart{Chart::Z};
  std::complex<double> coord{0, 0};

  static SpherePoint from_unit(double X, double Y, double Z);
  static SpherePoint from_chart(Chart c, std::complex<double> v);

  // Coordinate of the point in the requested chart; +/-inf components at the
  // opposite pole.
  std::complex<double> in_chart(Chart c) const;

  // |z| and log|z|; the north pole returns +inf (resp. +inf).
  double abs_z() const;
  double log_abs_z() const;
};

// Geodesic distance on the unit sphere, accurate near 0 and pi.
double sphere_distance(const SpherePoint& a, const SpherePoint& b);

struct GridNode {
  SpherePoint point;
  double weight;  // omega_FS mass carried by the node
};

// Product quadrature over the two closed chart disks: Gauss-Legendre in the
// radial mass coordinate s = r^2/(1+r^2) (so the per-chart weights sum to
// exactly 1/2) times a uniform angular rule. Nodes are listed z-chart block
// first, then w-chart block, both in (radius-major, angle-minor) order.
struct QuadratureGrid {
  int n_r{0};
  int n_theta{0};
  std::vector<GridNode> nodes;
  std::vector<double> radii;          // shared by both charts, increasing
  std::vector<double> radial_weight;  // per radius, sums to 1/2 per chart
  std::uint64_t content_hash{0};

  std::string descriptor_json() const;
};

// Requires n_r >= 4 and n_theta >= 4; throws std::invalid_argument otherwise.
QuadratureGrid make_grid(int n_r, int n_theta);

// Fixed-tree pairwise reduction; result is independent of how callers
// partition work across threads.
double pairwise_sum(const std::vector<double>& v);

// integral of f against omega_FS over the grid. Throws std::runtime_error
// naming the offending node if f evaluates non-finite.
double integrate(const std::function<double(const SpherePoint&)>& f,
                 const QuadratureGrid& grid);

// Test function with closed-form derivatives. `value`, `s2_laplacian` and
// `gradient` (a tangent 3-vector) are defined on the whole sphere;
// `c2_bound` is a certified upper bound for max(|u|, |grad u|, |Hess u|)
// of the function as returned (dictionary builders normalize it to <= 1).
struct TestFunction {
  std::string label;
  int degree{-1};
  double c2_bound{1.0};
  std::function<double(const SpherePoint&)> value;
  std::function<double(const SpherePoint&)> s2_laplacian;
  std::function<std::array<double, 3>(const SpherePoint&)> gradient;

  // Flat chart Laplacian at the point's canonical chart coordinate:
  // Lap_z u = 4/(1+|c|^2)^2 * Lap_{S^2} u.
  double chart_laplacian(const SpherePoint& p) const;

  // Density of dd^c u with respect to omega_FS, i.e. 2 * Lap_{S^2} u.
  double ddc_density(const SpherePoint& p) const;
};

// Real spherical harmonics up to degree L, (L+1)^2 functions, each divided by
// a C^2 bound certified on a dense latitude-longitude grid. Requires
// 0 <= L <= 32.
std::vector<TestFunction> harmonic_dictionary(int L);

std::string dictionary_id(int L);

}  // namespace eqz
