#pragma once

// Weighted section spaces H^0_(2)(P^1, O(p) x O(m)), their Bergman kernel
// function B_p and the global Fubini-Study weight phi_p = phi + log(B_p)/2p.
//
// The Gram matrix is assembled in the gauge phi~ = phi - min(phi), which
// leaves B_p invariant and keeps every integrand <= 1 in magnitude. Radial
// weights take a diagonal fast path whose Gram diagonal is stored in the log
// domain; everything downstream of a radial space is evaluated through
// log-sum-exp, so p up to several hundred is safe from overflow.

#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eqz/sphere.hpp"
#include "eqz/weights.hpp"

namespace eqz {

struct SectionSpace {
  int p{0};
  int m{0};
  int dim{0};  // p + m + 1
  bool radial{false};
  double gauge{0};  // min of phi over the grid nodes
  std::uint64_t grid_hash{0};
  std::uint64_t weight_hash{0};
  int jitter_steps{0};
  Weight weight;
  std::shared_ptr<const QuadratureGrid> grid;

  // radial path: log of the gauged Gram diagonal, index = monomial degree
  std::vector<double> log_diag;
  // dense path: gauged Gram and the orthonormal-basis coefficients in the
  // monomial basis 1, z, ..., z^{p+m} (column j = section s_j)
  Eigen::MatrixXcd gram;
  Eigen::MatrixXcd ortho;
};

// Pointwise h_p-norm |s(x)|^2_{h_p}, carried in the log domain.
struct PointNorm {
  double log_value{-1e300};
  double value() const;
};

// Requires p >= 1 and p + m >= 0 (throws std::invalid_argument). Cholesky
// failure after the allowed jitter throws std::runtime_error (the quadrature
// is under-resolved for this p). A nonempty cache_dir memoizes the build,
// keyed by (p, m, grid hash, weight hash).
SectionSpace build_space(int p, int m, const Weight& w,
                         std::shared_ptr<const QuadratureGrid> grid,
                         const std::string& cache_dir = "", int threads = 1);

double log_bergman(const SectionSpace& s, const SpherePoint& x);
double bergman_function(const SectionSpace& s, const SpherePoint& x);

// phi_p(x) = phi(x) + log(B_p(x)) / (2p)
double fs_weight(const SectionSpace& s, const SpherePoint& x);

// <(1/p) omega_p, u> = ((p+m)/p) int u omega_FS + int phi_p dd^c u.
// The pairing grid may differ from the build grid.
double fs_current_pairing(const SectionSpace& s, const TestFunction& u,
                          const QuadratureGrid& grid);

// |s(x)|^2_{h_p} for the section with orthonormal-basis coefficients a.
PointNorm section_point_norm(const SectionSpace& s, const Eigen::VectorXcd& a,
                             const SpherePoint& x);

// Monomial coefficients (degree 0..p+m) of the section with orthonormal-basis
// coefficients a, up to one a-independent positive scale per space. The map
// is a fixed matrix-vector product, so scaling a by a power of two scales the
// result exactly; root finding downstream is unaffected by the overall scale.
Eigen::VectorXcd monomial_coefficients(const SectionSpace& s,
                                       const Eigen::VectorXcd& a);

// Max of |s(x)|^2_{h_p} over n_samples random unit-norm sections; always
// <= bergman_function(s, x).
double extremal_value(const SectionSpace& s, const SpherePoint& x,
                      long n_samples, std::uint64_t seed);

// integral of B_p over the grid; equals dim(H^0) up to quadrature error.
double bergman_trace(const SectionSpace& s, const QuadratureGrid& grid);

}  // namespace eqz
