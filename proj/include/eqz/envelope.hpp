#pragma once

// Equilibrium weights phi_eq: the largest omega_FS-psh function below the
// obstacle phi. Two independent solvers:
//
//   radial_envelope  reduces a radial obstacle to a one-dimensional convex
//                    hull: psi is omega_FS-psh and radial iff
//                    f(t) = psi(e^t) + (1/2)log(1+e^{2t}) is convex with
//                    slopes in [0,1]. The envelope is the lower convex hull
//                    of the sampled f with its slopes clamped to [0,1]
//                    exactly (constant continuation left of the argmin
//                    vertex, slope-1 ray right of the last vertex reached by
//                    edges of slope <= 1).
//
//   lcp_envelope     discretizes max{psi <= phi, Lap_{S^2} psi >= -1/2} on a
//                    latitude-longitude grid as a linear complementarity
//                    problem and solves it by projected red-black SOR.

#include <iosfwd>
#include <string>
#include <vector>

#include "eqz/sphere.hpp"
#include "eqz/weights.hpp"

namespace eqz {

struct EnvelopeResult {
  std::string method;  // "radial_hull" or "lcp"
  std::string weight_name;
  std::uint64_t weight_hash{0};
  bool converged{true};
  long iterations{0};

  // Worst violations over grid nodes of, in order: psi <= phi, the discrete
  // psh constraint, and complementarity min(phi - psi, excess curvature) = 0.
  // radial_hull reports the slope/convexity defect of the hull as its
  // feasibility residual; lcp reports Lap_h psi + 1/2 in native units.
  double obstacle_residual{0};
  double feasibility_residual{0};
  double complementarity_residual{0};

  // radial_hull data on the uniform t-grid t_i = t_min + i*h: the envelope
  // phi_eq(e^{t_i}), the obstacle phi(e^{t_i}), and the hull values
  // E = phi_eq + phi_FS themselves (piecewise linear in t).
  double t_min{0}, t_max{0};
  std::vector<double> phi_eq_t;
  std::vector<double> obstacle_t;
  std::vector<double> hull_values;

  // lcp data: row-major values, theta_i = i*pi/(n_lat-1) from the north pole
  // (z = infinity), angle_j = 2*pi*j/n_lon; rows 0 and n_lat-1 carry the pole
  // value in every column.
  int n_lat{0}, n_lon{0};
  std::vector<double> ll_values;
  std::vector<double> ll_obstacle;

  // phi_eq at an arbitrary point: exact piecewise-linear interpolation of the
  // hull (radial), bilinear interpolation (lcp). Beyond the radial window the
  // hull continues with its clamped asymptotic slopes 0 and 1.
  double operator()(const SpherePoint& p) const;
  double value_at_t(double t) const;  // radial results only
};

// Requires w.radial; n_t >= 16 grid points on [-T, T].
EnvelopeResult radial_envelope(const Weight& w, int n_t = 4001, double T = 14.0);

// Projected SOR on an n_lat x n_lon grid. relaxation <= 0 picks
// 2/(1 + sin(pi/(n_lat-1))); sweeps stop once the sup-change per sweep is
// <= tol and the native residuals are <= residual_target (checked
// periodically), or at max_iter with converged = false. The 1-degree default
// grid is the finest at which the pointwise sweeps reach 1e-6 residuals well
// inside max_iter; finer grids converge too slowly near the poles.
EnvelopeResult lcp_envelope(const Weight& w, int n_lat = 181, int n_lon = 360,
                            double tol = 1e-8, long max_iter = 200000,
                            double relaxation = 0.0,
                            double residual_target = 8e-7, int threads = 1);

// <omega_eq, u> = int u omega_FS + int phi_eq dd^c u, the dd^c moved onto the
// smooth test function. Requires env.converged.
double equilibrium_pairing(const EnvelopeResult& env, const TestFunction& u,
                           const QuadratureGrid& grid);

// Rows: "t,r,phi,phi_eq" (radial) or "theta,angle,phi,phi_eq" (lcp), after a
// "# key = value" provenance block.
void write_envelope_csv(const EnvelopeResult& env, std::ostream& out);

}  // namespace eqz
