#pragma once

// Global continuous weights phi on the sphere (metric factors e^{-2 p phi})
// with the metadata downstream solvers key on: radial profiles in t = log|z|,
// Hoelder tags, and canonical serializations for hashing and caching.

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "eqz/sphere.hpp"

namespace eqz {

// Radial weights are evaluated through a profile g(t), t = log|z| clamped to
// [-window, window]; all built-ins are constant to machine precision beyond
// the window except scaled_fs, which is effectively truncated there (the
// default quadrature grids never sample beyond |t| ~ 7, so numerics are
// unaffected; only the value at the poles is).
struct RadialProfile {
  double window{14.0};
  std::function<double(double)> value;  // already clamped to the window

  double operator()(double t) const;
};

struct HolderTag {
  double exponent{1.0};
  double constant{0.0};
};

struct Weight {
  std::string name;                // canonical form, e.g. "gauss_bump(2,0.7)"
  std::function<double(const SpherePoint&)> eval;
  bool radial{false};
  bool smooth{false};
  std::optional<HolderTag> holder;
  std::optional<RadialProfile> profile;

  double operator()(const SpherePoint& p) const { return eval(p); }
  std::uint64_t hash() const;  // FNV-1a over `name`
};

// phi_FS along the radial coordinate: (1/2) log(1 + e^{2t}), evaluated in a
// form that is stable for large |t|.
double fs_radial_potential(double t);

Weight constant_weight(double c);

// phi = (beta/2) log(1+|z|^2) - (beta/2) log 2 on the z-chart (window-clamped
// in t); dd^c phi = beta * omega_FS away from the pole at infinity.
Weight scaled_fs(double beta);

// phi = a exp(-|z|^2 / s^2), radial and smooth.
Weight gauss_bump(double a, double s);

// phi = a max(0, 1 - 2 d(x, center)/pi)^alpha, Hoelder of exponent alpha with
// constant a (2/pi)^alpha; radial iff center is a pole.
Weight holder_bump(double a, double alpha, const SpherePoint& center);

// Weight from a z-chart logarithmic-class potential: phi(z) = psi(z) -
// (1/2)log(1+|z|^2); w-chart points evaluate the same formula at z = 1/w with
// |w| floored at 1e-8. Rejects psi whose growth exceeds log|z| + constant
// (checked on sample rings) with std::invalid_argument.
Weight from_lelong(const std::function<double(std::complex<double>)>& psi,
                   double growth_constant, const std::string& label = "lelong");

// Pointwise sup of w over chart balls of radius rho^4 around the canonical
// chart coordinate, discretized as the max over the center plus 4 concentric
// rings of 32 angles. Requires rho in (0, 0.5).
Weight ball_sup(const Weight& w, double rho);

// Structured polar samples "chart,re,im,value" per row (header line optional);
// rows must form a full (radius x angle) product grid per chart. Evaluation is
// bilinear in (r, theta) within each chart.
Weight weight_from_csv(const std::string& path);

}  // namespace eqz
