#include "eqz/sphere.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace eqz {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Associated Legendre Q_l^m(theta) := P_l^m(cos theta) without the
// Condon-Shortley phase, together with d/dtheta, both carried through the
// standard three-term recurrences (differentiated term by term, so no
// convention-sensitive ladder identities are needed).
void legendre_pair(int l, int m, double theta, double& q, double& dq) {
  double s = std::sin(theta), c = std::cos(theta);
  double pmm = 1.0, dpmm = 0.0;
  for (int k = 1; k <= m; ++k) {
    // multiply by (2k-1) * sin(theta)
    double np = (2.0 * k - 1.0) * (pmm * s);
    double ndp = (2.0 * k - 1.0) * (dpmm * s + pmm * c);
    pmm = np;
    dpmm = ndp;
  }
  if (l == m) {
    q = pmm;
    dq = dpmm;
    return;
  }
  double p1 = (2.0 * m + 1.0) * c * pmm;
  double dp1 = (2.0 * m + 1.0) * (-s * pmm + c * dpmm);
  if (l == m + 1) {
    q = p1;
    dq = dp1;
    return;
  }
  double p0 = pmm, dp0 = dpmm;
  for (int ll = m + 2; ll <= l; ++ll) {
    double a = 2.0 * ll - 1.0, b = ll - 1.0 + m, d = ll - m;
    double p2 = (a * c * p1 - b * p0) / d;
    double dp2 = (a * (-s * p1 + c * dp1) - b * dp0) / d;
    p0 = p1;
    dp0 = dp1;
    p1 = p2;
    dp1 = dp2;
  }
  q = p1;
  dq = dp1;
}

double norm_const(int l, int m) {
  double lg = 0.5 * (std::log(2.0 * l + 1.0) - std::log(4.0 * kPi) +
                     std::lgamma(l - m + 1.0) - std::lgamma(l + m + 1.0));
  double n = std::exp(lg);
  if (m > 0) n *= std::sqrt(2.0);
  return n;
}

struct ThetaPhi {
  double theta, phi, st, ct;
};

ThetaPhi angles_of(const SpherePoint& p) {
  ThetaPhi a;
  a.ct = p.z;
  a.theta = std::acos(std::min(1.0, std::max(-1.0, p.z)));
  a.st = std::sin(a.theta);
  a.phi = std::atan2(p.y, p.x);
  return a;
}

// Certified grid bound for max(|u|, |grad u|, |Hess u|) of the real harmonic
// of degree l, order m (either trig branch; the bound is branch-symmetric).
// Max over a 721 x 1440 latitude-longitude grid; the phi maximum of each
// A^2 cos^2 + B^2 sin^2 expression is taken exactly as max(A^2, B^2).
double c2_certify(int l, int m, double N) {
  const int rows = 721;
  double best = 0.0;
  if (m == 0) {
    double q0, dq0;
    legendre_pair(l, m, 0.0, q0, dq0);
    best = std::abs(N * q0);  // pole value; gradient and Hessian vanish there only for l=0
    legendre_pair(l, m, kPi, q0, dq0);
    best = std::max(best, std::abs(N * q0));
  }
  for (int i = 1; i + 1 < rows; ++i) {
    double theta = kPi * i / (rows - 1);
    double st = std::sin(theta), ct = std::cos(theta);
    double q, dq;
    legendre_pair(l, m, theta, q, dq);
    double R = N * q, dR = N * dq;
    // Q'' from the separated Laplace equation.
    double ddR = -ct / st * dR + (m * m / (st * st) - l * (l + 1.0)) * R;
    double gA = std::abs(dR);               // multiplies cos/sin
    double gB = std::abs(R / st * m);       // multiplies the other branch
    double grad = std::max(gA, gB);
    double f = ct / st * dR - m * m / (st * st) * R;  // H_phiphi / T
    double g = (dR - ct / st * R) / st * m;           // H_thetaphi / T'(scaled)
    double hess = std::sqrt(std::max(ddR * ddR + f * f, 2.0 * g * g));
    double v = std::max(std::abs(R), std::max(grad, hess));
    if (v > best) best = v;
  }
  return best;
}

TestFunction make_harmonic(int l, int m_signed) {
  const int m = std::abs(m_signed);
  const double N = norm_const(l, m);
  const double bound = c2_certify(l, m, N);
  const double inv = 1.0 / bound;
  const bool cos_branch = (m_signed >= 0);

  TestFunction u;
  char lbl[32];
  std::snprintf(lbl, sizeof lbl, "Y[%d,%d]", l, m_signed);
  u.label = lbl;
  u.degree = l;
  u.c2_bound = 1.0;

  auto radial = [l, m, N, inv](const SpherePoint& p, double& R, double& dR, ThetaPhi& a) {
    a = angles_of(p);
    double q, dq;
    legendre_pair(l, m, a.theta, q, dq);
    R = inv * N * q;
    dR = inv * N * dq;
  };

  u.value = [radial, m, cos_branch](const SpherePoint& p) {
    double R, dR;
    ThetaPhi a;
    radial(p, R, dR, a);
    double T = cos_branch ? std::cos(m * a.phi) : std::sin(m * a.phi);
    return R * T;
  };
  double ll1 = -static_cast<double>(l) * (l + 1.0);
  u.s2_laplacian = [val = u.value, ll1](const SpherePoint& p) { return ll1 * val(p); };
  u.gradient = [radial, m, cos_branch](const SpherePoint& p) -> std::array<double, 3> {
    double R, dR;
    ThetaPhi a;
    radial(p, R, dR, a);
    double T, dT;
    if (cos_branch) {
      T = std::cos(m * a.phi);
      dT = -m * std::sin(m * a.phi);
    } else {
      T = std::sin(m * a.phi);
      dT = m * std::cos(m * a.phi);
    }
    // R/sin(theta) -> R'(pole) as theta -> 0 or pi (both vanish for m >= 2).
    double ratio = (a.st > 1e-12) ? R / a.st : dR;
    double comp_th = dR * T;
    double comp_ph = (m == 0) ? 0.0 : ratio * dT;
    double cph = std::cos(a.phi), sph = std::sin(a.phi);
    std::array<double, 3> eth{a.ct * cph, a.ct * sph, -a.st};
    std::array<double, 3> eph{-sph, cph, 0.0};
    return {comp_th * eth[0] + comp_ph * eph[0],
            comp_th * eth[1] + comp_ph * eph[1],
            comp_th * eth[2] + comp_ph * eph[2]};
  };
  return u;
}

}  // namespace

std::vector<TestFunction> harmonic_dictionary(int L) {
  if (L < 0 || L > 32) throw std::invalid_argument("harmonic_dictionary: need 0 <= L <= 32");
  std::vector<TestFunction> dict;
  dict.reserve(static_cast<std::size_t>(L + 1) * (L + 1));
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m) dict.push_back(make_harmonic(l, m));
  return dict;
}

std::string dictionary_id(int L) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "sh:L=%d", L);
  return buf;
}

}  // namespace eqz
