#include "eqz/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace eqz {

namespace {

TestFunction constant_one() {
  TestFunction u;
  u.label = "one";
  u.degree = 0;
  u.c2_bound = 1.0;
  u.value = [](const SpherePoint&) { return 1.0; };
  u.s2_laplacian = [](const SpherePoint&) { return 0.0; };
  u.gradient = [](const SpherePoint&) { return std::array<double, 3>{0, 0, 0}; };
  return u;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double dict_seminorm(const PairingVector& a, const PairingVector& b) {
  if (a.dictionary_id != b.dictionary_id)
    throw std::invalid_argument("dict_seminorm: dictionary mismatch (" +
                                a.dictionary_id + " vs " + b.dictionary_id + ")");
  if (a.region != b.region)
    throw std::invalid_argument("dict_seminorm: region mismatch (" + a.region +
                                " vs " + b.region + ")");
  if (a.values.size() != b.values.size())
    throw std::invalid_argument("dict_seminorm: length mismatch");
  double mx = 0;
  for (size_t i = 0; i < a.values.size(); ++i)
    mx = std::max(mx, std::abs(a.values[i] - b.values[i]));
  return mx;
}

PairingVector pair_empirical(const ZeroSet& zs,
                             const std::vector<TestFunction>& dict,
                             const std::string& dict_id,
                             const std::string& region, int p) {
  PairingVector v;
  v.tag = CurrentTag::empirical;
  v.dictionary_id = dict_id;
  v.region = region;
  v.values.reserve(dict.size());
  for (const TestFunction& u : dict) v.values.push_back(empirical_pairing(zs, u, p));
  return v;
}

PairingVector pair_fs_current(const SectionSpace& s,
                              const std::vector<TestFunction>& dict,
                              const std::string& dict_id,
                              const std::string& region,
                              const QuadratureGrid& grid) {
  PairingVector v;
  v.tag = CurrentTag::fs_current;
  v.dictionary_id = dict_id;
  v.region = region;
  v.values.reserve(dict.size());
  for (const TestFunction& u : dict)
    v.values.push_back(fs_current_pairing(s, u, grid));
  return v;
}

PairingVector pair_equilibrium(const EnvelopeResult& env,
                               const std::vector<TestFunction>& dict,
                               const std::string& dict_id,
                               const std::string& region,
                               const QuadratureGrid& grid) {
  PairingVector v;
  v.tag = CurrentTag::equilibrium;
  v.dictionary_id = dict_id;
  v.region = region;
  v.values.reserve(dict.size());
  for (const TestFunction& u : dict)
    v.values.push_back(equilibrium_pairing(env, u, grid));
  return v;
}

PairingVector pair_fubini_study(const std::vector<TestFunction>& dict,
                                const std::string& dict_id,
                                const std::string& region,
                                const QuadratureGrid& grid) {
  PairingVector v;
  v.tag = CurrentTag::fubini_study;
  v.dictionary_id = dict_id;
  v.region = region;
  v.values.reserve(dict.size());
  for (const TestFunction& u : dict)
    v.values.push_back(integrate(u.value, grid));
  return v;
}

double mass(const ZeroSet& zs) {
  return static_cast<double>(zs.total_multiplicity()) / zs.p;
}

double mass(const EnvelopeResult& env, const QuadratureGrid& g) {
  return equilibrium_pairing(env, constant_one(), g);
}

double mass(const SectionSpace& s, const QuadratureGrid& g) {
  return fs_current_pairing(s, constant_one(), g);
}

RateFit rate_fit(const std::vector<std::pair<double, double>>& seq) {
  if (seq.size() < 5)
    throw std::invalid_argument("rate_fit: need at least 5 points");
  RateFit f;
  for (const auto& [p, e] : seq) {
    if (p < 5) throw std::invalid_argument("rate_fit: requires p >= 5");
    f.p.push_back(p);
    f.error.push_back(e);
    f.ratio.push_back(e * p / std::log(p));
  }
  f.c_max = *std::max_element(f.ratio.begin(), f.ratio.end());
  f.c_median = median_of(f.ratio);
  // Diagnostic log-log slope over strictly positive errors.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long n = 0;
  for (size_t i = 0; i < f.p.size(); ++i) {
    if (!(f.error[i] > 0)) continue;
    double x = std::log(f.p[i]), y = std::log(f.error[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  double den = n * sxx - sx * sx;
  f.loglog_slope = (n >= 2 && den > 0) ? (n * sxy - sx * sy) / den : 0.0;
  return f;
}

bool CapRegion::contains(const SpherePoint& x) const {
  return sphere_distance(x, center) < radius;
}

std::string CapRegion::id() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "cap(%.9g,%.9g,%.9g;r=%.9g)", center.x,
                center.y, center.z, radius);
  return buf;
}

std::vector<TestFunction> localized_dictionary(
    const std::vector<TestFunction>& dict, const CapRegion& cap) {
  if (!(cap.radius > 0) || !(cap.radius < 3.14159265358979323846))
    throw std::invalid_argument("localized_dictionary: radius in (0, pi)");
  const double rho = cap.radius;
  const SpherePoint c = cap.center;
  // Product-rule C2 bound with the analytic cutoff extrema:
  //   sup|g| = 1, sup|g'| = 8/(3 sqrt(3) rho), sup|g''|, sup|cot(d) g'| <= 8/rho^2,
  // applied to elements already normalized to C2 <= 1.
  const double sup_gp = 8.0 / (3.0 * std::sqrt(3.0) * rho);
  const double sup_hess_chi = 8.0 / (rho * rho);
  const double bound = 1.0 + 2.0 * sup_gp + sup_hess_chi;
  const double inv = 1.0 / bound;

  std::vector<TestFunction> out;
  out.reserve(dict.size());
  for (const TestFunction& u : dict) {
    TestFunction v;
    v.label = u.label + "*" + cap.id();
    v.degree = u.degree;
    v.c2_bound = 1.0;

    // Geodesic distance d, cutoff g(d) = (1 - (d/rho)^2)^2, and the stable
    // combinations g'(d)/d = -4(1-s^2)/rho^2 and d cot d used below.
    auto cut = [rho, c](const SpherePoint& x, double& d, double& g,
                        double& gp_over_d) {
      d = sphere_distance(x, c);
      if (d >= rho) {
        g = 0;
        gp_over_d = 0;
        return false;
      }
      double s2 = (d / rho) * (d / rho);
      double om = 1.0 - s2;
      g = om * om;
      gp_over_d = -4.0 * om / (rho * rho);
      return true;
    };

    v.value = [cut, uval = u.value, inv](const SpherePoint& x) {
      double d, g, gpd;
      if (!cut(x, d, g, gpd)) return 0.0;
      return inv * g * uval(x);
    };

    // grad d = (cos(d) x - c) / sin(d); paired with g'(d) this stays bounded
    // through d = 0 as (g'(d)/d) * (d/sin d) * (cos(d) x - c).
    auto grad_scale = [](double d) {
      return d > 1e-8 ? d / std::sin(d) : 1.0;
    };

    v.s2_laplacian = [cut, grad_scale, uval = u.value, ulap = u.s2_laplacian,
                      ugrad = u.gradient, c, rho,
                      inv](const SpherePoint& x) {
      double d, g, gpd;
      if (!cut(x, d, g, gpd)) return 0.0;
      double cosd = std::cos(d);
      std::array<double, 3> dd{cosd * x.x - c.x, cosd * x.y - c.y,
                               cosd * x.z - c.z};
      std::array<double, 3> gu = ugrad(x);
      double cross = gpd * grad_scale(d) *
                     (dd[0] * gu[0] + dd[1] * gu[1] + dd[2] * gu[2]);
      double s2 = (d / rho) * (d / rho);
      double gpp = -4.0 * (1.0 - 3.0 * s2) / (rho * rho);
      double dcotd = d > 1e-8 ? d * cosd / std::sin(d) : 1.0;
      double lap_chi = gpp + dcotd * gpd;
      return inv * (g * ulap(x) + 2.0 * cross + uval(x) * lap_chi);
    };

    v.gradient = [cut, grad_scale, uval = u.value, ugrad = u.gradient, c,
                  inv](const SpherePoint& x) -> std::array<double, 3> {
      double d, g, gpd;
      if (!cut(x, d, g, gpd)) return {0, 0, 0};
      double cosd = std::cos(d);
      std::array<double, 3> dd{cosd * x.x - c.x, cosd * x.y - c.y,
                               cosd * x.z - c.z};
      std::array<double, 3> gu = ugrad(x);
      double f = gpd * grad_scale(d) * uval(x);
      return {inv * (g * gu[0] + f * dd[0]), inv * (g * gu[1] + f * dd[1]),
              inv * (g * gu[2] + f * dd[2])};
    };
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace eqz
