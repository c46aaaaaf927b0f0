#include "eqz/weights.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace eqz {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Shortest decimal that round-trips to the exact double: names are hash
// inputs (cache identity), so they must distinguish distinct parameters.
std::string fmt_double(double v) {
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt_params(const std::vector<double>& ps) {
  std::string out;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i) out += ',';
    out += fmt_double(ps[i]);
  }
  return out;
}

// softplus in the FS sense: (1/2) log(1 + e^{2t}), stable for large |t|.
double half_log1p_e2t(double t) {
  if (t > 0) return t + 0.5 * std::log1p(std::exp(-2.0 * t));
  return 0.5 * std::log1p(std::exp(2.0 * t));
}

double clamp_t(double t, double window) {
  if (std::isnan(t)) throw std::invalid_argument("weight profile: NaN argument");
  return std::min(window, std::max(-window, t));
}

Weight radial_weight(std::string name, std::function<double(double)> g, bool smooth,
                     std::optional<HolderTag> holder, double window = 14.0) {
  Weight w;
  w.name = std::move(name);
  w.radial = true;
  w.smooth = smooth;
  w.holder = holder;
  RadialProfile prof;
  prof.window = window;
  prof.value = [g, window](double t) { return g(clamp_t(t, window)); };
  w.profile = prof;
  w.eval = [prof](const SpherePoint& p) { return prof(p.log_abs_z()); };
  return w;
}

}  // namespace

double fs_radial_potential(double t) { return half_log1p_e2t(t); }

double RadialProfile::operator()(double t) const { return value(clamp_t(t, window)); }

std::uint64_t Weight::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

Weight constant_weight(double c) {
  return radial_weight("constant(" + fmt_params({c}) + ")", [c](double) { return c; },
                       /*smooth=*/true, HolderTag{1.0, 0.0});
}

Weight scaled_fs(double beta) {
  if (beta < -1.0) throw std::invalid_argument("scaled_fs: beta must be >= -1");
  const double off = 0.5 * beta * std::log(2.0);
  auto g = [beta, off](double t) { return beta * half_log1p_e2t(t) - off; };
  // Lipschitz on the sphere only through the window clamp; the constant is the
  // gradient at the window edge, |beta| e^T / 2.
  HolderTag tag{1.0, std::abs(beta) * std::exp(14.0) / 2.0};
  return radial_weight("scaled_fs(" + fmt_params({beta}) + ")", g, /*smooth=*/true, tag);
}

Weight gauss_bump(double a, double s) {
  if (!(s > 0)) throw std::invalid_argument("gauss_bump: scale must be positive");
  auto g = [a, s](double t) {
    double r2 = std::exp(2.0 * t);
    return a * std::exp(-r2 / (s * s));
  };
  // max over t of |d phi / d(arclength)| = a r (1+r^2) e^{-r^2/s^2} / s^2.
  double lip = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    double r = 10.0 * i / 4000.0;
    double v = std::abs(a) * r * (1.0 + r * r) * std::exp(-r * r / (s * s)) / (s * s);
    lip = std::max(lip, v);
  }
  return radial_weight("gauss_bump(" + fmt_params({a, s}) + ")", g, /*smooth=*/true,
                       HolderTag{1.0, lip * 1.0000001});
}

Weight holder_bump(double a, double alpha, const SpherePoint& center) {
  if (!(alpha > 0) || alpha > 1) throw std::invalid_argument("holder_bump: alpha in (0,1]");
  HolderTag tag{alpha, std::abs(a) * std::pow(2.0 / kPi, alpha)};
  auto bump = [a, alpha](double dist) {
    double u = 1.0 - 2.0 * dist / kPi;
    return (u > 0) ? a * std::pow(u, alpha) : 0.0;
  };
  const bool at_pole = std::abs(center.x) < 1e-14 && std::abs(center.y) < 1e-14;
  std::string nb = "holder_bump(" + fmt_params({a, alpha}) + ",[" +
                   fmt_params({center.x, center.y, center.z}) + "])";
  if (at_pole) {
    const double sign = center.z > 0 ? 1.0 : -1.0;
    auto g = [bump, sign](double t) {
      // distance to the pole: arccos(+-tanh t)
      double d = std::acos(std::min(1.0, std::max(-1.0, sign * std::tanh(t))));
      return bump(d);
    };
    return radial_weight(nb, g, /*smooth=*/false, tag);
  }
  Weight w;
  w.name = nb;
  w.radial = false;
  w.smooth = false;
  w.holder = tag;
  w.eval = [bump, center](const SpherePoint& p) { return bump(sphere_distance(p, center)); };
  return w;
}

Weight from_lelong(const std::function<double(std::complex<double>)>& psi,
                   double growth_constant, const std::string& label) {
  // Growth precondition psi(z) <= log|z| + C on sample rings; the half-log
  // factor below then keeps phi bounded above near infinity.
  for (double r : {10.0, 100.0, 1000.0, 100000.0}) {
    for (int k = 0; k < 64; ++k) {
      std::complex<double> z = std::polar(r, 2.0 * kPi * k / 64);
      double v = psi(z);
      if (!std::isfinite(v) || v > std::log(r) + growth_constant + 1e-9)
        throw std::invalid_argument("from_lelong: psi violates log growth on |z|=" +
                                    std::to_string(r));
    }
  }
  Weight w;
  w.name = "from_lelong(" + label + "," + fmt_params({growth_constant}) + ")";
  w.radial = false;
  w.smooth = false;
  w.eval = [psi](const SpherePoint& p) {
    std::complex<double> z;
    if (p.chart == Chart::Z) {
      z = p.coord;
    } else {
      std::complex<double> wv = p.coord;
      double a = std::abs(wv);
      if (a < 1e-8) wv = (a == 0.0) ? std::complex<double>(1e-8, 0.0) : wv * (1e-8 / a);
      z = 1.0 / wv;
    }
    return psi(z) - half_log1p_e2t(std::log(std::abs(z)));
  };
  return w;
}

Weight ball_sup(const Weight& w, double rho) {
  if (!(rho > 0.0) || !(rho < 0.5)) throw std::invalid_argument("ball_sup: rho in (0, 0.5)");
  double rad = rho * rho * rho * rho;
  Weight out;
  out.name = "ball_sup(" + w.name + "," + fmt_params({rho}) + ")";
  out.radial = false;  // the ring discretization is not exactly rotation invariant
  out.smooth = false;
  out.eval = [inner = w.eval, rad](const SpherePoint& p) {
    double best = inner(p);
    for (int ring = 1; ring <= 4; ++ring) {
      double rr = rad * ring / 4.0;
      for (int k = 0; k < 32; ++k) {
        std::complex<double> c = p.coord + std::polar(rr, 2.0 * kPi * k / 32);
        best = std::max(best, inner(SpherePoint::from_chart(p.chart, c)));
      }
    }
    return best;
  };
  return out;
}

Weight weight_from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("weight_from_csv: cannot open " + path);
  struct Samples {
    std::map<double, std::map<double, double>> by_r;  // r -> theta -> value
  };
  Samples chart[2];
  std::string line;
  std::uint64_t h = 0xcbf29ce484222325ull;
  while (std::getline(in, line)) {
    for (unsigned char c : line) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    if (tok == "chart") continue;  // header row
    int ci = (tok == "z" || tok == "Z") ? 0 : (tok == "w" || tok == "W") ? 1 : -1;
    if (ci < 0) throw std::invalid_argument("weight_from_csv: bad chart tag '" + tok + "'");
    double re, im, val;
    char comma;
    ss >> re >> comma >> im >> comma >> val;
    if (!ss) throw std::invalid_argument("weight_from_csv: malformed row '" + line + "'");
    std::complex<double> c{re, im};
    double r = std::abs(c), th = std::atan2(im, re);
    if (th < 0) th += 2.0 * kPi;
    chart[ci].by_r[r][th] = val;
  }

  // Validate the product structure and flatten to plain arrays.
  struct Table {
    std::vector<double> radii, angles;
    std::vector<double> vals;  // radius-major
  };
  auto flatten = [](const Samples& s, const char* tag) {
    Table t;
    if (s.by_r.empty()) throw std::invalid_argument(std::string("weight_from_csv: no rows for chart ") + tag);
    // |re + i im| wobbles by an ulp around each nominal ring radius, so
    // buckets within 1e-9 relative are the same ring
    std::vector<std::pair<double, std::map<double, double>>> rings;
    for (const auto& [r, row] : s.by_r) {
      if (!rings.empty() && r - rings.back().first <= 1e-9 * (1.0 + r))
        rings.back().second.insert(row.begin(), row.end());
      else
        rings.emplace_back(r, row);
    }
    const auto& first = rings.front().second;
    for (const auto& [th, v] : first) {
      (void)v;
      t.angles.push_back(th);
    }
    for (const auto& [r, row] : rings) {
      t.radii.push_back(r);
      if (row.size() != t.angles.size())
        throw std::invalid_argument("weight_from_csv: ragged angle set (not a product grid)");
      std::size_t k = 0;
      for (const auto& [th, v] : row) {
        if (std::abs(th - t.angles[k]) > 1e-12)
          throw std::invalid_argument("weight_from_csv: angle sets differ between radii");
        t.vals.push_back(v);
        ++k;
      }
    }
    if (t.radii.size() < 2 || t.angles.size() < 2)
      throw std::invalid_argument("weight_from_csv: need at least a 2x2 grid per chart");
    return t;
  };
  auto tz = flatten(chart[0], "z"), tw = flatten(chart[1], "w");

  auto interp = [](const Table& t, double r, double th) {
    const double twopi = 2.0 * kPi;
    th = std::fmod(th, twopi);
    if (th < 0) th += twopi;
    auto hi = std::upper_bound(t.radii.begin(), t.radii.end(), r);
    std::size_t i1 = std::min<std::size_t>(t.radii.size() - 1,
                                           std::max<std::ptrdiff_t>(1, hi - t.radii.begin()));
    std::size_t i0 = i1 - 1;
    double fr = (r - t.radii[i0]) / (t.radii[i1] - t.radii[i0]);
    fr = std::min(1.0, std::max(0.0, fr));
    // angular interval, wrapping past the last sample
    std::size_t na = t.angles.size();
    auto ahi = std::upper_bound(t.angles.begin(), t.angles.end(), th);
    std::size_t j1 = ahi - t.angles.begin();
    std::size_t j0 = (j1 == 0) ? na - 1 : j1 - 1;
    double a0 = t.angles[j0];
    double span, off;
    if (j1 == na || j1 == 0) {  // wrap interval
      j1 = (j1 == na) ? 0 : j1;
      span = twopi - t.angles.back() + t.angles.front();
      off = th - a0;
      if (off < 0) off += twopi;
    } else {
      span = t.angles[j1] - a0;
      off = th - a0;
    }
    double fa = span > 0 ? off / span : 0.0;
    auto at = [&](std::size_t i, std::size_t j) { return t.vals[i * na + j]; };
    double v0 = at(i0, j0) * (1 - fa) + at(i0, j1) * fa;
    double v1 = at(i1, j0) * (1 - fa) + at(i1, j1) * fa;
    return v0 * (1 - fr) + v1 * fr;
  };

  Weight w;
  char nb[64];
  std::snprintf(nb, sizeof nb, "csv(0x%016llx)", static_cast<unsigned long long>(h));
  w.name = nb;
  w.radial = false;
  w.smooth = false;
  w.eval = [tz, tw, interp](const SpherePoint& p) {
    const Table& t = (p.chart == Chart::Z) ? tz : tw;
    double th = std::atan2(p.coord.imag(), p.coord.real());
    return interp(t, std::abs(p.coord), th);
  };
  return w;
}

}  // namespace eqz
