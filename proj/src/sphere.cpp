#include "eqz/sphere.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace eqz {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t fnv1a_init() { return 0xcbf29ce484222325ull; }

void fnv1a_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
}

void fnv1a_double(std::uint64_t& h, double v) { fnv1a_bytes(h, &v, sizeof v); }

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int mid = (n + 1) / 2;
  for (int i = 0; i < mid; ++i) {
    double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * t * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (t * p0 - p1) / (t * t - 1.0);
      double dt = p0 / pp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[i] = -t;
    x[n - 1 - i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

}  // namespace

SpherePoint SpherePoint::from_unit(double X, double Y, double Z) {
  double n = std::sqrt(X * X + Y * Y + Z * Z);
  if (!(n > 0) || !std::isfinite(n)) throw std::invalid_argument("SpherePoint::from_unit: zero or non-finite vector");
  X /= n;
  Y /= n;
  Z /= n;
  SpherePoint p;
  p.x = X;
  p.y = Y;
  p.z = Z;
  if (Z <= 0.0) {
    p.chart = Chart::Z;
    p.coord = std::complex<double>(X, Y) / (1.0 - Z);
  } else {
    p.chart = Chart::W;
    p.coord = std::complex<double>(X, -Y) / (1.0 + Z);
  }
  return p;
}

SpherePoint SpherePoint::from_chart(Chart c, std::complex<double> v) {
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
    throw std::invalid_argument("SpherePoint::from_chart: non-finite coordinate");
  const double r2 = std::norm(v);
  SpherePoint p;
  // Unit vector from the z-chart form z = (X+iY)/(1-Z); the w-chart is the
  // conjugate map from the opposite pole.
  double denom = 1.0 + r2;
  double X = 2.0 * v.real() / denom;
  double Y = 2.0 * v.imag() / denom;
  double Z = (r2 - 1.0) / denom;
  if (c == Chart::Z) {
    p.x = X;
    p.y = Y;
    p.z = Z;
  } else {
    p.x = X;
    p.y = -Y;
    p.z = -Z;
  }
  if (r2 <= 1.0) {
    p.chart = c;
    p.coord = v;
  } else {
    p.chart = (c == Chart::Z) ? Chart::W : Chart::Z;
    p.coord = 1.0 / v;
  }
  return p;
}

std::complex<double> SpherePoint::in_chart(Chart c) const {
  if (c == chart) return coord;
  if (coord == std::complex<double>(0.0, 0.0)) {
    double inf = std::numeric_limits<double>::infinity();
    return {inf, inf};
  }
  return 1.0 / coord;
}

double SpherePoint::abs_z() const {
  double a = std::abs(coord);
  if (chart == Chart::Z) return a;
  if (a == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / a;
}

double SpherePoint::log_abs_z() const {
  double a = std::abs(coord);
  if (chart == Chart::Z) return std::log(a);  // -inf at the south pole
  return -std::log(a);                        // +inf at the north pole
}

double sphere_distance(const SpherePoint& a, const SpherePoint& b) {
  double dot = a.x * b.x + a.y * b.y + a.z * b.z;
  double cx = a.y * b.z - a.z * b.y;
  double cy = a.z * b.x - a.x * b.z;
  double cz = a.x * b.y - a.y * b.x;
  double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
  return std::atan2(cross, dot);
}

QuadratureGrid make_grid(int n_r, int n_theta) {
  if (n_r < 4 || n_theta < 4) throw std::invalid_argument("make_grid: need n_r >= 4 and n_theta >= 4");
  QuadratureGrid g;
  g.n_r = n_r;
  g.n_theta = n_theta;

  // Radial rule in s = r^2/(1+r^2): ds equals the FS radial mass element
  // 2r(1+r^2)^{-2} dr, so Gauss-Legendre weights on [0, 1/2] sum exactly to
  // the chart mass 1/2.
  std::vector<double> gx, gw;
  gauss_legendre(n_r, gx, gw);
  g.radii.resize(n_r);
  g.radial_weight.resize(n_r);
  for (int i = 0; i < n_r; ++i) {
    double s = 0.25 * (gx[i] + 1.0);  // map [-1,1] -> [0, 1/2]
    g.radial_weight[i] = 0.25 * gw[i];
    g.radii[i] = std::sqrt(s / (1.0 - s));
  }

  g.nodes.reserve(2 * static_cast<std::size_t>(n_r) * n_theta);
  for (Chart c : {Chart::Z, Chart::W}) {
    for (int i = 0; i < n_r; ++i) {
      double wt = g.radial_weight[i] / n_theta;
      for (int t = 0; t < n_theta; ++t) {
        double th = 2.0 * kPi * t / n_theta;
        std::complex<double> v = std::polar(g.radii[i], th);
        g.nodes.push_back({SpherePoint::from_chart(c, v), wt});
      }
    }
  }

  std::uint64_t h = fnv1a_init();
  fnv1a_bytes(h, &n_r, sizeof n_r);
  fnv1a_bytes(h, &n_theta, sizeof n_theta);
  for (const GridNode& nd : g.nodes) {
    unsigned char c = static_cast<unsigned char>(nd.point.chart);
    fnv1a_bytes(h, &c, 1);
    fnv1a_double(h, nd.point.coord.real());
    fnv1a_double(h, nd.point.coord.imag());
    fnv1a_double(h, nd.weight);
  }
  g.content_hash = h;
  return g;
}

std::string QuadratureGrid::descriptor_json() const {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"type\":\"two_chart_product\",\"n_r\":%d,\"n_theta\":%d,"
                "\"nodes\":%zu,\"radial_variable\":\"s=r^2/(1+r^2)\","
                "\"content_hash\":\"0x%016llx\"}",
                n_r, n_theta, nodes.size(),
                static_cast<unsigned long long>(content_hash));
  return buf;
}

double pairwise_sum(const std::vector<double>& v) {
  // Bottom-up fixed blocking, independent of callers' threading.
  std::vector<double> acc(v);
  std::size_t n = acc.size();
  while (n > 1) {
    std::size_t m = 0;
    for (std::size_t i = 0; i + 1 < n; i += 2) acc[m++] = acc[i] + acc[i + 1];
    if (n % 2) acc[m++] = acc[n - 1];
    n = m;
  }
  return n ? acc[0] : 0.0;
}

double integrate(const std::function<double(const SpherePoint&)>& f,
                 const QuadratureGrid& grid) {
  std::vector<double> terms(grid.nodes.size());
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const GridNode& nd = grid.nodes[i];
    double v = f(nd.point);
    if (!std::isfinite(v)) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "integrate: non-finite value at node %zu (chart %c, coord %.6g%+.6gi)",
                    i, nd.point.chart == Chart::Z ? 'z' : 'w',
                    nd.point.coord.real(), nd.point.coord.imag());
      throw std::runtime_error(buf);
    }
    terms[i] = v * nd.weight;
  }
  return pairwise_sum(terms);
}

double TestFunction::chart_laplacian(const SpherePoint& p) const {
  double r2 = std::norm(p.coord);
  double conf = 4.0 / ((1.0 + r2) * (1.0 + r2));
  return conf * s2_laplacian(p);
}

double TestFunction::ddc_density(const SpherePoint& p) const {
  return 2.0 * s2_laplacian(p);
}

}  // namespace eqz
