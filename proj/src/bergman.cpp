#include "eqz/bergman.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>

#include "eqz/parallel.hpp"
#include "eqz/rng.hpp"

namespace eqz {

namespace {

// log of |z|^{2j} (1+|z|^2)^{-deg} at t = log|z|, stable for t = +-inf.
double log_monomial_h(double t, int j, int deg) {
  if (t >= 0) {
    double lead = (deg == j) ? 0.0 : -2.0 * (deg - j) * t;
    return lead - deg * std::log1p(std::exp(-2.0 * t));
  }
  double lead = (j == 0) ? 0.0 : 2.0 * j * t;
  return lead - deg * std::log1p(std::exp(2.0 * t));
}

double logsumexp(const std::vector<double>& v) {
  double mx = -1e300;
  for (double x : v) mx = std::max(mx, x);
  if (mx <= -1e300) return -1e300;
  long double acc = 0;
  for (double x : v) acc += std::exp(static_cast<long double>(x - mx));
  return mx + static_cast<double>(std::log(acc));
}

double gauged_radial_phi(const SectionSpace& s, double t) {
  return (*s.weight.profile)(t)-s.gauge;
}

struct CacheHeader {
  char magic[8];
  std::uint32_t version;
  std::int32_t p, m;
  std::uint64_t grid_hash, weight_hash;
  std::uint32_t flags, dim, jitter;
  double gauge;
};

std::string cache_path(const std::string& dir, int p, int m,
                       std::uint64_t ghash, std::uint64_t whash) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "gram_p%d_m%d_g%016llx_w%016llx.bin", p, m,
                static_cast<unsigned long long>(ghash),
                static_cast<unsigned long long>(whash));
  return dir + "/" + buf;
}

bool read_exact(std::FILE* f, void* dst, size_t n) {
  return std::fread(dst, 1, n, f) == n;
}

bool load_cached(const std::string& path, int p, int m, std::uint64_t ghash,
                 std::uint64_t whash, bool radial, SectionSpace* out) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) return false;
  CacheHeader h{};
  bool ok = read_exact(f, h.magic, 8) && read_exact(f, &h.version, 4) &&
            read_exact(f, &h.p, 4) && read_exact(f, &h.m, 4) &&
            read_exact(f, &h.grid_hash, 8) && read_exact(f, &h.weight_hash, 8) &&
            read_exact(f, &h.flags, 4) && read_exact(f, &h.dim, 4) &&
            read_exact(f, &h.jitter, 4) && read_exact(f, &h.gauge, 8);
  ok = ok && std::string(h.magic, 8) == "EQZGRAM1" && h.version == 1 &&
       h.p == p && h.m == m && h.grid_hash == ghash && h.weight_hash == whash &&
       ((h.flags & 1u) != 0) == radial && h.dim == static_cast<std::uint32_t>(p + m + 1);
  if (ok) {
    int dim = static_cast<int>(h.dim);
    out->gauge = h.gauge;
    out->jitter_steps = static_cast<int>(h.jitter);
    if (radial) {
      out->log_diag.resize(dim);
      ok = read_exact(f, out->log_diag.data(), sizeof(double) * dim);
    } else {
      out->gram.resize(dim, dim);
      out->ortho.resize(dim, dim);
      std::vector<double> plane(static_cast<size_t>(dim) * dim);
      auto read_plane = [&](Eigen::MatrixXcd& M, bool imag_part) {
        if (!read_exact(f, plane.data(), sizeof(double) * plane.size()))
          return false;
        for (int r = 0; r < dim; ++r)
          for (int c = 0; c < dim; ++c) {
            double v = plane[static_cast<size_t>(r) * dim + c];
            if (imag_part)
              M(r, c) = {M(r, c).real(), v};
            else
              M(r, c) = {v, 0.0};
          }
        return true;
      };
      ok = read_plane(out->gram, false) && read_plane(out->gram, true) &&
           read_plane(out->ortho, false) && read_plane(out->ortho, true);
    }
  }
  std::fclose(f);
  return ok;
}

void save_cached(const std::string& path, const SectionSpace& s) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) return;
  CacheHeader h{};
  std::memcpy(h.magic, "EQZGRAM1", 8);
  h.version = 1;
  h.p = s.p;
  h.m = s.m;
  h.grid_hash = s.grid_hash;
  h.weight_hash = s.weight_hash;
  h.flags = s.radial ? 1u : 0u;
  h.dim = static_cast<std::uint32_t>(s.dim);
  h.jitter = static_cast<std::uint32_t>(s.jitter_steps);
  h.gauge = s.gauge;
  std::fwrite(h.magic, 1, 8, f);
  std::fwrite(&h.version, 4, 1, f);
  std::fwrite(&h.p, 4, 1, f);
  std::fwrite(&h.m, 4, 1, f);
  std::fwrite(&h.grid_hash, 8, 1, f);
  std::fwrite(&h.weight_hash, 8, 1, f);
  std::fwrite(&h.flags, 4, 1, f);
  std::fwrite(&h.dim, 4, 1, f);
  std::fwrite(&h.jitter, 4, 1, f);
  std::fwrite(&h.gauge, 8, 1, f);
  if (s.radial) {
    std::fwrite(s.log_diag.data(), sizeof(double), s.log_diag.size(), f);
  } else {
    int dim = s.dim;
    std::vector<double> plane(static_cast<size_t>(dim) * dim);
    auto write_plane = [&](const Eigen::MatrixXcd& M, bool imag_part) {
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c)
          plane[static_cast<size_t>(r) * dim + c] =
              imag_part ? M(r, c).imag() : M(r, c).real();
      std::fwrite(plane.data(), sizeof(double), plane.size(), f);
    };
    write_plane(s.gram, false);
    write_plane(s.gram, true);
    write_plane(s.ortho, false);
    write_plane(s.ortho, true);
  }
  std::fclose(f);
}

void build_radial(SectionSpace& s) {
  const QuadratureGrid& g = *s.grid;
  int deg = s.p + s.m;
  s.log_diag.assign(s.dim, 0.0);
  int n_r = g.n_r;
  std::vector<double> t(2 * n_r), logw(2 * n_r);
  for (int k = 0; k < n_r; ++k) {
    t[k] = std::log(g.radii[k]);
    t[n_r + k] = -t[k];
    logw[k] = logw[n_r + k] = std::log(g.radial_weight[k]);
  }
  std::vector<double> terms(2 * n_r);
  for (int j = 0; j < s.dim; ++j) {
    for (int k = 0; k < 2 * n_r; ++k)
      terms[k] = logw[k] + log_monomial_h(t[k], j, deg) -
                 2.0 * s.p * gauged_radial_phi(s, t[k]);
    s.log_diag[j] = logsumexp(terms);
  }
}

void build_dense(SectionSpace& s) {
  const QuadratureGrid& g = *s.grid;
  int deg = s.p + s.m, dim = s.dim;
  Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(dim, dim);
  const long n_nodes = static_cast<long>(g.nodes.size());
  const long block = 2048;
  Eigen::MatrixXcd V(dim, block);
  for (long b = 0; b < n_nodes; b += block) {
    long e = std::min(n_nodes, b + block);
    V.setZero(dim, e - b);
    for (long n = b; n < e; ++n) {
      const GridNode& node = g.nodes[n];
      std::complex<double> c = node.point.coord;
      double phit = s.weight(node.point) - s.gauge;
      double logf = 0.5 * std::log(node.weight) -
                    0.5 * deg * std::log1p(std::norm(c)) - s.p * phit;
      double f = std::exp(logf);
      std::complex<double> pw(f, 0.0);
      if (node.point.chart == Chart::Z) {
        for (int i = 0; i < dim; ++i) {
          V(i, n - b) = pw;
          pw *= c;
        }
      } else {
        for (int i = dim - 1; i >= 0; --i) {  // power deg - i runs upward
          V(i, n - b) = pw;
          pw *= c;
        }
      }
    }
    G.selfadjointView<Eigen::Lower>().rankUpdate(V.leftCols(e - b), 1.0);
  }
  G = G.selfadjointView<Eigen::Lower>();

  Eigen::VectorXd dsc = G.diagonal().real().cwiseSqrt();
  for (int i = 0; i < dim; ++i)
    if (!(dsc[i] > 0))
      throw std::runtime_error("bergman: Gram diagonal vanished at degree " +
                               std::to_string(i));
  Eigen::MatrixXcd Ghat =
      dsc.cwiseInverse().asDiagonal() * G * dsc.cwiseInverse().asDiagonal();
  Eigen::LLT<Eigen::MatrixXcd> llt(Ghat);
  int steps = 0;
  while (llt.info() != Eigen::Success && steps < 3) {
    Ghat += 1e-12 * Eigen::MatrixXcd::Identity(dim, dim);
    ++steps;
    llt.compute(Ghat);
  }
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(
        "bergman: Cholesky failed after jitter; quadrature under-resolved");
  s.jitter_steps = steps;
  Eigen::MatrixXcd inv_upper =
      llt.matrixU().solve(Eigen::MatrixXcd::Identity(dim, dim));
  s.ortho = dsc.cwiseInverse().asDiagonal() * inv_upper;
  s.gram = std::move(G);
}

// log|s(x)|^2_{h_p} pieces shared by the dense evaluators: the bounded
// monomial frame in the canonical chart plus the common log factor.
struct DenseFrame {
  Eigen::VectorXcd mu;
  double log_factor;
};

DenseFrame dense_frame(const SectionSpace& s, const SpherePoint& x) {
  int deg = s.p + s.m, dim = s.dim;
  DenseFrame fr;
  fr.mu.resize(dim);
  std::complex<double> c = x.coord;
  std::complex<double> pw(1.0, 0.0);
  if (x.chart == Chart::Z) {
    for (int i = 0; i < dim; ++i) {
      fr.mu[i] = pw;
      pw *= c;
    }
  } else {
    for (int i = dim - 1; i >= 0; --i) {
      fr.mu[i] = pw;
      pw *= c;
    }
  }
  fr.log_factor =
      -deg * std::log1p(std::norm(c)) - 2.0 * s.p * (s.weight(x) - s.gauge);
  return fr;
}

double radial_log_bergman_at_t(const SectionSpace& s, double t) {
  int deg = s.p + s.m;
  double phit = 2.0 * s.p * gauged_radial_phi(s, t);
  double mx = -1e300;
  for (int j = 0; j < s.dim; ++j)
    mx = std::max(mx, log_monomial_h(t, j, deg) - s.log_diag[j]);
  long double acc = 0;
  for (int j = 0; j < s.dim; ++j)
    acc += std::exp(static_cast<long double>(log_monomial_h(t, j, deg) -
                                             s.log_diag[j] - mx));
  return mx + static_cast<double>(std::log(acc)) - phit;
}

}  // namespace

double PointNorm::value() const { return std::exp(log_value); }

SectionSpace build_space(int p, int m, const Weight& w,
                         std::shared_ptr<const QuadratureGrid> grid,
                         const std::string& cache_dir, int threads) {
  (void)threads;
  if (p < 1) throw std::invalid_argument("build_space: p must be >= 1");
  if (p + m < 0)
    throw std::invalid_argument("build_space: empty section space (p + m < 0)");
  if (!grid || grid->nodes.empty())
    throw std::invalid_argument("build_space: missing grid");

  SectionSpace s;
  s.p = p;
  s.m = m;
  s.dim = p + m + 1;
  s.radial = w.radial && w.profile.has_value();
  s.weight = w;
  s.grid = grid;
  s.grid_hash = grid->content_hash;
  s.weight_hash = w.hash();

  double mn = 1e300;
  for (const GridNode& n : grid->nodes) mn = std::min(mn, w(n.point));
  if (!std::isfinite(mn))
    throw std::invalid_argument("build_space: weight not finite on the grid");
  s.gauge = mn;

  std::string path;
  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    path = cache_path(cache_dir, p, m, s.grid_hash, s.weight_hash);
    SectionSpace cached = s;
    if (load_cached(path, p, m, s.grid_hash, s.weight_hash, s.radial, &cached))
      return cached;
  }

  if (s.radial)
    build_radial(s);
  else
    build_dense(s);
  if (!path.empty()) save_cached(path, s);
  return s;
}

double log_bergman(const SectionSpace& s, const SpherePoint& x) {
  if (s.radial) return radial_log_bergman_at_t(s, x.log_abs_z());
  DenseFrame fr = dense_frame(s, x);
  long double acc = 0;
  for (int j = 0; j < s.dim; ++j) {
    std::complex<long double> v = 0;
    for (int i = 0; i <= j; ++i)  // ortho is upper triangular
      v += std::complex<long double>(s.ortho(i, j)) *
           std::complex<long double>(fr.mu[i]);
    acc += v.real() * v.real() + v.imag() * v.imag();
  }
  return static_cast<double>(std::log(acc)) + fr.log_factor;
}

double bergman_function(const SectionSpace& s, const SpherePoint& x) {
  return std::exp(log_bergman(s, x));
}

double fs_weight(const SectionSpace& s, const SpherePoint& x) {
  return s.weight(x) + log_bergman(s, x) / (2.0 * s.p);
}

double fs_current_pairing(const SectionSpace& s, const TestFunction& u,
                          const QuadratureGrid& grid) {
  double mass = integrate(u.value, grid) * (s.p + s.m) / s.p;
  if (s.radial &&
      grid.nodes.size() == static_cast<size_t>(2) * grid.n_r * grid.n_theta) {
    // phi_p is radial: evaluate once per quadrature ring
    int n_r = grid.n_r;
    std::vector<double> ring(2 * n_r);
    for (int k = 0; k < n_r; ++k) {
      double t = std::log(grid.radii[k]);
      ring[k] = (*s.weight.profile)(t) +
                radial_log_bergman_at_t(s, t) / (2.0 * s.p);
      ring[n_r + k] = (*s.weight.profile)(-t) +
                      radial_log_bergman_at_t(s, -t) / (2.0 * s.p);
    }
    long zb = static_cast<long>(n_r) * grid.n_theta;
    long idx = 0;
    double ddc = integrate(
        [&](const SpherePoint& pnt) {
          long i = idx++;
          long k = i < zb ? i / grid.n_theta : n_r + (i - zb) / grid.n_theta;
          return ring[k] * u.ddc_density(pnt);
        },
        grid);
    return mass + ddc;
  }
  double ddc = integrate(
      [&](const SpherePoint& pnt) {
        return fs_weight(s, pnt) * u.ddc_density(pnt);
      },
      grid);
  return mass + ddc;
}

double bergman_trace(const SectionSpace& s, const QuadratureGrid& grid) {
  if (s.radial &&
      grid.nodes.size() == static_cast<size_t>(2) * grid.n_r * grid.n_theta) {
    int n_r = grid.n_r;
    std::vector<double> ring(2 * n_r);
    for (int k = 0; k < n_r; ++k) {
      double t = std::log(grid.radii[k]);
      ring[k] = std::exp(radial_log_bergman_at_t(s, t));
      ring[n_r + k] = std::exp(radial_log_bergman_at_t(s, -t));
    }
    long zb = static_cast<long>(n_r) * grid.n_theta;
    long idx = 0;
    return integrate(
        [&](const SpherePoint&) {
          long i = idx++;
          return ring[i < zb ? i / grid.n_theta
                             : n_r + (i - zb) / grid.n_theta];
        },
        grid);
  }
  return integrate(
      [&](const SpherePoint& pnt) { return bergman_function(s, pnt); }, grid);
}

PointNorm section_point_norm(const SectionSpace& s, const Eigen::VectorXcd& a,
                             const SpherePoint& x) {
  if (a.size() != s.dim)
    throw std::invalid_argument("section_point_norm: coefficient size");
  PointNorm pn;
  if (s.radial) {
    double t = x.log_abs_z();
    int deg = s.p + s.m;
    double theta = std::arg(x.coord);
    double sign = x.chart == Chart::Z ? 1.0 : -1.0;
    double mx = -1e300;
    std::vector<double> half(s.dim);
    for (int j = 0; j < s.dim; ++j) {
      half[j] = 0.5 * (log_monomial_h(t, j, deg) - s.log_diag[j]);
      mx = std::max(mx, half[j]);
    }
    if (mx <= -1e300) return pn;
    std::complex<long double> acc = 0;
    for (int j = 0; j < s.dim; ++j) {
      long double amp = std::exp(static_cast<long double>(half[j] - mx));
      long double ph = sign * j * theta;
      acc += std::complex<long double>(a[j]) *
             std::polar<long double>(amp, ph);
    }
    double n2 = static_cast<double>(std::log(acc.real() * acc.real() +
                                             acc.imag() * acc.imag()));
    pn.log_value = 2.0 * mx + n2 - 2.0 * s.p * gauged_radial_phi(s, t);
    return pn;
  }
  DenseFrame fr = dense_frame(s, x);
  std::complex<long double> val = 0;
  for (int j = 0; j < s.dim; ++j) {
    std::complex<long double> v = 0;
    for (int i = 0; i <= j; ++i)
      v += std::complex<long double>(s.ortho(i, j)) *
           std::complex<long double>(fr.mu[i]);
    val += std::complex<long double>(a[j]) * v;
  }
  pn.log_value =
      static_cast<double>(std::log(val.real() * val.real() +
                                   val.imag() * val.imag())) +
      fr.log_factor;
  return pn;
}

Eigen::VectorXcd monomial_coefficients(const SectionSpace& s,
                                       const Eigen::VectorXcd& a) {
  if (a.size() != s.dim)
    throw std::invalid_argument("monomial_coefficients: coefficient size");
  if (!s.radial) return s.ortho * a;
  double s0 = -1e300;
  for (int j = 0; j < s.dim; ++j) s0 = std::max(s0, -0.5 * s.log_diag[j]);
  Eigen::VectorXcd c(s.dim);
  for (int j = 0; j < s.dim; ++j)
    c[j] = a[j] * std::exp(-0.5 * s.log_diag[j] - s0);
  return c;
}

double extremal_value(const SectionSpace& s, const SpherePoint& x,
                      long n_samples, std::uint64_t seed) {
  if (n_samples < 1)
    throw std::invalid_argument("extremal_value: n_samples must be >= 1");
  constexpr std::uint32_t kPurpose = 0x45585431u;  // distinct sample stream
  double best = -1e300;
  Eigen::VectorXcd a(s.dim);
  for (long n = 0; n < n_samples; ++n) {
    long double norm2 = 0;
    for (int j = 0; j < s.dim; ++j) {
      a[j] = gaussian_c(seed, static_cast<std::uint32_t>(s.p),
                        static_cast<std::uint32_t>(n), kPurpose,
                        static_cast<std::uint32_t>(j));
      norm2 += std::norm(std::complex<long double>(a[j]));
    }
    double lv = section_point_norm(s, a, x).log_value -
                static_cast<double>(std::log(norm2));
    best = std::max(best, lv);
  }
  return std::exp(best);
}

}  // namespace eqz
