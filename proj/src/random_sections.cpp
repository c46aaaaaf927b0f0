#include "eqz/random_sections.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "eqz/rng.hpp"
#include "eqz/textio.hpp"

namespace eqz {

namespace {

// Parlett-Reinsch balancing with radix-2 scale factors: a diagonal similarity
// that leaves eigenvalues untouched and, being power-of-two, is exact.
void balance(Eigen::MatrixXcd& A) {
  const double radix = 2.0, sqrdx = radix * radix;
  const int n = static_cast<int>(A.rows());
  bool done = false;
  while (!done) {
    done = true;
    for (int i = 0; i < n; ++i) {
      double r = 0, c = 0;
      for (int j = 0; j < n; ++j)
        if (j != i) {
          c += std::abs(A(j, i));
          r += std::abs(A(i, j));
        }
      if (c > 0 && r > 0) {
        double g = r / radix, f = 1, sum = c + r;
        while (c < g) {
          f *= radix;
          c *= sqrdx;
        }
        g = r * radix;
        while (c > g) {
          f /= radix;
          c /= sqrdx;
        }
        if ((c + r) / f < 0.95 * sum) {
          done = false;
          A.row(i) /= f;
          A.col(i) *= f;
        }
      }
    }
  }
}

// One Newton step in the w-chart: R(w) = sum_i t[n-i] w^i is the reversal of
// the trimmed polynomial t, and w = 1/z is a root of R.
std::complex<double> polish_reversed(const std::vector<std::complex<double>>& t,
                                     std::complex<double> w) {
  const int n = static_cast<int>(t.size()) - 1;
  std::complex<double> v = t[0], d = 0.0;
  for (int i = n - 1; i >= 0; --i) {
    d = d * w + v;
    v = v * w + t[static_cast<size_t>(n - i)];
  }
  if (d == std::complex<double>(0.0)) return w;
  std::complex<double> w1 = w - v / d;
  if (!std::isfinite(w1.real()) || !std::isfinite(w1.imag())) return w;
  return w1;
}

std::vector<std::complex<double>> companion_roots(
    const std::vector<std::complex<double>>& t) {
  const int n = static_cast<int>(t.size()) - 1;
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) A(i + 1, i) = 1.0;
  for (int i = 0; i < n; ++i) A(i, n - 1) = -t[i] / t[n];
  balance(A);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, false);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("zeros: companion eigensolve did not converge");
  std::vector<std::complex<double>> roots(n);
  for (int i = 0; i < n; ++i) roots[i] = es.eigenvalues()[i];
  return roots;
}

}  // namespace

RandomSection sample_section(const SectionSpace& space, std::uint64_t seed,
                             std::uint32_t index) {
  RandomSection s;
  s.p = space.p;
  s.m = space.m;
  s.seed = seed;
  s.index = index;
  s.factor = 0;
  s.a.resize(space.dim);
  for (int j = 0; j < space.dim; ++j)
    s.a[j] = gaussian_c(seed, static_cast<std::uint32_t>(space.p), index, 0u,
                        static_cast<std::uint32_t>(j));
  return s;
}

std::vector<RandomSection> sample_tuple(const SectionSpace& space, int k,
                                        std::uint64_t seed,
                                        std::uint32_t index) {
  if (k < 1) throw std::invalid_argument("sample_tuple: k must be >= 1");
  std::vector<RandomSection> out(k);
  for (int f = 0; f < k; ++f) {
    RandomSection& s = out[f];
    s.p = space.p;
    s.m = space.m;
    s.seed = seed;
    s.index = index;
    s.factor = static_cast<std::uint32_t>(f);
    s.a.resize(space.dim);
    for (int j = 0; j < space.dim; ++j)
      s.a[j] = gaussian_c(seed, static_cast<std::uint32_t>(space.p), index,
                          s.factor, static_cast<std::uint32_t>(j));
  }
  return out;
}

long ZeroSet::total_multiplicity() const {
  long total = 0;
  for (const ZeroEntry& e : entries) total += e.multiplicity;
  return total;
}

ZeroSet zeros(const RandomSection& s, const SectionSpace& space) {
  if (s.p != space.p || s.m != space.m)
    throw std::invalid_argument("zeros: section and space disagree on (p, m)");
  Eigen::VectorXcd c = monomial_coefficients(space, s.a);
  const int deg = space.dim - 1;
  double mx = 0;
  for (int i = 0; i <= deg; ++i) mx = std::max(mx, std::abs(c[i]));
  if (!(mx > 0) || !std::isfinite(mx))
    throw std::invalid_argument("zeros: zero or non-finite section");
  // Power-of-two projective normalization: exact, so any power-of-two scaling
  // of a yields the bitwise-identical coefficient vector here.
  const double scale = std::exp2(static_cast<double>(-std::ilogb(mx)));
  c *= scale;
  mx *= scale;
  // The cut decides which tail roots are folded into the poles, so it must
  // sit far below anything that can hold displaced mass: by Newton-polygon
  // convexity a run 280 decades under the peak has every root within
  // 10^(-280/deg) of the chart origin it is assigned to.  A shallow cut
  // (1e-13, say) moves genuine near-equator roots onto the poles for steep
  // weights once p ~ 100.  The floor also keeps the companion entries
  // |c_i/c_n| <= 2e280 finite; the balancing above absorbs the range.
  const double tau = 1e-280 * mx;

  int lo = 0;
  while (lo <= deg && std::abs(c[lo]) <= tau) ++lo;
  int hi = deg;
  while (hi > lo && std::abs(c[hi]) <= tau) --hi;

  ZeroSet zs;
  zs.p = s.p;
  zs.m = s.m;
  if (lo > 0)
    zs.entries.push_back({SpherePoint::from_chart(Chart::Z, 0.0), lo});
  if (hi < deg)
    zs.entries.push_back({SpherePoint::from_chart(Chart::W, 0.0), deg - hi});
  const int n = hi - lo;
  if (n >= 1) {
    std::vector<std::complex<double>> t(c.data() + lo, c.data() + hi + 1);
    for (std::complex<double> root : companion_roots(t)) {
      if (std::norm(root) <= 1.0) {
        zs.entries.push_back({SpherePoint::from_chart(Chart::Z, root), 1});
      } else {
        std::complex<double> w = polish_reversed(t, 1.0 / root);
        zs.entries.push_back({SpherePoint::from_chart(Chart::W, w), 1});
      }
    }
  }
  return zs;
}

double empirical_pairing(const ZeroSet& zs, const TestFunction& u, int p) {
  if (p < 1) throw std::invalid_argument("empirical_pairing: p must be >= 1");
  long double acc = 0;
  for (const ZeroEntry& e : zs.entries)
    acc += static_cast<long double>(e.multiplicity) * u.value(e.point);
  return static_cast<double>(acc) / p;
}

double mp_constant(long d, long k) {
  if (d < 1 || k < 1)
    throw std::invalid_argument("mp_constant: d and k must be >= 1");
  const double dk = static_cast<double>(d) * static_cast<double>(k);
  const double logc =
      -(std::lgamma(dk + 1.0) - k * std::lgamma(static_cast<double>(d) + 1.0)) /
      dk;
  return std::exp(logc);
}

void write_zero_rows(std::ostream& out, const ZeroSet& zs, long sample_id) {
  for (const ZeroEntry& e : zs.entries) {
    out << sample_id << ',' << (e.point.chart == Chart::Z ? 'z' : 'w') << ','
        << g17(e.point.coord.real()) << ',' << g17(e.point.coord.imag()) << ','
        << e.multiplicity << '\n';
  }
}

}  // namespace eqz
