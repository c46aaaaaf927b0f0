#include "eqz/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>
#include <stdexcept>

#include "eqz/parallel.hpp"
#include "eqz/textio.hpp"

namespace eqz {

namespace {

constexpr double kPi = 3.14159265358979323846;

double radial_obstacle(const Weight& w, double t) {
  if (w.profile) return (*w.profile)(t);
  std::complex<double> c(t <= 0 ? std::exp(t) : std::exp(-t), 0.0);
  return w(SpherePoint::from_chart(t <= 0 ? Chart::Z : Chart::W, c));
}

// Andrew monotone chain, lower hull only; t strictly increasing. Collinear
// middle points are dropped, so consecutive edge slopes strictly increase.
std::vector<int> lower_hull(const std::vector<double>& t,
                            const std::vector<double>& f) {
  std::vector<int> h;
  h.reserve(64);
  for (int i = 0; i < static_cast<int>(t.size()); ++i) {
    while (h.size() >= 2) {
      int a = h[h.size() - 2], b = h.back();
      double cross =
          (t[b] - t[a]) * (f[i] - f[a]) - (f[b] - f[a]) * (t[i] - t[a]);
      if (cross <= 0)
        h.pop_back();
      else
        break;
    }
    h.push_back(i);
  }
  return h;
}

}  // namespace

double EnvelopeResult::value_at_t(double t) const {
  if (phi_eq_t.empty())
    throw std::logic_error("value_at_t: not a radial envelope result");
  int n = static_cast<int>(phi_eq_t.size());
  if (t <= t_min) return hull_values.front() - fs_radial_potential(t);
  if (t >= t_max) {
    // slope-1 ray; written so t = +inf gives the finite pole limit
    return hull_values.back() - t_max - 0.5 * std::log1p(std::exp(-2.0 * t));
  }
  double h = (t_max - t_min) / (n - 1);
  double u = (t - t_min) / h;
  int i = std::min(n - 2, static_cast<int>(u));
  double frac = u - i;
  double e = hull_values[i] + frac * (hull_values[i + 1] - hull_values[i]);
  return e - fs_radial_potential(t);
}

double EnvelopeResult::operator()(const SpherePoint& p) const {
  if (n_lat == 0) return value_at_t(p.log_abs_z());
  double h = kPi / (n_lat - 1);
  double hphi = 2.0 * kPi / n_lon;
  double theta = std::acos(std::clamp(p.z, -1.0, 1.0));
  double u = theta / h;
  int i0 = std::min(n_lat - 2, static_cast<int>(u));
  double fu = u - i0;
  double ang = std::atan2(p.y, p.x);
  if (ang < 0) ang += 2.0 * kPi;
  double v = ang / hphi;
  int j0 = std::min(n_lon - 1, static_cast<int>(v));
  double fv = v - j0;
  int j1 = (j0 + 1) % n_lon;
  const double* row0 = ll_values.data() + static_cast<size_t>(i0) * n_lon;
  const double* row1 = row0 + n_lon;
  return (1 - fu) * ((1 - fv) * row0[j0] + fv * row0[j1]) +
         fu * ((1 - fv) * row1[j0] + fv * row1[j1]);
}

EnvelopeResult radial_envelope(const Weight& w, int n_t, double T) {
  if (!w.radial)
    throw std::invalid_argument("radial_envelope: weight is not radial");
  if (n_t < 16 || T <= 0)
    throw std::invalid_argument("radial_envelope: need n_t >= 16, T > 0");

  EnvelopeResult env;
  env.method = "radial_hull";
  env.weight_name = w.name;
  env.weight_hash = w.hash();
  env.converged = true;
  env.iterations = 0;

  int n = n_t;
  double h = 2.0 * T / (n - 1);
  std::vector<double> t(n), f(n);
  for (int i = 0; i < n; ++i) {
    t[i] = -T + i * h;
    f[i] = radial_obstacle(w, t[i]) + fs_radial_potential(t[i]);
  }

  std::vector<int> v = lower_hull(t, f);
  auto slope = [&](int a, int b) { return (f[b] - f[a]) / (t[b] - t[a]); };
  int K = static_cast<int>(v.size()) - 1;
  int a = 0;
  while (a + 1 <= K && slope(v[a], v[a + 1]) <= 0) ++a;
  int b = a;
  while (b + 1 <= K && slope(v[b], v[b + 1]) <= 1) ++b;

  // E: constant left of v[a], the hull between v[a] and v[b], slope 1 after.
  std::vector<double> E(n);
  for (int i = 0; i <= v[a]; ++i) E[i] = f[v[a]];
  for (int j = a; j < b; ++j) {
    int i0 = v[j], i1 = v[j + 1];
    double s = slope(i0, i1);
    for (int i = i0 + 1; i <= i1; ++i) E[i] = f[i0] + s * (t[i] - t[i0]);
  }
  for (int i = v[b] + 1; i < n; ++i) E[i] = f[v[b]] + (t[i] - t[v[b]]);

  env.t_min = -T;
  env.t_max = T;
  env.hull_values = E;
  env.obstacle_t.resize(n);
  env.phi_eq_t.resize(n);
  for (int i = 0; i < n; ++i) {
    double fs = fs_radial_potential(t[i]);
    env.obstacle_t[i] = f[i] - fs;
    env.phi_eq_t[i] = E[i] - fs;
  }

  double obstacle = -1e300, feas = 0, compl_res = 0;
  double prev_g = 0;
  for (int i = 0; i < n; ++i) obstacle = std::max(obstacle, E[i] - f[i]);
  for (int i = 0; i + 1 < n; ++i) {
    double g = (E[i + 1] - E[i]) / h;
    feas = std::max(feas, std::max(-g, g - 1.0));
    if (i > 0) feas = std::max(feas, prev_g - g);
    prev_g = g;
  }
  for (int i = 1; i + 1 < n; ++i) {
    double d2 = (E[i - 1] - 2.0 * E[i] + E[i + 1]) / (h * h);
    compl_res = std::max(compl_res, std::min(f[i] - E[i], d2));
  }
  env.obstacle_residual = std::max(0.0, obstacle);
  env.feasibility_residual = std::max(0.0, feas);
  env.complementarity_residual = std::max(0.0, compl_res);
  return env;
}

EnvelopeResult lcp_envelope(const Weight& w, int n_lat, int n_lon, double tol,
                            long max_iter, double relaxation,
                            double residual_target, int threads) {
  if (n_lat < 9 || n_lon < 8)
    throw std::invalid_argument("lcp_envelope: grid too small");
  if (tol <= 0) throw std::invalid_argument("lcp_envelope: tol must be > 0");
  double omega =
      relaxation > 0 ? relaxation : 2.0 / (1.0 + std::sin(kPi / (n_lat - 1)));
  if (omega >= 2.0) omega = 1.99;
  threads = resolve_threads(threads);

  const double h = kPi / (n_lat - 1);
  const double hphi = 2.0 * kPi / n_lon;
  const long cells = static_cast<long>(n_lat) * n_lon;

  std::vector<double> phi(cells), psi(cells);
  std::vector<double> A_up(n_lat), A_dn(n_lat), C(n_lat), diag(n_lat);
  for (int i = 1; i + 1 < n_lat; ++i) {
    double theta = i * h;
    double s = std::sin(theta);
    double A = 1.0 / (h * h);
    double B = std::cos(theta) / s / (2.0 * h);
    A_up[i] = A + B;  // coefficient of psi(i+1, j), larger theta
    A_dn[i] = A - B;
    C[i] = 1.0 / (hphi * hphi * s * s);
    diag[i] = 2.0 * A + 2.0 * C[i];
  }
  for (int i = 0; i < n_lat; ++i) {
    double theta = i * h;
    double st = std::sin(theta), ct = std::cos(theta);
    for (int j = 0; j < n_lon; ++j) {
      double ang = j * hphi;
      SpherePoint p =
          SpherePoint::from_unit(st * std::cos(ang), st * std::sin(ang), ct);
      phi[static_cast<size_t>(i) * n_lon + j] = w(p);
    }
  }
  // poles: replicate a single obstacle value across the row
  for (int j = 1; j < n_lon; ++j) {
    phi[j] = phi[0];
    phi[static_cast<size_t>(n_lat - 1) * n_lon + j] =
        phi[static_cast<size_t>(n_lat - 1) * n_lon];
  }
  psi = phi;

  std::vector<double> row_change(n_lat, 0.0);
  auto sweep_color = [&](int color) {
    parallel_for(n_lat - 2, threads, [&](long rb, long re) {
      for (long r = rb; r < re; ++r) {
        int i = static_cast<int>(r) + 1;
        double* cur = psi.data() + static_cast<size_t>(i) * n_lon;
        const double* up = cur + n_lon;
        const double* dn = cur - n_lon;
        const double* obs = phi.data() + static_cast<size_t>(i) * n_lon;
        double au = A_up[i], ad = A_dn[i], c = C[i], d = diag[i];
        double local = row_change[i];
        for (int j = (i + color) & 1; j < n_lon; j += 2) {
          int jl = j == 0 ? n_lon - 1 : j - 1;
          int jr = j + 1 == n_lon ? 0 : j + 1;
          double gs = (au * up[j] + ad * dn[j] + c * (cur[jl] + cur[jr]) + 0.5) / d;
          double val = cur[j] + omega * (gs - cur[j]);
          if (val > obs[j]) val = obs[j];
          double ch = std::fabs(val - cur[j]);
          if (ch > local) local = ch;
          cur[j] = val;
        }
        row_change[i] = local;
      }
    });
  };
  auto update_pole = [&](int row, int ring) -> double {
    const double* rg = psi.data() + static_cast<size_t>(ring) * n_lon;
    long double mean = 0;
    for (int j = 0; j < n_lon; ++j) mean += rg[j];
    double gs = static_cast<double>(mean / n_lon) + h * h / 8.0;
    size_t base = static_cast<size_t>(row) * n_lon;
    double val = psi[base] + omega * (gs - psi[base]);
    if (val > phi[base]) val = phi[base];
    double ch = std::fabs(val - psi[base]);
    for (int j = 0; j < n_lon; ++j) psi[base + j] = val;
    return ch;
  };

  // Native residuals of the current iterate: r = Lap_h psi + 1/2 per node.
  // Feasibility wants r >= 0 everywhere, complementarity wants
  // min(phi - psi, r) <= 0; psi <= phi holds by construction of the updates.
  std::vector<double> row_feas(n_lat, 0.0), row_comp(n_lat, 0.0);
  auto residuals = [&](double* feas_out, double* comp_out) {
    parallel_for(n_lat - 2, threads, [&](long rb, long re) {
      for (long r = rb; r < re; ++r) {
        int i = static_cast<int>(r) + 1;
        const double* cur = psi.data() + static_cast<size_t>(i) * n_lon;
        const double* up = cur + n_lon;
        const double* dn = cur - n_lon;
        const double* obs = phi.data() + static_cast<size_t>(i) * n_lon;
        double au = A_up[i], ad = A_dn[i], c = C[i], d = diag[i];
        double worst_feas = 0, worst_comp = 0;
        for (int j = 0; j < n_lon; ++j) {
          int jl = j == 0 ? n_lon - 1 : j - 1;
          int jr = j + 1 == n_lon ? 0 : j + 1;
          long double num = static_cast<long double>(au) * up[j] +
                            static_cast<long double>(ad) * dn[j] +
                            static_cast<long double>(c) * (cur[jl] + cur[jr]) +
                            0.5L - static_cast<long double>(d) * cur[j];
          double rres = static_cast<double>(num);
          worst_feas = std::max(worst_feas, -rres);
          worst_comp = std::max(worst_comp, std::min(obs[j] - cur[j], rres));
        }
        row_feas[i] = worst_feas;
        row_comp[i] = worst_comp;
      }
    });
    double feas = 0, comp = 0;
    for (int i = 1; i + 1 < n_lat; ++i) {
      feas = std::max(feas, row_feas[i]);
      comp = std::max(comp, row_comp[i]);
    }
    for (int pole = 0; pole < 2; ++pole) {
      int row = pole == 0 ? 0 : n_lat - 1;
      int ring = pole == 0 ? 1 : n_lat - 2;
      const double* rg = psi.data() + static_cast<size_t>(ring) * n_lon;
      long double mean = 0;
      for (int j = 0; j < n_lon; ++j) mean += rg[j];
      size_t base = static_cast<size_t>(row) * n_lon;
      double rres = static_cast<double>(
          4.0L / (h * h) * (mean / n_lon - static_cast<long double>(psi[base])) +
          0.5L);
      feas = std::max(feas, -rres);
      comp = std::max(comp, std::min(phi[base] - psi[base], rres));
    }
    *feas_out = feas;
    *comp_out = comp;
  };

  long it = 0;
  bool converged = false;
  double feas = 0, comp = 0;
  long next_residual_check = 1;
  while (it < max_iter) {
    std::fill(row_change.begin(), row_change.end(), 0.0);
    sweep_color(1);
    sweep_color(0);
    double change = update_pole(0, 1);
    change = std::max(change, update_pole(n_lat - 1, n_lat - 2));
    for (int i = 1; i + 1 < n_lat; ++i) change = std::max(change, row_change[i]);
    ++it;
    if (change <= tol && it >= next_residual_check) {
      residuals(&feas, &comp);
      if (std::max(feas, comp) <= residual_target) {
        converged = true;
        break;
      }
      next_residual_check = it + 16;
    }
  }
  if (!converged) residuals(&feas, &comp);

  EnvelopeResult env;
  env.method = "lcp";
  env.weight_name = w.name;
  env.weight_hash = w.hash();
  env.converged = converged;
  env.iterations = it;
  env.n_lat = n_lat;
  env.n_lon = n_lon;
  env.ll_values = std::move(psi);
  env.ll_obstacle = std::move(phi);
  double obstacle = -1e300;
  for (long k = 0; k < cells; ++k)
    obstacle = std::max(obstacle, env.ll_values[k] - env.ll_obstacle[k]);
  env.obstacle_residual = std::max(0.0, obstacle);
  env.feasibility_residual = feas;
  env.complementarity_residual = std::max(0.0, comp);
  return env;
}

double equilibrium_pairing(const EnvelopeResult& env, const TestFunction& u,
                           const QuadratureGrid& grid) {
  if (!env.converged)
    throw std::invalid_argument("equilibrium_pairing: envelope not converged");
  double direct = integrate(u.value, grid);
  double ddc = integrate(
      [&](const SpherePoint& p) { return env(p) * u.ddc_density(p); }, grid);
  return direct + ddc;
}

void write_envelope_csv(const EnvelopeResult& env, std::ostream& out) {
  out << "# method = " << env.method << "\n";
  out << "# weight = " << env.weight_name << "\n";
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(env.weight_hash));
  out << "# weight_hash = " << hex << "\n";
  out << "# converged = " << (env.converged ? 1 : 0) << "\n";
  out << "# iterations = " << env.iterations << "\n";
  out << "# obstacle_residual = " << g17(env.obstacle_residual) << "\n";
  out << "# feasibility_residual = " << g17(env.feasibility_residual) << "\n";
  out << "# complementarity_residual = " << g17(env.complementarity_residual)
      << "\n";
  if (env.n_lat == 0) {
    out << "t,r,phi,phi_eq\n";
    int n = static_cast<int>(env.phi_eq_t.size());
    double h = (env.t_max - env.t_min) / (n - 1);
    for (int i = 0; i < n; ++i) {
      double t = env.t_min + i * h;
      out << g17(t) << ',' << g17(std::exp(t)) << ',' << g17(env.obstacle_t[i])
          << ',' << g17(env.phi_eq_t[i]) << "\n";
    }
  } else {
    out << "theta,angle,phi,phi_eq\n";
    double h = kPi / (env.n_lat - 1);
    double hphi = 2.0 * kPi / env.n_lon;
    for (int i = 0; i < env.n_lat; ++i)
      for (int j = 0; j < env.n_lon; ++j) {
        size_t k = static_cast<size_t>(i) * env.n_lon + j;
        out << g17(i * h) << ',' << g17(j * hphi) << ','
            << g17(env.ll_obstacle[k]) << ',' << g17(env.ll_values[k]) << "\n";
      }
  }
}

}  // namespace eqz
