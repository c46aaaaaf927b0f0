#include "eqz/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "eqz/parallel.hpp"
#include "eqz/random_sections.hpp"
#include "eqz/textio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace eqz {

namespace {

constexpr const char* kTool = "eqzlab 1.0.0";
constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void bad(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

void check_keys(const json& o, const char* ctx,
                std::initializer_list<const char*> allowed) {
  for (auto it = o.begin(); it != o.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) bad("unknown key '" + it.key() + "' in " + ctx);
  }
}

double get_num(const json& o, const char* key, double def, double lo,
               double hi, const char* ctx) {
  if (!o.contains(key)) return def;
  const json& v = o.at(key);
  if (!v.is_number()) bad(std::string(key) + " in " + ctx + " must be a number");
  double x = v.get<double>();
  if (!(x >= lo && x <= hi))
    bad(std::string(key) + " in " + ctx + " out of range");
  return x;
}

long get_int(const json& o, const char* key, long def, long lo, long hi,
             const char* ctx) {
  if (!o.contains(key)) return def;
  const json& v = o.at(key);
  if (!v.is_number_integer())
    bad(std::string(key) + " in " + ctx + " must be an integer");
  long x = v.get<long>();
  if (x < lo || x > hi) bad(std::string(key) + " in " + ctx + " out of range");
  return x;
}

double req_num(const json& o, const char* key, const char* ctx) {
  if (!o.contains(key)) bad(std::string(ctx) + " requires '" + key + "'");
  if (!o.at(key).is_number())
    bad(std::string(key) + " in " + ctx + " must be a number");
  return o.at(key).get<double>();
}

SpherePoint unit_from_json(const json& v, const char* ctx) {
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() ||
      !v[1].is_number() || !v[2].is_number())
    bad(std::string(ctx) + " must be an array of 3 numbers");
  return SpherePoint::from_unit(v[0].get<double>(), v[1].get<double>(),
                                v[2].get<double>());
}

// Parses a weight subobject and returns both the Weight and its normalized
// JSON form (defaults materialized) for hashing.
Weight weight_from_json(const json& w, json& norm) {
  if (!w.is_object()) bad("weight must be an object");
  if (!w.contains("kind") || !w.at("kind").is_string())
    bad("weight requires a string 'kind'");
  const std::string kind = w.at("kind").get<std::string>();
  norm = json::object();
  norm["kind"] = kind;
  if (kind == "constant") {
    check_keys(w, "weight", {"kind", "value"});
    double v = get_num(w, "value", 0.0, -1e6, 1e6, "weight");
    norm["value"] = v;
    return constant_weight(v);
  }
  if (kind == "scaled_fs") {
    check_keys(w, "weight", {"kind", "beta"});
    double beta = req_num(w, "beta", "scaled_fs");
    norm["beta"] = beta;
    return scaled_fs(beta);
  }
  if (kind == "gauss_bump") {
    check_keys(w, "weight", {"kind", "amplitude", "sigma"});
    double a = req_num(w, "amplitude", "gauss_bump");
    double s = req_num(w, "sigma", "gauss_bump");
    if (!(s > 0)) bad("gauss_bump sigma must be positive");
    norm["amplitude"] = a;
    norm["sigma"] = s;
    return gauss_bump(a, s);
  }
  if (kind == "holder_bump") {
    check_keys(w, "weight", {"kind", "amplitude", "exponent", "center"});
    double a = req_num(w, "amplitude", "holder_bump");
    double al = req_num(w, "exponent", "holder_bump");
    if (!(al > 0 && al <= 1)) bad("holder_bump exponent must lie in (0, 1]");
    SpherePoint c = w.contains("center")
                        ? unit_from_json(w.at("center"), "holder_bump center")
                        : SpherePoint::from_unit(0, 0, -1);
    norm["amplitude"] = a;
    norm["exponent"] = al;
    norm["center"] = {c.x, c.y, c.z};
    return holder_bump(a, al, c);
  }
  if (kind == "ball_sup") {
    check_keys(w, "weight", {"kind", "rho", "base"});
    double rho = req_num(w, "rho", "ball_sup");
    if (!w.contains("base")) bad("ball_sup requires 'base'");
    json base_norm;
    Weight base = weight_from_json(w.at("base"), base_norm);
    norm["rho"] = rho;
    norm["base"] = base_norm;
    return ball_sup(base, rho);
  }
  if (kind == "csv") {
    check_keys(w, "weight", {"kind", "path"});
    if (!w.contains("path") || !w.at("path").is_string())
      bad("csv weight requires a string 'path'");
    std::string path = w.at("path").get<std::string>();
    norm["path"] = path;
    return weight_from_csv(path);
  }
  bad("unknown weight kind '" + kind + "'");
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n == 0 ? 0.0 : (n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]));
}

bool max_le_2median(const std::vector<double>& v, double* mx, double* med) {
  *mx = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  *med = median_of(v);
  return !v.empty() && *mx <= 2.0 * *med;
}

std::vector<std::string> provenance(const ExperimentConfig& cfg,
                                    const QuadratureGrid& g,
                                    const std::string& runner) {
  std::vector<std::string> lines;
  lines.push_back(std::string("# tool = ") + kTool);
  lines.push_back("# runner = " + runner);
  lines.push_back("# config = " + hex64(cfg.config_hash()));
  lines.push_back("# weight = " + cfg.weight.name);
  lines.push_back("# weight_hash = " + hex64(cfg.weight.hash()));
  lines.push_back("# grid_hash = " + hex64(g.content_hash));
  lines.push_back("# seed = " + std::to_string(cfg.seed));
  return lines;
}

std::string write_table(const fs::path& dir,
                        const std::vector<std::string>& head,
                        const std::string& file, const std::string& columns,
                        const std::vector<std::string>& rows) {
  fs::create_directories(dir);
  fs::path p = dir / file;
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  for (const std::string& h : head) os << h << '\n';
  os << columns << '\n';
  for (const std::string& r : rows) os << r << '\n';
  return p.string();
}

struct Shared {
  std::shared_ptr<const QuadratureGrid> grid;
  EnvelopeResult env;
  std::vector<TestFunction> dict;
  std::string dict_id;
  std::string region_id = "global";
  PairingVector eq;
};

Shared setup(const ExperimentConfig& cfg, int threads, bool need_env,
             bool need_dict) {
  if (cfg.p_list.empty())
    throw std::invalid_argument("experiment: empty p list");
  Shared sh;
  sh.grid = std::make_shared<const QuadratureGrid>(
      make_grid(cfg.grid_n_r, cfg.grid_n_theta));
  if (need_env) sh.env = make_envelope(cfg, threads);
  if (need_dict) {
    sh.dict = harmonic_dictionary(cfg.dictionary_degree);
    sh.dict_id = dictionary_id(cfg.dictionary_degree);
    if (cfg.region) {
      sh.dict = localized_dictionary(sh.dict, *cfg.region);
      sh.region_id = cfg.region->id();
    }
    if (need_env)
      sh.eq = pair_equilibrium(sh.env, sh.dict, sh.dict_id, sh.region_id,
                               *sh.grid);
  }
  return sh;
}

void write_summary(const fs::path& dir, const ExperimentConfig& cfg,
                   const QuadratureGrid& grid, ExperimentReport& rep,
                   const json& claims, const json& measured) {
  json s;
  s["tool"] = kTool;
  s["runner"] = rep.name;
  s["provenance"] = {{"config_hash", hex64(cfg.config_hash())},
                     {"weight", cfg.weight.name},
                     {"weight_hash", hex64(cfg.weight.hash())},
                     {"grid_hash", hex64(grid.content_hash)}};
  s["claims"] = claims;
  s["claims_pass"] = rep.claims_pass;
  s["measured"] = measured;
  s["config"] = json::parse(cfg.config_json);
  fs::create_directories(dir);
  fs::path p = dir / "summary.json";
  std::ofstream os(p);
  os << s.dump(2) << '\n';
  rep.files.push_back(p.string());
  for (const auto& [k, v] : measured.items())
    if (v.is_number()) rep.measured.emplace_back(k, v.get<double>());
}

// Median per-sample dictionary discrepancy between the averaged empirical
// divisor current of a k-tuple and the reference pairing vector. Results are
// indexed by sample, so any thread partition yields identical numbers.
void sample_discrepancies(const SectionSpace& space, const Shared& sh,
                          const ExperimentConfig& cfg, int threads,
                          std::vector<double>& disc,
                          std::vector<double>& massv) {
  const long M = cfg.samples;
  disc.assign(M, 0.0);
  massv.assign(M, 0.0);
  parallel_for(M, threads, [&](long lo, long hi) {
    for (long i = lo; i < hi; ++i) {
      std::vector<RandomSection> tuple =
          sample_tuple(space, cfg.k, cfg.seed, static_cast<std::uint32_t>(i));
      PairingVector avg;
      avg.tag = CurrentTag::empirical;
      avg.dictionary_id = sh.dict_id;
      avg.region = sh.region_id;
      avg.values.assign(sh.dict.size(), 0.0);
      double msum = 0;
      for (const RandomSection& sec : tuple) {
        ZeroSet zs = zeros(sec, space);
        msum += mass(zs);
        PairingVector pv =
            pair_empirical(zs, sh.dict, sh.dict_id, sh.region_id, space.p);
        for (size_t j = 0; j < pv.values.size(); ++j)
          avg.values[j] += pv.values[j] / cfg.k;
      }
      disc[i] = dict_seminorm(avg, sh.eq);
      massv[i] = msum / cfg.k;
    }
  });
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0;
  size_t i = static_cast<size_t>(q * (sorted.size() - 1));
  return sorted[i];
}

}  // namespace

std::uint64_t ExperimentConfig::config_hash() const {
  return fnv1a(config_json);
}

double ExperimentReport::measure(const std::string& key) const {
  for (const auto& [k, v] : measured)
    if (k == key) return v;
  throw std::out_of_range("no measured value named " + key);
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) bad("top level must be an object");
  check_keys(doc, "config",
             {"weight", "p_list", "m", "k", "samples", "seed", "grid",
              "dictionary_degree", "region", "envelope", "lambda_factors",
              "sequences", "out_dir", "cache_dir"});
  if (!doc.contains("weight")) bad("missing 'weight'");
  if (!doc.contains("p_list")) bad("missing 'p_list'");

  ExperimentConfig cfg;
  json norm = json::object();
  json wnorm;
  cfg.weight = weight_from_json(doc.at("weight"), wnorm);
  norm["weight"] = wnorm;

  const json& pl = doc.at("p_list");
  if (!pl.is_array() || pl.empty()) bad("p_list must be a nonempty array");
  for (const json& v : pl) {
    if (!v.is_number_integer()) bad("p_list entries must be integers");
    long p = v.get<long>();
    if (p < 1 || p > 100000) bad("p_list entries must lie in [1, 100000]");
    cfg.p_list.push_back(static_cast<int>(p));
  }
  norm["p_list"] = cfg.p_list;

  cfg.m = static_cast<int>(get_int(doc, "m", 0, -1000, 1000, "config"));
  cfg.k = static_cast<int>(get_int(doc, "k", 1, 1, 64, "config"));
  cfg.samples = get_int(doc, "samples", 200, 1, 100000000, "config");
  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<long long>() < 0))
      bad("seed must be a nonnegative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  norm["m"] = cfg.m;
  norm["k"] = cfg.k;
  norm["samples"] = cfg.samples;
  norm["seed"] = cfg.seed;

  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    if (!g.is_object()) bad("grid must be an object");
    check_keys(g, "grid", {"n_r", "n_theta"});
    cfg.grid_n_r = static_cast<int>(get_int(g, "n_r", 400, 4, 20000, "grid"));
    cfg.grid_n_theta =
        static_cast<int>(get_int(g, "n_theta", 400, 4, 20000, "grid"));
  }
  norm["grid"] = {{"n_r", cfg.grid_n_r}, {"n_theta", cfg.grid_n_theta}};

  cfg.dictionary_degree =
      static_cast<int>(get_int(doc, "dictionary_degree", 8, 0, 32, "config"));
  norm["dictionary_degree"] = cfg.dictionary_degree;

  if (doc.contains("region")) {
    const json& r = doc.at("region");
    if (!r.is_object()) bad("region must be an object");
    check_keys(r, "region", {"center", "radius"});
    if (!r.contains("center") || !r.contains("radius"))
      bad("region requires 'center' and 'radius'");
    CapRegion cap;
    cap.center = unit_from_json(r.at("center"), "region center");
    cap.radius = req_num(r, "radius", "region");
    if (!(cap.radius > 0 && cap.radius < kPi))
      bad("region radius must lie in (0, pi)");
    cfg.region = cap;
    norm["region"] = {{"center", {cap.center.x, cap.center.y, cap.center.z}},
                      {"radius", cap.radius}};
  } else {
    norm["region"] = nullptr;
  }

  if (doc.contains("envelope")) {
    const json& e = doc.at("envelope");
    if (!e.is_object()) bad("envelope must be an object");
    check_keys(e, "envelope",
               {"method", "n_t", "n_lat", "n_lon", "tol", "max_iter",
                "relaxation", "residual_target"});
    if (e.contains("method")) {
      if (!e.at("method").is_string()) bad("envelope method must be a string");
      cfg.envelope.method = e.at("method").get<std::string>();
      if (cfg.envelope.method != "auto" && cfg.envelope.method != "radial" &&
          cfg.envelope.method != "lcp")
        bad("envelope method must be auto, radial or lcp");
    }
    cfg.envelope.n_t =
        static_cast<int>(get_int(e, "n_t", 4001, 33, 2000001, "envelope"));
    cfg.envelope.n_lat =
        static_cast<int>(get_int(e, "n_lat", 181, 9, 4001, "envelope"));
    cfg.envelope.n_lon =
        static_cast<int>(get_int(e, "n_lon", 360, 8, 8000, "envelope"));
    cfg.envelope.tol = get_num(e, "tol", 1e-8, 1e-15, 1e-2, "envelope");
    cfg.envelope.max_iter =
        get_int(e, "max_iter", 200000, 1, 100000000, "envelope");
    cfg.envelope.relaxation =
        get_num(e, "relaxation", 0.0, 0.0, 1.999, "envelope");
    cfg.envelope.residual_target =
        get_num(e, "residual_target", 8e-7, 1e-12, 1e-2, "envelope");
  }
  norm["envelope"] = {{"method", cfg.envelope.method},
                      {"n_t", cfg.envelope.n_t},
                      {"n_lat", cfg.envelope.n_lat},
                      {"n_lon", cfg.envelope.n_lon},
                      {"tol", cfg.envelope.tol},
                      {"max_iter", cfg.envelope.max_iter},
                      {"relaxation", cfg.envelope.relaxation},
                      {"residual_target", cfg.envelope.residual_target}};

  if (doc.contains("lambda_factors")) {
    const json& lf = doc.at("lambda_factors");
    if (!lf.is_array() || lf.empty())
      bad("lambda_factors must be a nonempty array");
    cfg.lambda_factors.clear();
    for (const json& v : lf) {
      if (!v.is_number() || !(v.get<double>() > 0))
        bad("lambda_factors entries must be positive numbers");
      cfg.lambda_factors.push_back(v.get<double>());
    }
  }
  norm["lambda_factors"] = cfg.lambda_factors;

  cfg.sequences = get_int(doc, "sequences", 50, 1, 1000000, "config");
  norm["sequences"] = cfg.sequences;

  if (doc.contains("out_dir")) {
    if (!doc.at("out_dir").is_string()) bad("out_dir must be a string");
    cfg.out_dir = doc.at("out_dir").get<std::string>();
  }
  if (doc.contains("cache_dir")) {
    if (!doc.at("cache_dir").is_string()) bad("cache_dir must be a string");
    cfg.cache_dir = doc.at("cache_dir").get<std::string>();
  }
  norm["out_dir"] = cfg.out_dir;
  norm["cache_dir"] = cfg.cache_dir;

  cfg.config_json = norm.dump();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

EnvelopeResult make_envelope(const ExperimentConfig& cfg, int threads) {
  const EnvelopeParams& ep = cfg.envelope;
  const bool radial_ok = cfg.weight.radial && cfg.weight.profile.has_value();
  std::string method = ep.method == "auto" ? (radial_ok ? "radial" : "lcp")
                                           : ep.method;
  if (method == "radial") {
    if (!radial_ok)
      throw std::invalid_argument(
          "envelope: method 'radial' requires a radial weight with a profile");
    return radial_envelope(cfg.weight, ep.n_t);
  }
  EnvelopeResult env =
      lcp_envelope(cfg.weight, ep.n_lat, ep.n_lon, ep.tol, ep.max_iter,
                   ep.relaxation, ep.residual_target, threads);
  if (!env.converged)
    throw std::runtime_error(
        "envelope: LCP solve did not converge after " +
        std::to_string(env.iterations) + " sweeps (obstacle " +
        g17(env.obstacle_residual) + ", feasibility " +
        g17(env.feasibility_residual) + ", complementarity " +
        g17(env.complementarity_residual) + ")");
  return env;
}

GapStats phi_gap_stats(const SectionSpace& s, const EnvelopeResult& env,
                       const QuadratureGrid& grid, const CapRegion* cap) {
  const size_t n = grid.nodes.size();
  const bool product =
      n == static_cast<size_t>(2) * grid.n_r * grid.n_theta;
  std::vector<double> gap(n);
  if (s.radial && env.method == "radial" && product) {
    // Both phi_p and phi_eq are radial: one evaluation per quadrature ring.
    int n_r = grid.n_r;
    std::vector<double> ring(2 * n_r);
    for (int k = 0; k < n_r; ++k) {
      double r = grid.radii[k], t = std::log(r);
      ring[k] = fs_weight(s, SpherePoint::from_chart(Chart::Z, r)) -
                env.value_at_t(t);
      ring[n_r + k] = fs_weight(s, SpherePoint::from_chart(Chart::W, r)) -
                      env.value_at_t(-t);
    }
    long zb = static_cast<long>(n_r) * grid.n_theta;
    for (size_t i = 0; i < n; ++i) {
      long li = static_cast<long>(i);
      gap[i] = ring[li < zb ? li / grid.n_theta
                            : n_r + (li - zb) / grid.n_theta];
    }
  } else {
    for (size_t i = 0; i < n; ++i)
      gap[i] = fs_weight(s, grid.nodes[i].point) - env(grid.nodes[i].point);
  }
  GapStats st;
  st.sup = -1e300;
  st.min = 1e300;
  bool any = false;
  for (size_t i = 0; i < n; ++i) {
    if (cap && !cap->contains(grid.nodes[i].point)) continue;
    any = true;
    st.sup = std::max(st.sup, gap[i]);
    st.min = std::min(st.min, gap[i]);
  }
  if (!any) throw std::invalid_argument("phi_gap_stats: cap contains no node");
  size_t idx = 0;
  st.l1 = integrate(
      [&](const SpherePoint& x) {
        double v = std::abs(gap[idx++]);
        return (cap && !cap->contains(x)) ? 0.0 : v;
      },
      grid);
  return st;
}

double log_bergman_l1(const SectionSpace& s, const QuadratureGrid& grid,
                      const CapRegion* cap) {
  const size_t n = grid.nodes.size();
  const bool product =
      n == static_cast<size_t>(2) * grid.n_r * grid.n_theta;
  std::vector<double> lb(n);
  if (s.radial && product) {
    int n_r = grid.n_r;
    std::vector<double> ring(2 * n_r);
    for (int k = 0; k < n_r; ++k) {
      double r = grid.radii[k];
      ring[k] = log_bergman(s, SpherePoint::from_chart(Chart::Z, r));
      ring[n_r + k] = log_bergman(s, SpherePoint::from_chart(Chart::W, r));
    }
    long zb = static_cast<long>(n_r) * grid.n_theta;
    for (size_t i = 0; i < n; ++i) {
      long li = static_cast<long>(i);
      lb[i] = ring[li < zb ? li / grid.n_theta
                           : n_r + (li - zb) / grid.n_theta];
    }
  } else {
    for (size_t i = 0; i < n; ++i) lb[i] = log_bergman(s, grid.nodes[i].point);
  }
  size_t idx = 0;
  return integrate(
      [&](const SpherePoint& x) {
        double v = std::abs(lb[idx++]);
        return (cap && !cap->contains(x)) ? 0.0 : v;
      },
      grid);
}

RatioClaim ratio_claim(const std::vector<double>& p,
                       const std::vector<double>& err) {
  RatioClaim rc;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 5) continue;
    rc.ratio.push_back(err[i] * p[i] / std::log(p[i]));
  }
  rc.pass_2x = max_le_2median(rc.ratio, &rc.max, &rc.median);
  return rc;
}

LowerBoundFit fit_lower_bound(const std::vector<double>& p,
                              const std::vector<double>& min_gap) {
  LowerBoundFit f;
  std::vector<double> pos;
  for (size_t i = 0; i < p.size(); ++i) {
    double c = std::max(0.0, -p[i] * min_gap[i]);
    f.c = std::max(f.c, c);
    if (c > 0) pos.push_back(c);
  }
  if (f.c > 0) {
    double cmin = *std::min_element(pos.begin(), pos.end());
    f.variation = (f.c - cmin) / f.c;
    f.stable = f.variation <= 0.5;
  }
  return f;
}

ExperimentReport run_convergence(const ExperimentConfig& cfg, int threads) {
  ExperimentReport rep;
  rep.name = "convergence";
  Shared sh = setup(cfg, threads, true, false);
  std::vector<double> ps, sups, mins;
  std::vector<std::string> rows;
  for (int p : cfg.p_list) {
    SectionSpace space = build_space(p, cfg.m, cfg.weight, sh.grid,
                                     cfg.cache_dir, threads);
    GapStats st = phi_gap_stats(space, sh.env, *sh.grid);
    ps.push_back(p);
    sups.push_back(st.sup);
    mins.push_back(st.min);
    std::ostringstream os;
    os << p << ',' << g17(st.sup) << ',' << g17(st.l1) << ',' << g17(st.min)
       << ',' << g17(p * st.min) << ',' << g17(st.sup * p / std::log(double(p)));
    rows.push_back(os.str());
  }
  RatioClaim rc = ratio_claim(ps, sups);
  LowerBoundFit lb = fit_lower_bound(ps, mins);
  rep.claims_pass = rc.pass_2x && lb.stable;
  rep.notes.push_back("rate: max ratio " + g17(rc.max) + " vs 2x median " +
                      g17(2 * rc.median) + (rc.pass_2x ? " PASS" : " FAIL"));
  rep.notes.push_back("lower bound: C " + g17(lb.c) + " variation " +
                      g17(lb.variation) + (lb.stable ? " PASS" : " FAIL"));
  rep.files.push_back(write_table(
      cfg.out_dir, provenance(cfg, *sh.grid, rep.name), "convergence.csv",
      "p,sup_gap,l1_gap,min_gap,p_min_gap,ratio", rows));
  write_summary(cfg.out_dir, cfg, *sh.grid, rep,
                {{"rate_max_le_2x_median", rc.pass_2x},
                 {"lower_bound_stable", lb.stable}},
                {{"ratio_max", rc.max},
                 {"ratio_median", rc.median},
                 {"lower_bound_c", lb.c},
                 {"lower_bound_variation", lb.variation},
                 {"envelope_iterations", double(sh.env.iterations)}});
  return rep;
}

ExperimentReport run_equidistribution(const ExperimentConfig& cfg,
                                      int threads) {
  ExperimentReport rep;
  rep.name = "equidistribution";
  Shared sh = setup(cfg, threads, true, true);
  std::vector<std::string> sample_rows, stat_rows;
  std::vector<double> ps, medians;
  bool mass_exact = true;
  for (int p : cfg.p_list) {
    SectionSpace space = build_space(p, cfg.m, cfg.weight, sh.grid,
                                     cfg.cache_dir, threads);
    std::vector<double> disc, massv;
    sample_discrepancies(space, sh, cfg, threads, disc, massv);
    const double mass_true = double(p + cfg.m) / p;
    for (long i = 0; i < cfg.samples; ++i) {
      std::ostringstream os;
      os << p << ',' << i << ',' << g17(disc[i]) << ',' << g17(massv[i]);
      sample_rows.push_back(os.str());
      if (massv[i] != mass_true) mass_exact = false;
    }
    std::vector<double> sorted = disc;
    std::sort(sorted.begin(), sorted.end());
    double mean = 0;
    for (double d : disc) mean += d;
    mean /= disc.size();
    double med = median_of(disc);
    ps.push_back(p);
    medians.push_back(med);
    std::ostringstream os;
    os << p << ',' << g17(mean) << ',' << g17(med) << ','
       << g17(quantile_sorted(sorted, 0.1)) << ','
       << g17(quantile_sorted(sorted, 0.9)) << ','
       << g17(med * p / std::log(double(p)));
    stat_rows.push_back(os.str());
  }
  RatioClaim rc = ratio_claim(ps, medians);
  rep.claims_pass = rc.pass_2x && mass_exact;
  rep.notes.push_back("median rate: max ratio " + g17(rc.max) +
                      " vs 2x median " + g17(2 * rc.median) +
                      (rc.pass_2x ? " PASS" : " FAIL"));
  rep.notes.push_back(std::string("mass column exact: ") +
                      (mass_exact ? "PASS" : "FAIL"));
  auto head = provenance(cfg, *sh.grid, rep.name);
  rep.files.push_back(write_table(cfg.out_dir, head,
                                  "equidistribution_samples.csv",
                                  "p,sample,discrepancy,mass", sample_rows));
  rep.files.push_back(write_table(cfg.out_dir, head,
                                  "equidistribution_stats.csv",
                                  "p,mean,median,q10,q90,ratio", stat_rows));
  write_summary(cfg.out_dir, cfg, *sh.grid, rep,
                {{"median_rate_max_le_2x_median", rc.pass_2x},
                 {"mass_exact", mass_exact}},
                {{"ratio_max", rc.max}, {"ratio_median", rc.median}});
  return rep;
}

ExperimentReport run_deviation(const ExperimentConfig& cfg, int threads) {
  ExperimentReport rep;
  rep.name = "deviation";
  if (cfg.samples < 1000)
    throw std::invalid_argument("deviation: needs samples >= 1000");
  Shared sh = setup(cfg, threads, false, true);
  const int p = cfg.p_list.front();
  if (cfg.p_list.size() > 1)
    rep.notes.push_back("deviation uses only the first p = " +
                        std::to_string(p));
  SectionSpace space =
      build_space(p, cfg.m, cfg.weight, sh.grid, cfg.cache_dir, threads);
  PairingVector fsv =
      pair_fs_current(space, sh.dict, sh.dict_id, sh.region_id, *sh.grid);

  const long M = cfg.samples;
  std::vector<double> D(M);
  parallel_for(M, threads, [&](long lo, long hi) {
    for (long i = lo; i < hi; ++i) {
      RandomSection sec =
          sample_section(space, cfg.seed, static_cast<std::uint32_t>(i));
      ZeroSet zs = zeros(sec, space);
      PairingVector emp =
          pair_empirical(zs, sh.dict, sh.dict_id, sh.region_id, p);
      // unscaled currents: [Div(s)] vs omega_p
      D[i] = p * dict_seminorm(emp, fsv);
    }
  });
  std::vector<double> sorted = D;
  std::sort(sorted.begin(), sorted.end());
  const bool degenerate = !(sorted.back() > 0);

  // Tail at the logarithmic schedule lambda = a log p.
  std::vector<std::string> sched_rows;
  for (double a : cfg.lambda_factors) {
    double lam = a * std::log(double(p));
    long exceed =
        sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), lam);
    std::ostringstream os;
    os << g17(a) << ',' << g17(lam) << ',' << g17(double(exceed) / M);
    sched_rows.push_back(os.str());
  }

  // Central decade: empirical quantile lambdas with tail in [0.05, 0.5].
  std::vector<std::string> tail_rows;
  std::vector<double> xs, ys;
  long last_k = -1;
  for (int j = 0; j < 12; ++j) {
    double f = 0.5 * std::pow(0.1, j / 11.0);
    long kk = std::llround(f * M);
    kk = std::max(1l, std::min(M - 1, kk));
    if (kk == last_k) continue;
    last_k = kk;
    double lam = sorted[M - 1 - kk];
    double tail = double(kk) / M;
    std::ostringstream os;
    os << g17(lam) << ',' << g17(tail) << ',' << g17(std::log(tail));
    tail_rows.push_back(os.str());
    xs.push_back(lam);
    ys.push_back(std::log(tail));
  }
  double r2 = 0, slope = 0;
  if (!degenerate && xs.size() >= 3) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long n = xs.size();
    for (long i = 0; i < n; ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    double den = n * sxx - sx * sx;
    if (den > 0) {
      slope = (n * sxy - sx * sy) / den;
      double b = (sy - slope * sx) / n;
      double ssr = 0, sst = 0, ybar = sy / n;
      for (long i = 0; i < n; ++i) {
        double e = ys[i] - (slope * xs[i] + b);
        ssr += e * e;
        sst += (ys[i] - ybar) * (ys[i] - ybar);
      }
      r2 = sst > 0 ? 1.0 - ssr / sst : 0.0;
    }
  }
  bool linear = !degenerate && r2 >= 0.9;
  rep.claims_pass = linear;
  if (degenerate) rep.notes.push_back("degenerate tail: all discrepancies 0");
  rep.notes.push_back("log-tail linearity R^2 " + g17(r2) +
                      (linear ? " PASS" : " FAIL"));
  auto head = provenance(cfg, *sh.grid, rep.name);
  rep.files.push_back(write_table(cfg.out_dir, head, "deviation_tail.csv",
                                  "lambda,tail,log_tail", tail_rows));
  rep.files.push_back(write_table(cfg.out_dir, head, "deviation_schedule.csv",
                                  "factor,lambda,tail", sched_rows));
  write_summary(cfg.out_dir, cfg, *sh.grid, rep,
                {{"log_tail_linear", linear}},
                {{"r2", r2}, {"slope", slope}, {"p", double(p)}});
  return rep;
}

ExperimentReport run_sequence(const ExperimentConfig& cfg, int threads) {
  ExperimentReport rep;
  rep.name = "sequence";
  Shared sh = setup(cfg, threads, true, true);
  const int P = *std::max_element(cfg.p_list.begin(), cfg.p_list.end());
  if (P < 5) throw std::invalid_argument("sequence: max p must be >= 5");
  std::vector<int> pgrid;
  for (int p = 5; p <= P; p += 5) pgrid.push_back(p);
  const long N = cfg.sequences;

  std::vector<std::vector<double>> d(pgrid.size());
  for (size_t pi = 0; pi < pgrid.size(); ++pi) {
    SectionSpace space = build_space(pgrid[pi], cfg.m, cfg.weight, sh.grid,
                                     cfg.cache_dir, threads);
    d[pi].assign(N, 0.0);
    parallel_for(N, threads, [&](long lo, long hi) {
      for (long nq = lo; nq < hi; ++nq) {
        RandomSection sec = sample_section(space, cfg.seed,
                                           static_cast<std::uint32_t>(nq));
        ZeroSet zs = zeros(sec, space);
        PairingVector emp = pair_empirical(zs, sh.dict, sh.dict_id,
                                           sh.region_id, pgrid[pi]);
        d[pi][nq] = dict_seminorm(emp, sh.eq);
      }
    });
  }
  std::vector<double> pooled;
  for (size_t pi = 0; pi < pgrid.size(); ++pi)
    for (long nq = 0; nq < N; ++nq)
      pooled.push_back(d[pi][nq] * pgrid[pi] / std::log(double(pgrid[pi])));
  const double c_used = 2.0 * median_of(pooled);

  std::vector<std::string> disc_rows, onset_rows;
  long onset_le_half = 0;
  std::vector<long> onsets(N, 0);
  for (long nq = 0; nq < N; ++nq) {
    for (size_t pi = 0; pi < pgrid.size(); ++pi) {
      double bound = c_used * std::log(double(pgrid[pi])) / pgrid[pi];
      if (d[pi][nq] > bound) onsets[nq] = pgrid[pi];
    }
    if (onsets[nq] <= P / 2) ++onset_le_half;
    std::ostringstream os;
    os << nq << ',' << onsets[nq];
    onset_rows.push_back(os.str());
  }
  for (size_t pi = 0; pi < pgrid.size(); ++pi)
    for (long nq = 0; nq < N; ++nq) {
      std::ostringstream os;
      os << pgrid[pi] << ',' << nq << ',' << g17(d[pi][nq]) << ','
         << g17(d[pi][nq] * pgrid[pi] / std::log(double(pgrid[pi])));
      disc_rows.push_back(os.str());
    }
  double frac = double(onset_le_half) / N;
  rep.notes.push_back("onset <= P/2 fraction " + g17(frac) + " (C " +
                      g17(c_used) + "); reported, not asserted");
  auto head = provenance(cfg, *sh.grid, rep.name);
  rep.files.push_back(write_table(cfg.out_dir, head,
                                  "sequence_discrepancy.csv",
                                  "p,sequence,discrepancy,ratio", disc_rows));
  rep.files.push_back(write_table(cfg.out_dir, head, "sequence_onsets.csv",
                                  "sequence,onset", onset_rows));
  write_summary(cfg.out_dir, cfg, *sh.grid, rep, json::object(),
                {{"c_used", c_used},
                 {"onset_le_half_fraction", frac},
                 {"pooled_ratio_median", c_used / 2.0}});
  return rep;
}

ExperimentReport run_twisted(const ExperimentConfig& cfg, int threads) {
  ExperimentReport rep;
  rep.name = "twisted";
  if (cfg.m != -2)
    throw std::invalid_argument("twisted: requires m = -2 (adjoint bundle)");
  ExperimentConfig local = cfg;
  if (!local.region) {
    CapRegion cap;
    cap.center = SpherePoint::from_unit(0, 0, -1);
    cap.radius = kPi / 2;
    local.region = cap;
  }
  Shared sh = setup(local, threads, true, true);
  const CapRegion& cap = *local.region;

  std::vector<double> ps, supsU, minsU, l1U;
  std::vector<std::string> conv_rows, kernel_rows, stat_rows;
  std::vector<double> medians;
  for (int p : local.p_list) {
    SectionSpace space = build_space(p, local.m, local.weight, sh.grid,
                                     local.cache_dir, threads);
    GapStats st = phi_gap_stats(space, sh.env, *sh.grid, &cap);
    double lg = std::log(double(p));
    double l1g = log_bergman_l1(space, *sh.grid);
    double l1u = log_bergman_l1(space, *sh.grid, &cap);
    double trace = bergman_trace(space, *sh.grid);
    ps.push_back(p);
    supsU.push_back(st.sup);
    minsU.push_back(st.min);
    l1U.push_back(l1u);
    {
      std::ostringstream os;
      os << p << ',' << g17(st.sup) << ',' << g17(st.l1) << ',' << g17(st.min)
         << ',' << g17(st.sup * p / lg);
      conv_rows.push_back(os.str());
    }
    {
      std::ostringstream os;
      os << p << ',' << g17(trace) << ',' << g17(l1g) << ',' << g17(l1u)
         << ',' << g17(l1g / lg) << ',' << g17(l1u / lg);
      kernel_rows.push_back(os.str());
    }
    std::vector<double> disc, massv;
    sample_discrepancies(space, sh, local, threads, disc, massv);
    double med = median_of(disc);
    medians.push_back(med);
    std::ostringstream os;
    os << p << ',' << g17(med) << ',' << g17(med * p / lg);
    stat_rows.push_back(os.str());
  }
  RatioClaim rc_sup = ratio_claim(ps, supsU);
  RatioClaim rc_med = ratio_claim(ps, medians);
  std::vector<double> kernel_ratios;
  for (size_t i = 0; i < ps.size(); ++i)
    if (ps[i] >= 5) kernel_ratios.push_back(l1U[i] / std::log(ps[i]));
  double kmax, kmed;
  bool kernel_ok = max_le_2median(kernel_ratios, &kmax, &kmed);
  rep.claims_pass = rc_sup.pass_2x && rc_med.pass_2x && kernel_ok;
  rep.notes.push_back("U rate: max ratio " + g17(rc_sup.max) + " vs 2x median " +
                      g17(2 * rc_sup.median) + (rc_sup.pass_2x ? " PASS" : " FAIL"));
  rep.notes.push_back("U median sample rate: " + g17(rc_med.max) +
                      " vs 2x median " + g17(2 * rc_med.median) +
                      (rc_med.pass_2x ? " PASS" : " FAIL"));
  rep.notes.push_back("kernel L1(U)/log p: max " + g17(kmax) + " vs 2x median " +
                      g17(2 * kmed) + (kernel_ok ? " PASS" : " FAIL"));
  auto head = provenance(local, *sh.grid, rep.name);
  rep.files.push_back(write_table(local.out_dir, head,
                                  "twisted_convergence.csv",
                                  "p,sup_gap_U,l1_gap_U,min_gap_U,ratio_U",
                                  conv_rows));
  rep.files.push_back(write_table(
      local.out_dir, head, "twisted_kernel.csv",
      "p,trace,l1_logB_global,l1_logB_U,ratio_global,ratio_U", kernel_rows));
  rep.files.push_back(write_table(local.out_dir, head, "twisted_stats.csv",
                                  "p,median_discrepancy,ratio", stat_rows));
  write_summary(local.out_dir, local, *sh.grid, rep,
                {{"rate_max_le_2x_median_U", rc_sup.pass_2x},
                 {"median_rate_max_le_2x_median_U", rc_med.pass_2x},
                 {"kernel_l1_bounded_U", kernel_ok}},
                {{"kernel_ratio_max", kmax}, {"kernel_ratio_median", kmed}});
  return rep;
}

ExperimentReport run_envelope_dump(const ExperimentConfig& cfg, int threads) {
  ExperimentReport rep;
  rep.name = "envelope";
  Shared sh = setup(cfg, threads, true, false);
  fs::create_directories(cfg.out_dir);
  fs::path p = fs::path(cfg.out_dir) / "envelope.csv";
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  for (const std::string& h : provenance(cfg, *sh.grid, rep.name))
    os << h << '\n';
  write_envelope_csv(sh.env, os);
  os.close();
  rep.files.push_back(p.string());
  rep.notes.push_back("method " + sh.env.method + ", iterations " +
                      std::to_string(sh.env.iterations));
  write_summary(cfg.out_dir, cfg, *sh.grid, rep,
                {{"converged", sh.env.converged}},
                {{"obstacle_residual", sh.env.obstacle_residual},
                 {"feasibility_residual", sh.env.feasibility_residual},
                 {"complementarity_residual", sh.env.complementarity_residual},
                 {"iterations", double(sh.env.iterations)}});
  return rep;
}

ExperimentReport run_bergman_table(const ExperimentConfig& cfg, int threads) {
  ExperimentReport rep;
  rep.name = "bergman";
  Shared sh = setup(cfg, threads, false, false);
  const double tol =
      (cfg.weight.holder && !cfg.weight.smooth) ? 1e-3 : 1e-6;
  bool trace_ok = true;
  std::vector<std::string> rows;
  for (int p : cfg.p_list) {
    SectionSpace space = build_space(p, cfg.m, cfg.weight, sh.grid,
                                     cfg.cache_dir, threads);
    double trace = bergman_trace(space, *sh.grid);
    double rel = std::abs(trace - space.dim) / space.dim;
    if (rel > tol) trace_ok = false;
    double lb_min = 1e300, lb_max = -1e300;
    const bool product = sh.grid->nodes.size() ==
                         static_cast<size_t>(2) * sh.grid->n_r *
                             sh.grid->n_theta;
    if (space.radial && product) {
      for (int kk = 0; kk < sh.grid->n_r; ++kk) {
        double r = sh.grid->radii[kk];
        for (double v :
             {log_bergman(space, SpherePoint::from_chart(Chart::Z, r)),
              log_bergman(space, SpherePoint::from_chart(Chart::W, r))}) {
          lb_min = std::min(lb_min, v);
          lb_max = std::max(lb_max, v);
        }
      }
    } else {
      for (const GridNode& nd : sh.grid->nodes) {
        double v = log_bergman(space, nd.point);
        lb_min = std::min(lb_min, v);
        lb_max = std::max(lb_max, v);
      }
    }
    double msv = mass(space, *sh.grid);
    std::ostringstream os;
    os << p << ',' << cfg.m << ',' << space.dim << ',' << g17(trace) << ','
       << g17(rel) << ',' << g17(lb_min) << ',' << g17(lb_max) << ','
       << g17(msv);
    rows.push_back(os.str());
  }
  rep.claims_pass = trace_ok;
  rep.notes.push_back(std::string("trace identity within ") + g17(tol) +
                      (trace_ok ? " PASS" : " FAIL"));
  rep.files.push_back(write_table(
      cfg.out_dir, provenance(cfg, *sh.grid, rep.name), "bergman.csv",
      "p,m,dim,trace,trace_rel_err,logB_min,logB_max,mass", rows));
  write_summary(cfg.out_dir, cfg, *sh.grid, rep,
                {{"trace_identity", trace_ok}}, {{"trace_tol", tol}});
  return rep;
}

ExperimentReport run_sample_zeros(const ExperimentConfig& cfg, int threads) {
  ExperimentReport rep;
  rep.name = "sample-zeros";
  Shared sh = setup(cfg, threads, false, false);
  bool degree_ok = true;
  for (int p : cfg.p_list) {
    SectionSpace space = build_space(p, cfg.m, cfg.weight, sh.grid,
                                     cfg.cache_dir, threads);
    fs::create_directories(cfg.out_dir);
    fs::path fp = fs::path(cfg.out_dir) /
                  ("zeros_p" + std::to_string(p) + ".csv");
    std::ofstream os(fp);
    if (!os) throw std::runtime_error("cannot write " + fp.string());
    for (const std::string& h : provenance(cfg, *sh.grid, rep.name))
      os << h << '\n';
    os << "sample,chart,re,im,mult\n";
    for (long i = 0; i < cfg.samples; ++i) {
      RandomSection sec =
          sample_section(space, cfg.seed, static_cast<std::uint32_t>(i));
      ZeroSet zs = zeros(sec, space);
      if (zs.total_multiplicity() != p + cfg.m) degree_ok = false;
      write_zero_rows(os, zs, i);
    }
    rep.files.push_back(fp.string());
  }
  rep.claims_pass = degree_ok;
  rep.notes.push_back(std::string("divisor degree p+m: ") +
                      (degree_ok ? "PASS" : "FAIL"));
  write_summary(cfg.out_dir, cfg, *sh.grid, rep,
                {{"divisor_degree", degree_ok}}, json::object());
  return rep;
}

}  // namespace eqz
