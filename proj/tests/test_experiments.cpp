#include <doctest.h>

#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "eqz/experiments.hpp"
#include "eqz/sphere.hpp"
#include "eqz/weights.hpp"

using namespace eqz;
namespace fsys = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// What parse_config says when it rejects the document; empty if it accepts.
std::string rejection(const std::string& json_text) {
  try {
    parse_config(json_text);
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return "";
}

bool rejects_mentioning(const std::string& json_text, const std::string& part) {
  return rejection(json_text).find(part) != std::string::npos;
}

fsys::path fresh_dir(const char* name) {
  fsys::path d = fsys::temp_directory_path() / "eqz_exp_tests" / name;
  fsys::remove_all(d);
  fsys::create_directories(d);
  return d;
}

// Minimal smoke config; callers splice extra top-level entries before the
// closing brace.
std::string smoke(const std::string& extra) {
  return R"({"weight": {"kind": "gauss_bump", "amplitude": 1.0, "sigma": 0.8},
             "p_list": [10], "grid": {"n_r": 48, "n_theta": 48},
             "dictionary_degree": 3, "envelope": {"n_t": 801})" +
         (extra.empty() ? std::string() : "," + extra) + "}";
}

std::vector<std::vector<std::string>> csv_cells(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {  // column names
      header_seen = true;
      continue;
    }
    std::vector<std::string> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::vector<double>> csv_columns(const std::string& text) {
  std::vector<std::vector<double>> rows;
  for (const auto& cells : csv_cells(text)) {
    std::vector<double> row;
    for (const std::string& cell : cells) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("minimal config materializes every default") {
  ExperimentConfig cfg = parse_config(
      R"({"weight": {"kind": "constant", "value": 0}, "p_list": [5]})");
  CHECK(cfg.weight.name == "constant(0)");
  REQUIRE(cfg.p_list == std::vector<int>{5});
  CHECK(cfg.m == 0);
  CHECK(cfg.k == 1);
  CHECK(cfg.samples == 200);
  CHECK(cfg.seed == 1);
  CHECK(cfg.grid_n_r == 400);
  CHECK(cfg.grid_n_theta == 400);
  CHECK(cfg.dictionary_degree == 8);
  CHECK(!cfg.region.has_value());
  CHECK(cfg.envelope.method == "auto");
  CHECK(cfg.envelope.n_t == 4001);
  CHECK(cfg.envelope.n_lat == 181);
  CHECK(cfg.envelope.n_lon == 360);
  CHECK(cfg.envelope.tol == 1e-8);
  CHECK(cfg.envelope.max_iter == 200000);
  CHECK(cfg.envelope.relaxation == 0.0);
  CHECK(cfg.envelope.residual_target == 8e-7);
  CHECK(cfg.lambda_factors == std::vector<double>{1, 2, 4, 8});
  CHECK(cfg.sequences == 50);
  CHECK(cfg.out_dir == "out");
  CHECK(cfg.cache_dir.empty());
  CHECK(!cfg.config_json.empty());

  // a partial envelope object fills the same defaults
  ExperimentConfig part = parse_config(
      R"({"weight": {"kind": "constant"}, "p_list": [5],
          "envelope": {"method": "lcp"}})");
  CHECK(part.envelope.n_lat == 181);
  CHECK(part.envelope.n_lon == 360);
  CHECK(part.envelope.n_t == 4001);
}

TEST_CASE("config hash ignores key order and tracks content") {
  ExperimentConfig a = parse_config(
      R"({"weight": {"kind": "gauss_bump", "amplitude": 2.0, "sigma": 0.7},
          "p_list": [5, 10], "m": -2, "seed": 7})");
  ExperimentConfig b = parse_config(
      R"({"seed": 7, "m": -2, "p_list": [5, 10],
          "weight": {"sigma": 0.7, "kind": "gauss_bump", "amplitude": 2.0}})");
  CHECK(a.config_json == b.config_json);
  CHECK(a.config_hash() == b.config_hash());

  ExperimentConfig c = parse_config(
      R"({"weight": {"kind": "gauss_bump", "amplitude": 2.0, "sigma": 0.7},
          "p_list": [5, 10], "m": 0, "seed": 7})");
  CHECK(a.config_hash() != c.config_hash());
}

TEST_CASE("unknown keys are rejected with the key named") {
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "constant"}, "p_list": [5], "bogus": 1})",
      "bogus"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "constant", "valu": 1}, "p_list": [5]})",
      "valu"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "constant"}, "p_list": [5],
          "grid": {"n_rr": 8}})",
      "n_rr"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "constant"}, "p_list": [5],
          "envelope": {"methodd": "lcp"}})",
      "methodd"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "constant"}, "p_list": [5],
          "region": {"center": [0, 0, -1], "radius": 1, "extra": 2}})",
      "extra"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "ball_sup", "rho": 0.3,
                     "base": {"kind": "constant", "junk": 0}}, "p_list": [5]})",
      "junk"));
}

TEST_CASE("type and range violations throw") {
  CHECK(rejects_mentioning(R"({"p_list": [5]})", "weight"));
  CHECK(rejects_mentioning(R"({"weight": {"kind": "constant"}})", "p_list"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "constant"}, "p_list": []})", "p_list"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "constant"}, "p_list": [0]})", "p_list"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "constant"}, "p_list": [100001]})", "p_list"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "constant"}, "p_list": [2.5]})", "p_list"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "gauss_bump", "amplitude": 1, "sigma": 0},
          "p_list": [5]})",
      "sigma"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "holder_bump", "amplitude": 1, "exponent": 1.5},
          "p_list": [5]})",
      "exponent"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "fourier"}, "p_list": [5]})", "fourier"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "constant"}, "p_list": [5],
          "region": {"center": [0, 0, -1], "radius": 4.0}})",
      "radius"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "constant"}, "p_list": [5],
          "envelope": {"method": "simplex"}})",
      "method"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "constant"}, "p_list": [5], "k": 0})", "k"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "constant"}, "p_list": [5], "samples": 0})",
      "samples"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "constant"}, "p_list": [5],
          "envelope": {"relaxation": 2.0}})",
      "relaxation"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "constant"}, "p_list": [5], "seed": -1})",
      "seed"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "constant"}, "p_list": [5],
          "lambda_factors": []})",
      "lambda_factors"));
  CHECK(rejects_mentioning(
      R"({"weight": {"kind": "constant"}, "p_list": [5],
          "lambda_factors": [-1]})",
      "lambda_factors"));
  CHECK(rejects_mentioning(R"([1, 2])", "object"));
  CHECK(rejects_mentioning(R"(not json)", "JSON"));
  CHECK_THROWS_AS(load_config("no_such_config.json"), std::invalid_argument);
}

TEST_CASE("weight subobjects match the factory constructors") {
  auto wcfg = [](const std::string& wjson) {
    return parse_config(std::string(R"({"p_list": [5], "weight": )") + wjson +
                        "}")
        .weight;
  };
  CHECK(wcfg(R"({"kind": "constant", "value": 1.5})").hash() ==
        constant_weight(1.5).hash());
  CHECK(wcfg(R"({"kind": "scaled_fs", "beta": -0.5})").hash() ==
        scaled_fs(-0.5).hash());
  CHECK(wcfg(R"({"kind": "gauss_bump", "amplitude": 2, "sigma": 0.7})").hash() ==
        gauss_bump(2.0, 0.7).hash());
  // center defaults to the south pole
  CHECK(wcfg(R"({"kind": "holder_bump", "amplitude": 1, "exponent": 0.5})")
            .hash() ==
        holder_bump(1.0, 0.5, SpherePoint::from_unit(0, 0, -1)).hash());
  CHECK(wcfg(R"({"kind": "holder_bump", "amplitude": 1, "exponent": 0.5,
                 "center": [1, 0, 0]})")
            .hash() == holder_bump(1.0, 0.5, SpherePoint::from_unit(1, 0, 0)).hash());
  CHECK(wcfg(R"({"kind": "ball_sup", "rho": 0.3,
                 "base": {"kind": "gauss_bump", "amplitude": 1.5, "sigma": 0.9}})")
            .hash() == ball_sup(gauss_bump(1.5, 0.9), 0.3).hash());

  // csv weights load through the same reader as the factory
  fsys::path dir = fresh_dir("csvweight");
  std::string path = (dir / "w.csv").string();
  {
    Weight gb = gauss_bump(1.5, 0.9);
    std::ofstream out(path);
    out << "chart,re,im,value\n";
    // axis-aligned rings: |re + i im| recovers each radius key exactly
    for (int ci = 0; ci < 2; ++ci)
      for (int ir = 1; ir <= 12; ++ir)
        for (int ia = 0; ia < 4; ++ia) {
          double r = ir / 12.0;
          double re = ia == 0 ? r : ia == 2 ? -r : 0.0;
          double im = ia == 1 ? r : ia == 3 ? -r : 0.0;
          SpherePoint x =
              SpherePoint::from_chart(ci == 0 ? Chart::Z : Chart::W, {re, im});
          char buf[160];
          std::snprintf(buf, sizeof buf, "%c,%.17g,%.17g,%.17g\n",
                        ci == 0 ? 'z' : 'w', re, im, gb(x));
          out << buf;
        }
  }
  Weight direct = weight_from_csv(path);
  Weight parsed = wcfg(R"({"kind": "csv", "path": ")" + path + R"("})");
  CHECK(parsed.hash() == direct.hash());
  SpherePoint probe = SpherePoint::from_chart(Chart::Z, {0.4, 0.2});
  CHECK(parsed(probe) == direct(probe));
}

TEST_CASE("make_envelope selects and validates the solve") {
  ExperimentConfig cfg = parse_config(smoke(""));
  EnvelopeResult env = make_envelope(cfg);
  CHECK(env.method == "radial_hull");  // auto picks radial for radial weights
  CHECK(env.converged);

  ExperimentConfig forced = parse_config(
      R"({"weight": {"kind": "gauss_bump", "amplitude": 1.0, "sigma": 0.8},
          "p_list": [10],
          "envelope": {"method": "lcp", "n_lat": 41, "n_lon": 80}})");
  EnvelopeResult lcp = make_envelope(forced);
  CHECK(lcp.method == "lcp");
  CHECK(lcp.converged);

  ExperimentConfig off = parse_config(
      R"({"weight": {"kind": "holder_bump", "amplitude": 1, "exponent": 0.5,
                     "center": [1, 0, 0]},
          "p_list": [5], "envelope": {"method": "radial"}})");
  CHECK_THROWS_AS(make_envelope(off), std::invalid_argument);

  ExperimentConfig stuck = parse_config(
      R"({"weight": {"kind": "gauss_bump", "amplitude": 2.0, "sigma": 0.7},
          "p_list": [5],
          "envelope": {"method": "lcp", "n_lat": 41, "n_lon": 80,
                       "max_iter": 5}})");
  CHECK_THROWS_AS(make_envelope(stuck), std::runtime_error);
}

TEST_CASE("envelope dump runner writes table and summary deterministically") {
  fsys::path dir = fresh_dir("envdump");
  ExperimentConfig cfg =
      parse_config(smoke(R"("out_dir": ")" + dir.string() + R"(")"));
  ExperimentReport rep = run_envelope_dump(cfg);
  CHECK(rep.name == "envelope");
  CHECK(rep.claims_pass);
  REQUIRE(rep.files.size() == 2);
  CHECK(fsys::path(rep.files[0]).filename() == "envelope.csv");
  CHECK(fsys::path(rep.files[1]).filename() == "summary.json");

  std::string table = slurp(rep.files[0]);
  CHECK(table.find("# method = radial_hull") != std::string::npos);
  CHECK(table.find("t,r,phi,phi_eq") != std::string::npos);
  CHECK(table.find("# weight = gauss_bump(") != std::string::npos);
  std::string summary = slurp(rep.files[1]);
  CHECK(summary.find("\"claims_pass\": true") != std::string::npos);
  CHECK(rep.measure("iterations") >= 0.0);

  ExperimentReport again = run_envelope_dump(cfg);
  CHECK(slurp(again.files[0]) == table);
  CHECK(slurp(again.files[1]) == summary);
}

TEST_CASE("bergman table runner checks the trace identity") {
  fsys::path dir = fresh_dir("bergtab");
  ExperimentConfig cfg = parse_config(
      R"({"weight": {"kind": "gauss_bump", "amplitude": 1.0, "sigma": 0.8},
          "p_list": [5, 10], "grid": {"n_r": 48, "n_theta": 48},
          "out_dir": ")" +
      dir.string() + R"("})");
  ExperimentReport rep = run_bergman_table(cfg);
  CHECK(rep.name == "bergman");
  CHECK(rep.claims_pass);
  CHECK(rep.measure("trace_tol") == 1e-6);
  REQUIRE(rep.files.size() == 2);
  auto rows = csv_columns(slurp(rep.files[0]));
  REQUIRE(rows.size() == 2);
  // p,m,dim,trace,trace_rel_err,logB_min,logB_max,mass
  CHECK(rows[0][0] == 5);
  CHECK(rows[0][2] == 6);
  CHECK(rows[1][2] == 11);
  CHECK(rows[0][4] <= 1e-6);
  CHECK(rows[0][5] <= rows[0][6]);
  CHECK(rows[0][7] == doctest::Approx(1.0).epsilon(1e-9));

  // Hoelder weights get the relaxed tolerance
  fsys::path hdir = fresh_dir("bergtab_h");
  ExperimentConfig hcfg = parse_config(
      R"({"weight": {"kind": "holder_bump", "amplitude": 0.5, "exponent": 0.6},
          "p_list": [5], "grid": {"n_r": 48, "n_theta": 48},
          "out_dir": ")" +
      hdir.string() + R"("})");
  ExperimentReport hrep = run_bergman_table(hcfg);
  CHECK(hrep.measure("trace_tol") == 1e-3);
}

TEST_CASE("sample zeros runner writes one table per degree") {
  fsys::path dir = fresh_dir("zeros");
  ExperimentConfig cfg = parse_config(
      R"({"weight": {"kind": "constant", "value": 0}, "p_list": [7],
          "samples": 3, "grid": {"n_r": 48, "n_theta": 48},
          "out_dir": ")" +
      dir.string() + R"("})");
  ExperimentReport rep = run_sample_zeros(cfg);
  CHECK(rep.name == "sample-zeros");
  CHECK(rep.claims_pass);
  REQUIRE(rep.files.size() == 2);
  CHECK(fsys::path(rep.files[0]).filename() == "zeros_p7.csv");
  std::string table = slurp(rep.files[0]);
  CHECK(table.find("sample,chart,re,im,mult") != std::string::npos);
  auto rows = csv_cells(table);  // the chart column is a letter
  CHECK(rows.size() >= 3);       // >= one row per sample
  long mult0 = 0;
  for (const auto& r : rows)
    if (r[0] == "0") mult0 += std::stol(r[4]);
  CHECK(mult0 == 7);  // sample 0 carries the full divisor degree

  ExperimentReport again = run_sample_zeros(cfg);
  CHECK(slurp(again.files[0]) == table);
}

TEST_CASE("equidistribution runner is thread-count invariant") {
  fsys::path dir = fresh_dir("equi");
  ExperimentConfig cfg = parse_config(smoke(
      R"("samples": 12, "out_dir": ")" + dir.string() + R"(")"));
  ExperimentReport rep1 = run_equidistribution(cfg, 1);
  CHECK(rep1.name == "equidistribution");
  CHECK(rep1.claims_pass);
  REQUIRE(rep1.files.size() == 3);
  std::string samples1 = slurp(rep1.files[0]);
  std::string stats1 = slurp(rep1.files[1]);
  std::string summary1 = slurp(rep1.files[2]);
  bool mass_note = false;
  for (const std::string& n : rep1.notes)
    if (n.find("mass column exact: PASS") != std::string::npos) mass_note = true;
  CHECK(mass_note);

  ExperimentReport rep3 = run_equidistribution(cfg, 3);
  CHECK(slurp(rep3.files[0]) == samples1);
  CHECK(slurp(rep3.files[1]) == stats1);
  CHECK(slurp(rep3.files[2]) == summary1);

  auto rows = csv_columns(samples1);
  CHECK(rows.size() == 12);
  for (const auto& r : rows) CHECK(r[3] == 1.0);  // exact unit mass per sample
}

TEST_CASE("convergence runner tracks the gap ladder") {
  fsys::path dir = fresh_dir("conv");
  ExperimentConfig cfg = parse_config(
      R"({"weight": {"kind": "gauss_bump", "amplitude": 1.0, "sigma": 0.8},
          "p_list": [5, 10, 15, 20, 25], "grid": {"n_r": 64, "n_theta": 64},
          "envelope": {"n_t": 2001},
          "out_dir": ")" +
      dir.string() + R"("})");
  ExperimentReport rep = run_convergence(cfg);
  CHECK(rep.name == "convergence");
  REQUIRE(rep.files.size() == 2);
  CHECK(rep.measure("ratio_max") >= rep.measure("ratio_median"));
  CHECK(rep.measure("lower_bound_c") >= 0.0);
  CHECK(rep.notes.size() == 2);

  auto rows = csv_columns(slurp(rep.files[0]));
  REQUIRE(rows.size() == 5);
  // p,sup_gap,l1_gap,min_gap,p_min_gap,ratio
  for (const auto& r : rows) {
    CHECK(r[1] >= r[3]);   // sup >= min
    CHECK(r[2] >= 0.0);    // L1 nonnegative
    CHECK(r[1] >= 0.0);    // envelope minorizes the potentials
  }
  CHECK(rows.back()[1] < rows.front()[1]);  // sup gap shrinks along the ladder
}

TEST_CASE("sequence runner reports onsets without asserting them") {
  fsys::path dir = fresh_dir("seq");
  ExperimentConfig cfg = parse_config(
      R"({"weight": {"kind": "constant", "value": 0}, "p_list": [10],
          "sequences": 3, "grid": {"n_r": 48, "n_theta": 48},
          "dictionary_degree": 2,
          "out_dir": ")" +
      dir.string() + R"("})");
  ExperimentReport rep = run_sequence(cfg);
  CHECK(rep.name == "sequence");
  REQUIRE(rep.files.size() == 3);
  CHECK(rep.measure("c_used") > 0.0);
  double frac = rep.measure("onset_le_half_fraction");
  CHECK(frac >= 0.0);
  CHECK(frac <= 1.0);
  REQUIRE(!rep.notes.empty());
  CHECK(rep.notes[0].find("reported, not asserted") != std::string::npos);
  auto rows = csv_columns(slurp(rep.files[0]));
  CHECK(rows.size() == 6);  // p in {5, 10} x 3 sequences
}

TEST_CASE("twisted runner needs the adjoint twist and localizes to a cap") {
  ExperimentConfig plain = parse_config(smoke(""));
  CHECK_THROWS_AS(run_twisted(plain), std::invalid_argument);

  fsys::path dir = fresh_dir("twisted");
  ExperimentConfig cfg = parse_config(
      R"({"weight": {"kind": "gauss_bump", "amplitude": 1.0, "sigma": 0.8},
          "p_list": [8, 12], "m": -2, "samples": 6,
          "grid": {"n_r": 48, "n_theta": 48}, "dictionary_degree": 2,
          "envelope": {"n_t": 801},
          "out_dir": ")" +
      dir.string() + R"("})");
  ExperimentReport rep = run_twisted(cfg);
  CHECK(rep.name == "twisted");
  REQUIRE(rep.files.size() == 4);
  CHECK(rep.measure("kernel_ratio_max") > 0.0);
  CHECK(rep.measure("kernel_ratio_max") >= rep.measure("kernel_ratio_median"));
  auto kernel = csv_columns(slurp(rep.files[1]));
  REQUIRE(kernel.size() == 2);
  // p,trace,l1_logB_global,l1_logB_U,ratio_global,ratio_U
  CHECK(kernel[0][1] == doctest::Approx(7.0).epsilon(1e-6));   // dim at p=8
  CHECK(kernel[1][1] == doctest::Approx(11.0).epsilon(1e-6));  // dim at p=12
  CHECK(kernel[0][3] <= kernel[0][2] + 1e-12);  // cap L1 <= global L1
}

TEST_CASE("runner input validation") {
  ExperimentConfig tiny = parse_config(smoke(R"("samples": 12)"));
  CHECK_THROWS_AS(run_deviation(tiny), std::invalid_argument);

  ExperimentConfig nop;
  CHECK_THROWS_AS(run_convergence(nop), std::invalid_argument);

  ExperimentConfig low = parse_config(
      R"({"weight": {"kind": "constant", "value": 0}, "p_list": [4],
          "grid": {"n_r": 48, "n_theta": 48}, "sequences": 2})");
  CHECK_THROWS_AS(run_sequence(low), std::invalid_argument);

  ExperimentReport rep;
  rep.measured.emplace_back("r2", 0.5);
  CHECK(rep.measure("r2") == 0.5);
  CHECK_THROWS_AS(rep.measure("absent"), std::out_of_range);
}

}  // TEST_SUITE
