#pragma once
// Config-driven experiment runners. Each runner validates its inputs, builds
// the shared artifacts (grid, envelope, section spaces), writes CSV tables
// with a provenance header block plus one summary.json, and reports measured
// claim constants. Identical configs produce byte-identical CSV bodies
// regardless of the thread count.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eqz/discrepancy.hpp"
#include "eqz/envelope.hpp"
#include "eqz/weights.hpp"

namespace eqz {

struct EnvelopeParams {
  std::string method = "auto";  // "radial" | "lcp" | "auto"
  int n_t = 4001;
  int n_lat = 181;
  int n_lon = 360;
  double tol = 1e-8;
  long max_iter = 200000;
  double relaxation = 0.0;  // 0 picks the model-problem optimum
  double residual_target = 8e-7;
};

struct ExperimentConfig {
  Weight weight;
  std::vector<int> p_list;
  int m = 0;
  int k = 1;
  long samples = 200;
  std::uint64_t seed = 1;
  int grid_n_r = 400;
  int grid_n_theta = 400;
  int dictionary_degree = 8;
  std::optional<CapRegion> region;
  EnvelopeParams envelope;
  std::vector<double> lambda_factors = {1, 2, 4, 8};
  long sequences = 50;
  std::string out_dir = "out";
  std::string cache_dir;

  std::string config_json;  // normalized form, all defaults materialized
  std::uint64_t config_hash() const;
};

// Strict parse of one JSON document: unknown keys anywhere are rejected, all
// values are type- and range-checked, and `config_json` is set to the
// normalized dump that the config hash is taken over. Throws
// std::invalid_argument with the offending key in the message.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct ExperimentReport {
  std::string name;
  bool claims_pass = true;
  std::vector<std::string> notes;  // one line per claim or warning
  std::vector<std::string> files;  // written artifacts, summary.json last
  std::vector<std::pair<std::string, double>> measured;

  // Measured constant by name; throws std::out_of_range when absent.
  double measure(const std::string& key) const;
};

ExperimentReport run_convergence(const ExperimentConfig& cfg, int threads = 1);
ExperimentReport run_equidistribution(const ExperimentConfig& cfg,
                                      int threads = 1);
ExperimentReport run_deviation(const ExperimentConfig& cfg, int threads = 1);
ExperimentReport run_sequence(const ExperimentConfig& cfg, int threads = 1);
ExperimentReport run_twisted(const ExperimentConfig& cfg, int threads = 1);

// CLI helpers: envelope table dump, Bergman diagnostics, and zero samples.
ExperimentReport run_envelope_dump(const ExperimentConfig& cfg,
                                   int threads = 1);
ExperimentReport run_bergman_table(const ExperimentConfig& cfg,
                                   int threads = 1);
ExperimentReport run_sample_zeros(const ExperimentConfig& cfg,
                                  int threads = 1);

// Shared statistics, exposed for the acceptance suite.

// sup, L1 and min of phi_p - phi_eq over the grid (restricted to the cap if
// one is given; L1 then integrates the indicator).
struct GapStats {
  double sup = 0;
  double l1 = 0;
  double min = 0;
};
GapStats phi_gap_stats(const SectionSpace& s, const EnvelopeResult& env,
                       const QuadratureGrid& grid,
                       const CapRegion* cap = nullptr);

// Integral of |log B_p| over the grid (cap-restricted when given).
double log_bergman_l1(const SectionSpace& s, const QuadratureGrid& grid,
                      const CapRegion* cap = nullptr);

// Ratios r_p = e_p * p / log p over the entries with p >= 5 and the
// max <= 2 * median claim.
struct RatioClaim {
  std::vector<double> ratio;
  double max = 0;
  double median = 0;
  bool pass_2x = false;
};
RatioClaim ratio_claim(const std::vector<double>& p,
                       const std::vector<double>& err);

// Fitted constant for p * min(phi_p - phi_eq) >= -C: C = max over p of
// c_p = max(0, -p * min_gap). Stable when C = 0 or the positive c_p spread
// (C - min positive) / C stays <= 0.5.
struct LowerBoundFit {
  double c = 0;
  double variation = 0;
  bool stable = true;
};
LowerBoundFit fit_lower_bound(const std::vector<double>& p,
                              const std::vector<double>& min_gap);

// The envelope a config asks for; throws when the method does not apply or
// the solve does not converge (diagnostics in the message).
EnvelopeResult make_envelope(const ExperimentConfig& cfg, int threads = 1);

}  // namespace eqz
