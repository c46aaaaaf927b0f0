#pragma once
// Dictionary seminorms (finite lower bounds for the C2-dual norm), current
// masses, convergence-rate fits, and cap-localized dictionary variants.

#include <string>
#include <utility>
#include <vector>

#include "eqz/bergman.hpp"
#include "eqz/envelope.hpp"
#include "eqz/random_sections.hpp"
#include "eqz/sphere.hpp"

namespace eqz {

enum class CurrentTag { empirical, fs_current, equilibrium, fubini_study };

struct PairingVector {
  CurrentTag tag = CurrentTag::empirical;
  std::string dictionary_id;
  std::string region = "global";
  std::vector<double> values;
};

// max_i |a_i - b_i| over a shared dictionary. Throws std::invalid_argument
// when the dictionary ids, regions, or lengths disagree. Since every
// dictionary element has certified C2 bound <= 1, this lower-bounds the
// C2-dual seminorm over the region.
double dict_seminorm(const PairingVector& a, const PairingVector& b);

// Pairings of the four current types against each dictionary element.
PairingVector pair_empirical(const ZeroSet& zs,
                             const std::vector<TestFunction>& dict,
                             const std::string& dict_id,
                             const std::string& region, int p);
PairingVector pair_fs_current(const SectionSpace& s,
                              const std::vector<TestFunction>& dict,
                              const std::string& dict_id,
                              const std::string& region,
                              const QuadratureGrid& grid);
PairingVector pair_equilibrium(const EnvelopeResult& env,
                               const std::vector<TestFunction>& dict,
                               const std::string& dict_id,
                               const std::string& region,
                               const QuadratureGrid& grid);
PairingVector pair_fubini_study(const std::vector<TestFunction>& dict,
                                const std::string& dict_id,
                                const std::string& region,
                                const QuadratureGrid& grid);

// Mass = pairing with the constant function 1.
double mass(const ZeroSet& zs);                                    // (p+m)/p
double mass(const EnvelopeResult& env, const QuadratureGrid& g);   // ~1
double mass(const SectionSpace& s, const QuadratureGrid& g);       // (p+m)/p

struct RateFit {
  std::vector<double> p;
  std::vector<double> error;
  std::vector<double> ratio;  // r_p = e_p * p / log p
  double c_max = 0;           // fitted envelope constant: max r_p
  double c_median = 0;        // median r_p
  double loglog_slope = 0;    // diagnostic slope of log e_p vs log p
};

// Fits e_p <= C log p / p. Requires at least 5 points, all with p >= 5 so
// log p > 1; throws std::invalid_argument otherwise.
RateFit rate_fit(const std::vector<std::pair<double, double>>& seq);

// Spherical cap, used as the region U for localized statements.
struct CapRegion {
  SpherePoint center;
  double radius = 1.0;  // geodesic radius, in (0, pi)
  bool contains(const SpherePoint& x) const;
  std::string id() const;
};

// Each element multiplied by the quartic cutoff (1 - (d/radius)^2)^2 of the
// geodesic distance d to the cap center, zero outside the cap, then divided
// by an analytic product-rule C2 bound so the certified bound stays <= 1.
// The cutoff is C^{1,1}; its Laplacian jumps across the cap boundary, which
// the pairing integrals tolerate.
std::vector<TestFunction> localized_dictionary(
    const std::vector<TestFunction>& dict, const CapRegion& cap);

}  // namespace eqz
