#pragma once
// Random L2 holomorphic sections: sigma_FS sampling by Gaussian
// projectivization, zero extraction via the balanced companion matrix, and
// empirical zero statistics.

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "eqz/bergman.hpp"
#include "eqz/sphere.hpp"

namespace eqz {

struct RandomSection {
  int p = 0, m = 0;
  std::uint64_t seed = 0;
  std::uint32_t index = 0;   // sample index within the seed's stream
  std::uint32_t factor = 0;  // tuple slot for multi-projective draws
  Eigen::VectorXcd a;        // coefficients in the orthonormal basis
};

// a_j iid CN(0,1) from the counter stream keyed by (seed; p, index, factor,
// j). Projectivizing a Gaussian vector is exactly sigma_FS-distributed, so no
// normalization is needed; downstream consumers must be scale-invariant.
RandomSection sample_section(const SectionSpace& space, std::uint64_t seed,
                             std::uint32_t index = 0);

// k independent draws sharing (seed, index), factor = 0..k-1. Requires
// k >= 1; k = 1 returns exactly { sample_section(space, seed, index) }.
std::vector<RandomSection> sample_tuple(const SectionSpace& space, int k,
                                        std::uint64_t seed,
                                        std::uint32_t index = 0);

struct ZeroEntry {
  SpherePoint point;
  int multiplicity = 1;
};

// Zero divisor of a section. Total multiplicity is p + m exactly: companion
// roots plus the trimmed runs at the poles always account for the full degree.
struct ZeroSet {
  int p = 0, m = 0;
  std::vector<ZeroEntry> entries;
  long total_multiplicity() const;
};

// Converts a to monomial coefficients, trims coefficient runs below
// 1e-13 * max|coeff| at both ends (roots at 0 resp. infinity with the run
// length as multiplicity), and diagonalizes the balanced companion matrix of
// the remaining polynomial. Roots with |z| > 1 get one Newton step on the
// reversed polynomial in the w-chart. Exactly scale-invariant for power-of-two
// multiples of a; throws std::invalid_argument on the zero section.
ZeroSet zeros(const RandomSection& s, const SectionSpace& space);

// <(1/p)[Div(s)], u> = (1/p) sum over zeros of mult * u(root).
double empirical_pairing(const ZeroSet& zs, const TestFunction& u, int p);

// Multi-projective constant c_{d,k} = ((dk)!/(d!)^k)^{-1/(dk)}, d, k >= 1.
// Computed through lgamma, so c_{d,1} = 1 exactly and large d never overflows.
double mp_constant(long d, long k);

// Appends CSV rows "sample,chart,re,im,mult" (no header) for every zero.
void write_zero_rows(std::ostream& out, const ZeroSet& zs, long sample_id);

}  // namespace eqz
