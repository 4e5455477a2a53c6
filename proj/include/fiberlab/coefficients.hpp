#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include "fiberlab/exec.hpp"
#include "fiberlab/field_model.hpp"

namespace fiberlab {

// Thrown when the importance density has zero mass (kappa identically zero).
class DegenerateMeasureError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Provenance { Quadrature, MonteCarlo, GridOracle };

// The four coefficients of the ground-state energy expansion
//   E(alpha) = -alpha^2 c2 + alpha^3 (2 c_a - 4 c3 - 4 c1) + O(alpha^4),
// with c2 = |phi2|*^2, c_a = |A- phi2|^2, c3 = |phi3|*^2, c1 = |phi1|*^2.
struct CoefficientSet {
    double c2 = 0.0;
    double c_a = 0.0;
    double c3 = 0.0;
    double c1 = 0.0;
    std::array<double, 4> error = {0.0, 0.0, 0.0, 0.0};  // order: c2, c_a, c3, c1
    Provenance provenance = Provenance::GridOracle;

    double get(int i) const { return i == 0 ? c2 : (i == 1 ? c_a : (i == 2 ? c3 : c1)); }
};

// alpha >= 0 required.
double energy_expansion(const CoefficientSet& coeffs, double alpha);

// Normalization of the radial importance density, Z = int_0^inf r kappa(r)^2 dr.
// Exact for the polynomial cutoff pieces (segmented Gauss-Legendre).
double radial_mass(const CutoffProfile& profile);

// Scalar commutator sum_i [A-_i, A+_i] = 2 int f(k)^2 dk = (2/pi) int r kappa^2 dr.
double commutator_constant(const FormFactor& ff);

struct QuadratureEstimate {
    double value = 0.0;
    double error = 0.0;  // two-resolution difference
    int resolution = 0;
};

// Deterministic reduced path for c2.  After the polarization sum and the
// angular reduction,
//   c2 = (1/pi^2) int dr dr' du  r kappa^2(r) r' kappa^2(r') (1 + u^2)
//                               / (r + r' + r^2 + r'^2 + 2 r r' u),
// integrated by nested Gauss-Legendre with `resolution` nodes per axis
// (radial axes split at the cutoff plateau).  The error field is the
// difference against the half-resolution value.
QuadratureEstimate c2_quadrature(const FormFactor& ff, int resolution,
                                 Exec exec = Exec::Parallel);

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t n_samples = 0;
    std::uint64_t seed = 0;
};

enum class WhichCoefficient { C2, CA, C3, C1 };

// Optional re-draw of the polarization pair by a deterministic pseudo-random
// rotation about k (a pure function of the wavevector bits and the seed).
// All estimators depend on polarizations only through the transverse
// projector, so estimates are invariant under the twist; the validation
// suite exercises exactly that.
struct PolarizationTwist {
    bool active = false;
    std::uint64_t seed = 0;
};

// Importance-sampled full-dimensional estimator (6-dim for C2; 9-dim for CA,
// C1, C3 including the permutation sum of the three-photon kernel).  Radial
// importance density proportional to r kappa(r)^2 cancels the form-factor
// singularity; directions are uniform.  Deterministic function of
// (seed, n_samples), independent of thread count.
MCEstimate coefficient_mc(WhichCoefficient which, const FormFactor& ff, std::int64_t n_samples,
                          std::uint64_t seed, Exec exec = Exec::Parallel,
                          PolarizationTwist twist = {});

// All four coefficients at a shared seed (sub-seeded per coefficient).
CoefficientSet mc_coefficient_set(const FormFactor& ff, std::int64_t n_samples,
                                  std::uint64_t seed, Exec exec = Exec::Parallel,
                                  PolarizationTwist twist = {});

}  // namespace fiberlab
