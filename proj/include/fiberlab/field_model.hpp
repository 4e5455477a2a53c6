#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fiberlab/vec3.hpp"

namespace fiberlab {

// Ultraviolet cutoff profile kappa(r) on the photon wavenumber.
//
// Invariants: kappa = 1 on [0, plateau_radius], kappa = 0 on
// [support_radius, inf), monotone non-increasing in between, 0 <= kappa <= 1.
// The smoothstep kind ramps down with the C^1 cubic 1 - s^2 (3 - 2s); the
// sharp kind is the indicator of [0, support_radius) (right-continuous at the
// jump).
struct CutoffProfile {
    enum class Kind { Smoothstep, Sharp };

    Kind kind = Kind::Smoothstep;
    double plateau_radius = 1.0;
    double support_radius = 2.0;

    static CutoffProfile smoothstep(double plateau = 1.0, double support = 2.0) {
        return {Kind::Smoothstep, plateau, support};
    }
    static CutoffProfile sharp(double radius) { return {Kind::Sharp, radius, radius}; }
};

// kappa(r); throws std::domain_error for r < 0.
double kappa_eval(const CutoffProfile& profile, double r);

// Coupling function f(k) = kappa(|k|) / (2 pi |k|^{1/2}).  The |k|^{-1/2}
// singularity at the origin is integrable; callers must keep quadrature and
// sampling nodes away from k = 0 instead of evaluating there.
struct FormFactor {
    CutoffProfile profile;
};

// f(k); throws std::domain_error when |k| = 0.
double form_factor(const FormFactor& ff, const Vec3& k);
double form_factor_radial(const FormFactor& ff, double r);

// Two transverse polarization directions for a wavevector k: unit length,
// mutually orthogonal, both orthogonal to k, right-handed with k-hat.
struct PolarizationPair {
    Vec3 eps_plus;
    Vec3 eps_minus;
};

// Deterministic construction: eps_plus along k-hat x z-hat, eps_minus along
// k-hat x eps_plus, with the x-hat/y-hat pair as fallback when k is within
// 1e-12 of the z axis.  Components are nudged by ulps after normalization so
// that dot3(k, eps) evaluates to exactly 0.0; operator identities that hinge
// on transversality then hold exactly in floating point.
PolarizationPair polarization_basis(const Vec3& k);

// Trace of the product of the two transverse projectors,
// sum_{lm} (eps_l(k) . eps_m(k'))^2 = 1 + (khat . khat')^2.
// Throws std::domain_error unless both arguments are unit vectors (1e-10).
double polarization_sum(const Vec3& khat, const Vec3& khat2);

// One quadrature node of the momentum-space discretization.
struct MomentumMode {
    Vec3 k;          // wavevector, |k| > 0
    double weight;   // quadrature weight, volume units of d^3k
    PolarizationPair pair;
};

struct GridSpec {
    int n_radial = 5;
    int n_polar = 3;
    int n_azimuthal = 2;
    CutoffProfile profile;

    bool operator==(const GridSpec&) const = default;
};

// Product rule over the ball |k| <= support_radius: Gauss-Legendre in radius
// on (0, support], Gauss-Legendre in cos(theta), uniform in azimuth.  The
// node ordering is deterministic given the spec.  Wavevector components are
// snapped to the dyadic grid 2^-48 so that sums of up to a few of them add
// exactly in double precision.
struct MomentumGrid {
    GridSpec spec;
    std::vector<MomentumMode> modes;

    int num_nodes() const { return static_cast<int>(modes.size()); }
    // Single-particle states: two polarizations per node.
    int num_single_particle_states() const { return 2 * num_nodes(); }
    double total_weight() const;
};

MomentumGrid build_grid(const GridSpec& spec);

// Assembles a grid from explicit nodes (tests, fault-injection hooks).
MomentumGrid make_grid_from_modes(const CutoffProfile& profile, std::vector<MomentumMode> modes);

// Rotates every node (and its polarization pair) about the z axis; the grid
// is exactly invariant under rotation by 2 pi / n_azimuthal.
MomentumGrid rotate_grid_about_z(const MomentumGrid& grid, double angle);

// Tilts every eps_plus out of the transverse plane.  Exists only so that the
// validation suite can demonstrate that the transversality check fails when
// polarizations are broken.
MomentumGrid break_transversality_for_test(const MomentumGrid& grid, double tilt);

// CSV export: header line, then kx,ky,kz,weight per node.
void write_grid_csv(std::ostream& os, const MomentumGrid& grid);

// Config-block round trip for the spec fields (n_radial, n_polar,
// n_azimuthal, cutoff_kind, cutoff radii).
std::string grid_spec_to_config(const GridSpec& spec);

}  // namespace fiberlab
