#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fiberlab/eigensolver.hpp"

namespace fiberlab {

struct SweepPoint {
    double alpha = 0.0;
    double energy_numeric = 0.0;
    double energy_perturbative = 0.0;  // from the same basis's grid coefficients
    double photon_expectation = 0.0;
    double eta1 = 0.0, eta2 = 0.0, eta3 = 0.0;
    double r_norm = 0.0, r_star_norm = 0.0;
    double solver_residual = 0.0;
    bool ok = false;
    std::string error;
};

struct SweepResult {
    GridSpec spec;
    int n_max = 0;
    CoefficientSet grid_coeffs;  // same-basis coefficients behind energy_perturbative
    std::vector<SweepPoint> points;
};

struct FitReport {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int points_used = 0;
};

// Rayleigh quotient of the variational trial state
//   psi = vacuum + 2 a^{3/2} phi1 + a phi2 + 2 a^{3/2} phi3
// in the given Hamiltonian (which must be assembled at the same alpha).
double trial_energy(const FockBasis& basis, const DiscretePhi& phi,
                    const SparseOperator& hamiltonian, double alpha);
// Convenience overload assembling H(alpha) internally.
double trial_energy(const FockBasis& basis, double alpha, Exec exec = Exec::Parallel);

// One eigensolve plus observables per alpha; perturbative energies come from
// grid_coefficients of the same basis so that the residual isolates the
// alpha-order rather than discretization error.  Per-alpha solver failures
// are recorded in the point and the sweep continues.
SweepResult alpha_sweep(const FockBasis& basis, std::vector<double> alphas,
                        const SolverConfig& solver, Exec exec = Exec::Parallel);

// Least-squares fit of log |E_num - E_pert| against log alpha.  Points with
// residual below 1e-13 are dropped; fewer than 3 usable points is an error.
FitReport residual_slope(const SweepResult& sweep);
// Same fit for caller-supplied (alpha, residual) pairs.
FitReport log_log_fit(const std::vector<std::pair<double, double>>& points);

// <N_f>/alpha^2 per successful sweep point.
std::vector<double> photon_bound_ratios(const SweepResult& sweep);

// Empirical scaling orders between two sweep points (alpha ratio is
// typically 4): order(v) = log(|v_hi| / |v_lo|) / log(a_hi / a_lo) for
// v in {eta_j - 1, |R|_*, |R|}.  Values below the floating floor are
// reported as absent.
struct EtaScalingReport {
    std::optional<double> eta1_order;
    std::optional<double> eta2_order;
    std::optional<double> eta3_order;
    std::optional<double> r_star_order;
    std::optional<double> r_order;
};
EtaScalingReport eta_scaling_check(const SweepPoint& low, const SweepPoint& high);

// Quadratic-form split of <psi, H psi> into the four structural terms
// (free part, cross term, pair creation/annihilation, photon-number term);
// their sum must reconstruct E |psi|^2.
struct QuadraticFormSplit {
    double star_term = 0.0;      // <psi, (H_f + P_f^2) psi>
    double cross_term = 0.0;     // 4 sqrt(a) <psi, P_f.A- psi>
    double pair_term = 0.0;      // 2 a <psi, A-.A- psi>
    double number_term = 0.0;    // 2 a |A- psi|^2
    double total = 0.0;
    double energy_times_norm = 0.0;
};
QuadraticFormSplit quadratic_form_split(const FockBasis& basis, double alpha,
                                        std::span<const double> psi, double energy);

// Grid-oracle coefficients over a refinement sequence; error fields carry the
// successive differences.
std::vector<CoefficientSet> grid_refinement_coefficients(const std::vector<GridSpec>& specs,
                                                         int n_max, std::uint64_t dimension_cap,
                                                         Exec exec = Exec::Parallel);

// CSV: one row per alpha with the documented column set.
void write_sweep_csv(std::ostream& os, const SweepResult& sweep, std::uint64_t config_hash);

}  // namespace fiberlab
