#include "fiberlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace fiberlab {

namespace {

std::vector<double> trial_vector(const FockBasis& basis, const DiscretePhi& phi, double alpha) {
    const double a32 = 2.0 * std::pow(alpha, 1.5);
    std::vector<double> psi(basis.dimension(), 0.0);
    psi[0] = 1.0;
    for (std::uint64_t i = 0; i < basis.dimension(); ++i) {
        psi[i] += a32 * phi.phi1[i];
        psi[i] += alpha * phi.phi2[i];
        psi[i] += a32 * phi.phi3[i];
    }
    return psi;
}

}  // namespace

double trial_energy(const FockBasis& basis, const DiscretePhi& phi,
                    const SparseOperator& hamiltonian, double alpha) {
    const std::vector<double> psi = trial_vector(basis, phi, alpha);
    std::vector<double> hpsi(psi.size());
    hamiltonian.apply(psi, hpsi);
    return vec_dot(psi, hpsi) / vec_dot(psi, psi);
}

double trial_energy(const FockBasis& basis, double alpha, Exec exec) {
    const DiscretePhi phi = phi_grid(basis);
    const SparseOperator h = assemble_hamiltonian(basis, alpha, false, exec);
    return trial_energy(basis, phi, h, alpha);
}

SweepResult alpha_sweep(const FockBasis& basis, std::vector<double> alphas,
                        const SolverConfig& solver, Exec exec) {
    for (double a : alphas)
        if (a <= 0.0 || a > 0.5)
            throw std::invalid_argument("alpha_sweep: alphas must lie in (0, 0.5]");
    std::sort(alphas.begin(), alphas.end());

    SweepResult sweep;
    sweep.n_max = basis.max_photons();
    sweep.grid_coeffs = grid_coefficients(basis, exec);
    const DiscretePhi phi = phi_grid(basis);

    for (double alpha : alphas) {
        SweepPoint point;
        point.alpha = alpha;
        point.energy_perturbative = energy_expansion(sweep.grid_coeffs, alpha);
        try {
            const SparseOperator h = assemble_hamiltonian(basis, alpha, false, exec);
            const EigenResult eig = ground_state(h, solver, exec);
            const GroundStateReport rep =
                observables(basis, phi, alpha, eig.vector, eig.energy, eig.residual);
            point.energy_numeric = rep.energy;
            point.photon_expectation = rep.photon_expectation;
            point.eta1 = rep.eta[0];
            point.eta2 = rep.eta[1];
            point.eta3 = rep.eta[2];
            point.r_norm = rep.r_norm;
            point.r_star_norm = rep.r_star_norm;
            point.solver_residual = rep.residual;
            point.ok = true;
        } catch (const std::exception& ex) {
            point.ok = false;
            point.error = ex.what();
        }
        sweep.points.push_back(std::move(point));
    }
    return sweep;
}

FitReport log_log_fit(const std::vector<std::pair<double, double>>& points) {
    std::vector<std::pair<double, double>> usable;
    for (const auto& [a, r] : points)
        if (r > 1e-13) usable.emplace_back(std::log(a), std::log(r));
    if (usable.size() < 3)
        throw std::runtime_error("log_log_fit: fewer than 3 points above the floating floor");

    const double n = static_cast<double>(usable.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : usable) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double denom = n * sxx - sx * sx;
    FitReport fit;
    fit.points_used = static_cast<int>(usable.size());
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0.0;
    const double mean_y = sy / n;
    double ss_tot = 0.0;
    for (const auto& [x, y] : usable) {
        const double pred = fit.intercept + fit.slope * x;
        ss_res += (y - pred) * (y - pred);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

FitReport residual_slope(const SweepResult& sweep) {
    std::vector<std::pair<double, double>> points;
    for (const auto& p : sweep.points)
        if (p.ok) points.emplace_back(p.alpha, std::abs(p.energy_numeric - p.energy_perturbative));
    return log_log_fit(points);
}

std::vector<double> photon_bound_ratios(const SweepResult& sweep) {
    std::vector<double> ratios;
    for (const auto& p : sweep.points)
        if (p.ok) ratios.push_back(p.photon_expectation / (p.alpha * p.alpha));
    return ratios;
}

EtaScalingReport eta_scaling_check(const SweepPoint& low, const SweepPoint& high) {
    if (!(low.alpha > 0.0) || !(high.alpha > low.alpha))
        throw std::invalid_argument("eta_scaling_check: need two points with increasing alpha");
    const double la = std::log(high.alpha / low.alpha);
    auto order = [&](double vlo, double vhi) -> std::optional<double> {
        if (std::abs(vlo) < 1e-13 || std::abs(vhi) < 1e-13) return std::nullopt;
        return std::log(std::abs(vhi) / std::abs(vlo)) / la;
    };
    EtaScalingReport report;
    report.eta1_order = order(low.eta1 - 1.0, high.eta1 - 1.0);
    report.eta2_order = order(low.eta2 - 1.0, high.eta2 - 1.0);
    report.eta3_order = order(low.eta3 - 1.0, high.eta3 - 1.0);
    report.r_star_order = order(low.r_star_norm, high.r_star_norm);
    report.r_order = order(low.r_norm, high.r_norm);
    return report;
}

QuadraticFormSplit quadratic_form_split(const FockBasis& basis, double alpha,
                                        std::span<const double> psi, double energy) {
    QuadraticFormSplit split;
    split.star_term = star_inner(basis, psi, psi);

    std::vector<double> tmp(psi.size());
    const SparseOperator pfa = assemble_Pf_dot_A(basis, LadderSign::Minus, MomentumSide::Left);
    pfa.apply(psi, tmp);
    split.cross_term = 4.0 * std::sqrt(alpha) * vec_dot(psi, tmp);

    const SparseOperator amm = assemble_AplusAplus(basis).transpose();  // A-.A-
    amm.apply(psi, tmp);
    split.pair_term = 2.0 * alpha * vec_dot(psi, tmp);

    const LadderOperators ladder = assemble_A(basis);
    double asq = 0.0;
    for (int i = 0; i < 3; ++i) {
        ladder.minus[i].apply(psi, tmp);
        asq += vec_dot(tmp, tmp);
    }
    split.number_term = 2.0 * alpha * asq;

    split.total = split.star_term + split.cross_term + split.pair_term + split.number_term;
    split.energy_times_norm = energy * vec_dot(psi, psi);
    return split;
}

std::vector<CoefficientSet> grid_refinement_coefficients(const std::vector<GridSpec>& specs,
                                                         int n_max, std::uint64_t dimension_cap,
                                                         Exec exec) {
    std::vector<CoefficientSet> levels;
    for (const GridSpec& spec : specs) {
        const MomentumGrid grid = build_grid(spec);
        const FockBasis basis(grid, n_max, dimension_cap);
        CoefficientSet set = grid_coefficients(basis, exec);
        if (!levels.empty()) {
            const CoefficientSet& prev = levels.back();
            set.error = {std::abs(set.c2 - prev.c2), std::abs(set.c_a - prev.c_a),
                         std::abs(set.c3 - prev.c3), std::abs(set.c1 - prev.c1)};
        }
        levels.push_back(std::move(set));
    }
    return levels;
}

void write_sweep_csv(std::ostream& os, const SweepResult& sweep, std::uint64_t config_hash) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "# config_hash=%016llx\n",
                  static_cast<unsigned long long>(config_hash));
    os << buf;
    os << "alpha,e_num,e_pert,residual,nf_expect,eta1,eta2,eta3,r_norm,r_star_norm,status\n";
    for (const auto& p : sweep.points) {
        if (p.ok) {
            std::snprintf(buf, sizeof(buf),
                          "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,ok\n",
                          p.alpha, p.energy_numeric, p.energy_perturbative,
                          std::abs(p.energy_numeric - p.energy_perturbative),
                          p.photon_expectation, p.eta1, p.eta2, p.eta3, p.r_norm, p.r_star_norm);
        } else {
            std::snprintf(buf, sizeof(buf), "%.17g,,,,,,,,,,failed:%s\n", p.alpha,
                          p.error.c_str());
        }
        os << buf;
    }
}

}  // namespace fiberlab
