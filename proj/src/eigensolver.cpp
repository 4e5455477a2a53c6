#include "fiberlab/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "fiberlab/rng.hpp"

namespace fiberlab {

namespace {

void axpy(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void scale(double a, std::span<double> x) {
    for (double& v : x) v *= a;
}

}  // namespace

EigenResult ground_state(const SparseOperator& hamiltonian, const SolverConfig& config,
                         Exec exec) {
    const std::uint64_t dim = hamiltonian.dim();
    if (dim == 0) throw std::invalid_argument("ground_state: empty operator");
    if (config.residual_tolerance <= 0.0)
        throw std::invalid_argument("ground_state: residual tolerance must be positive");
    const int krylov = std::max(2, config.krylov_dim);

    auto apply = [&](std::span<const double> x, std::span<double> y) {
        if (exec == Exec::Parallel)
            hamiltonian.apply(x, y);
        else
            hamiltonian.apply_serial(x, y);
    };

    // start vector: vacuum plus a small seeded perturbation
    std::vector<double> v0(dim, 0.0);
    v0[0] = 1.0;
    {
        BlockRng rng(config.seed, 0);
        for (std::uint64_t i = 0; i < dim; ++i) v0[i] += config.start_perturbation * rng.normal();
        scale(1.0 / vec_norm(v0), v0);
    }

    double best_energy = 0.0, best_residual = std::numeric_limits<double>::infinity();
    std::vector<double> w(dim), hx(dim);

    for (int restart = 0; restart < std::max(1, config.max_restarts); ++restart) {
        std::vector<std::vector<double>> V;
        V.push_back(v0);
        std::vector<double> diag, offdiag;

        for (int j = 0; j < krylov; ++j) {
            apply(V[j], w);
            if (j > 0) axpy(-offdiag[j - 1], V[j - 1], w);
            const double a = vec_dot(w, V[j]);
            diag.push_back(a);
            axpy(-a, V[j], w);
            // full reorthogonalization, two passes
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& u : V) axpy(-vec_dot(w, u), u, w);
            const double b = vec_norm(w);
            if (b < 1e-13 * std::max(1.0, std::abs(a)) ||
                V.size() == static_cast<std::size_t>(dim) || j + 1 == krylov)
                break;
            offdiag.push_back(b);
            std::vector<double> next = w;
            scale(1.0 / b, next);
            V.push_back(std::move(next));
        }

        // lowest eigenpair of the tridiagonal projection
        const int m = static_cast<int>(diag.size());
        std::vector<double> t(static_cast<std::size_t>(m) * m, 0.0);
        for (int i = 0; i < m; ++i) {
            t[static_cast<std::size_t>(i) * m + i] = diag[i];
            if (i + 1 < m) {
                t[static_cast<std::size_t>(i) * m + i + 1] = offdiag[i];
                t[static_cast<std::size_t>(i + 1) * m + i] = offdiag[i];
            }
        }
        std::vector<double> vecs;
        const std::vector<double> vals = dense_symmetric_eigenvalues(std::move(t), m, &vecs);
        int lowest = 0;
        for (int i = 1; i < m; ++i)
            if (vals[i] < vals[lowest]) lowest = i;
        const double theta = vals[lowest];

        std::vector<double> x(dim, 0.0);
        for (int i = 0; i < m; ++i) axpy(vecs[static_cast<std::size_t>(i) * m + lowest], V[i], x);
        scale(1.0 / vec_norm(x), x);

        apply(x, hx);
        axpy(-theta, x, hx);
        const double residual = vec_norm(hx);
        if (residual < best_residual) {
            best_residual = residual;
            best_energy = theta;
        }
        if (residual <= config.residual_tolerance) {
            return {theta, std::move(x), residual, restart + 1};
        }
        v0 = std::move(x);
    }
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "ground_state: no convergence after %d restarts (best residual %.3e, energy %.12g)",
                  config.max_restarts, best_residual, best_energy);
    throw ConvergenceError(msg, best_residual);
}

std::vector<double> dense_symmetric_eigenvalues(std::vector<double> a, int n,
                                                std::vector<double>* eigenvectors) {
    std::vector<double> v;
    if (eigenvectors) {
        v.assign(static_cast<std::size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;
    }
    auto at = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * n + c]; };

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
        if (off < 1e-26 * std::max(1.0, static_cast<double>(n))) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double app = at(p, p), aqq = at(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int i = 0; i < n; ++i) {
                    const double aip = at(i, p), aiq = at(i, q);
                    at(i, p) = c * aip - s * aiq;
                    at(i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    const double api = at(p, i), aqi = at(q, i);
                    at(p, i) = c * api - s * aqi;
                    at(q, i) = s * api + c * aqi;
                }
                if (eigenvectors) {
                    for (int i = 0; i < n; ++i) {
                        const double vip = v[static_cast<std::size_t>(i) * n + p];
                        const double viq = v[static_cast<std::size_t>(i) * n + q];
                        v[static_cast<std::size_t>(i) * n + p] = c * vip - s * viq;
                        v[static_cast<std::size_t>(i) * n + q] = s * vip + c * viq;
                    }
                }
            }
        }
    }

    std::vector<double> vals(n);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) {
        vals[i] = at(i, i);
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](int x, int y) { return vals[x] < vals[y]; });
    std::vector<double> sorted(n);
    for (int i = 0; i < n; ++i) sorted[i] = vals[order[i]];
    if (eigenvectors) {
        eigenvectors->assign(static_cast<std::size_t>(n) * n, 0.0);
        for (int c = 0; c < n; ++c)
            for (int r = 0; r < n; ++r)
                (*eigenvectors)[static_cast<std::size_t>(r) * n + c] =
                    v[static_cast<std::size_t>(r) * n + order[c]];
    }
    return sorted;
}

std::vector<double> to_dense(const SparseOperator& op, std::uint64_t max_dim) {
    if (op.dim() > max_dim)
        throw SizeError("to_dense: operator too large for dense conversion", op.dim());
    const std::uint64_t n = op.dim();
    std::vector<double> dense(n * n, 0.0);
    for (std::uint64_t r = 0; r < n; ++r)
        for (std::uint64_t p = op.row_ptr()[r]; p < op.row_ptr()[r + 1]; ++p)
            dense[r * n + op.col()[p]] = op.values()[p];
    return dense;
}

GroundStateReport observables(const FockBasis& basis, const DiscretePhi& phi, double alpha,
                              std::span<const double> vec, double energy, double residual) {
    if (vec.size() != basis.dimension())
        throw std::invalid_argument("observables: vector dimension mismatch");
    const double vac = vec[0];
    if (std::abs(vac) < 1e-12 * vec_norm(vec))
        throw std::runtime_error(
            "observables: vanishing vacuum component, cannot normalize by <vacuum, psi> = 1");

    GroundStateReport report;
    report.alpha = alpha;
    report.energy = energy;
    report.residual = residual;
    report.vector.assign(vec.begin(), vec.end());
    scale(1.0 / vac, report.vector);
    const std::vector<double>& psi = report.vector;

    // photon number expectation (normalization-independent ratio)
    double num = 0.0, den = 0.0;
    for_each_state(basis, [&](std::uint64_t s, std::span<const int> modes) {
        const double a = psi[s];
        if (a == 0.0) return;
        num += static_cast<double>(modes.size()) * a * a;
        den += a * a;
    });
    report.photon_expectation = num / den;

    const double c1 = star_inner(basis, phi.phi1, phi.phi1);
    const double c2 = star_inner(basis, phi.phi2, phi.phi2);
    const double c3 = star_inner(basis, phi.phi3, phi.phi3);
    const double a32 = std::pow(alpha, 1.5);
    if (alpha > 0.0) {
        const double p1 = star_inner(basis, phi.phi1, psi);
        const double p2 = star_inner(basis, phi.phi2, psi);
        const double p3 = star_inner(basis, phi.phi3, psi);
        report.eta[0] = c1 > 0.0 ? p1 / (2.0 * a32 * c1) : 0.0;
        report.eta[1] = c2 > 0.0 ? p2 / (alpha * c2) : 0.0;
        report.eta[2] = c3 > 0.0 ? p3 / (2.0 * a32 * c3) : 0.0;
    }

    std::vector<double> rem = psi;
    rem[0] -= 1.0;
    axpy(-2.0 * report.eta[0] * a32, phi.phi1, rem);
    axpy(-report.eta[1] * alpha, phi.phi2, rem);
    axpy(-2.0 * report.eta[2] * a32, phi.phi3, rem);
    report.r_norm = vec_norm(rem);
    report.r_star_norm = std::sqrt(std::max(0.0, star_inner(basis, rem, rem)));
    return report;
}

void write_vector_csv(std::ostream& os, std::span<const double> vec) {
    os << "index,amplitude\n";
    char buf[64];
    for (std::size_t i = 0; i < vec.size(); ++i) {
        if (vec[i] == 0.0) continue;
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, vec[i]);
        os << buf;
    }
}

}  // namespace fiberlab
