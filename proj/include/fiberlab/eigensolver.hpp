#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fiberlab/fock.hpp"

namespace fiberlab {

class ConvergenceError : public std::runtime_error {
  public:
    ConvergenceError(const std::string& what, double best_residual)
        : std::runtime_error(what), best_residual_(best_residual) {}
    double best_residual() const { return best_residual_; }

  private:
    double best_residual_;
};

struct SolverConfig {
    int krylov_dim = 60;
    int max_restarts = 200;
    double residual_tolerance = 1e-10;
    std::uint64_t seed = 1234;
    // start vector = vacuum + start_perturbation * seeded Gaussian noise
    double start_perturbation = 1e-3;
};

struct EigenResult {
    double energy = 0.0;
    std::vector<double> vector;  // unit norm
    double residual = 0.0;       // |H v - E v| / |v|
    int restarts = 0;
};

// Lowest eigenpair by restarted Lanczos with full reorthogonalization.
// Deterministic given (matrix, config); the matrix-vector product may run in
// parallel but is bit-reproducible.  Throws ConvergenceError carrying the
// best residual when max_restarts is exhausted.
EigenResult ground_state(const SparseOperator& hamiltonian, const SolverConfig& config,
                         Exec exec = Exec::Parallel);

// Cyclic Jacobi on a dense symmetric matrix (row-major, n x n).  Returns all
// eigenvalues ascending; fills eigenvectors (columns, row-major) if non-null.
// Intended for small dense cross-checks, n up to a few hundred.
std::vector<double> dense_symmetric_eigenvalues(std::vector<double> matrix, int n,
                                                std::vector<double>* eigenvectors = nullptr);

// Densifies a sparse operator (guarded against large dimensions).
std::vector<double> to_dense(const SparseOperator& op, std::uint64_t max_dim = 2048);

// Ground-state observables and the decomposition along the dressing vectors.
struct GroundStateReport {
    double alpha = 0.0;
    double energy = 0.0;
    std::vector<double> vector;  // normalized so the vacuum component is 1
    double photon_expectation = 0.0;
    std::array<double, 3> eta = {0.0, 0.0, 0.0};  // eta1, eta2, eta3
    double r_norm = 0.0;
    double r_star_norm = 0.0;
    double residual = 0.0;
};

// Rescales the vector to vacuum component 1, projects onto the dressing
// vectors in the star inner product,
//   eta2 = <phi2, psi>_* / (alpha |phi2|*^2),
//   eta1 = <phi1, psi>_* / (2 alpha^{3/2} |phi1|*^2),  eta3 analogously,
// and reports the remainder R = psi - vacuum - 2 eta1 a^{3/2} phi1
// - eta2 a phi2 - 2 eta3 a^{3/2} phi3 in both norms.  At alpha = 0 the eta
// are defined as zero.  Throws when the vacuum component vanishes.
GroundStateReport observables(const FockBasis& basis, const DiscretePhi& phi, double alpha,
                              std::span<const double> vec, double energy, double residual);

// Vector dump: "index,amplitude" per nonzero entry.
void write_vector_csv(std::ostream& os, std::span<const double> vec);

}  // namespace fiberlab
