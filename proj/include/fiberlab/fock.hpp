#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fiberlab/coefficients.hpp"
#include "fiberlab/exec.hpp"
#include "fiberlab/field_model.hpp"

namespace fiberlab {

class SizeError : public std::runtime_error {
  public:
    SizeError(const std::string& what, std::uint64_t computed_dimension)
        : std::runtime_error(what), computed_dimension_(computed_dimension) {}
    std::uint64_t computed_dimension() const { return computed_dimension_; }

  private:
    std::uint64_t computed_dimension_;
};

// Symmetric occupation-number basis over the single-particle modes of a
// momentum grid (two polarizations per node), truncated at n_max total
// photons.  States are graded by photon number, vacuum first, and ordered
// lexicographically within a grade as non-decreasing mode tuples.  Indexing
// is combinatorial (rank/unrank against a binomial table), so no state list
// is materialized and bases with tens of millions of states are cheap to
// hold; the dimension cap guards the dense vectors and operators that are
// built on top.
class FockBasis {
  public:
    FockBasis(const MomentumGrid& grid, int n_max, std::uint64_t dimension_cap = 1'000'000);

    int num_modes() const { return num_modes_; }
    int max_photons() const { return n_max_; }
    std::uint64_t dimension() const { return dimension_; }
    std::uint64_t dimension_cap() const { return dimension_cap_; }

    std::uint64_t sector_offset(int n) const { return sector_offset_[n]; }
    std::uint64_t sector_size(int n) const { return sector_size_[n]; }
    int sector_of(std::uint64_t index) const;

    // Single-particle mode data; mode = 2 * node + lambda.
    double mode_omega(int m) const { return omega_[m]; }
    const Vec3& mode_k(int m) const { return k_[m]; }
    const Vec3& mode_eps(int m) const { return eps_[m]; }
    // f(k) * sqrt(weight); the polarization direction is kept separate so
    // that amplitudes can be evaluated as scalar * dot3(vector, eps).
    double mode_coupling(int m) const { return coupling_[m]; }

    const CutoffProfile& profile() const { return profile_; }

    // State decode/encode.  A state is its sorted (non-decreasing) tuple of
    // occupied modes, one entry per photon; the vacuum is the empty tuple.
    void state_modes(std::uint64_t index, std::vector<int>& out) const;
    std::uint64_t index_of(std::span<const int> sorted_modes) const;

    // Dense occupation vector of length num_modes() (exports, tests).
    void occupations(std::uint64_t index, std::vector<int>& out) const;
    std::uint64_t index_of_occupations(std::span<const int> occ) const;

    // Total photon momentum of a state; exact and order-independent because
    // grid wavevectors are dyadically snapped.
    Vec3 total_momentum(std::span<const int> sorted_modes) const;
    // H_f + P_f^2 eigenvalue: sum |k_i| + |sum k_i|^2.
    double star_weight(std::span<const int> sorted_modes) const;

    // Rank of a 2-photon state (m1 <= m2) within its sector; closed form
    // consistent with the general lexicographic rank.
    std::uint64_t pair_rank(int m1, int m2) const;

    static std::uint64_t dimension_for(int num_modes, int n_max);

  private:
    std::uint64_t sector_rank(std::span<const int> sorted_modes) const;
    void sector_unrank(int n, std::uint64_t rank, std::vector<int>& out) const;
    std::uint64_t binom(int a, int b) const;

    CutoffProfile profile_;
    int num_modes_ = 0;
    int n_max_ = 0;
    std::uint64_t dimension_ = 0;
    std::uint64_t dimension_cap_ = 0;
    std::vector<std::uint64_t> sector_offset_;
    std::vector<std::uint64_t> sector_size_;
    std::vector<std::uint64_t> binom_;  // row-major (num_modes_+n_max_) x (n_max_+2)
    int binom_cols_ = 0;

    std::vector<double> omega_;
    std::vector<Vec3> k_;
    std::vector<Vec3> eps_;
    std::vector<double> coupling_;
};

FockBasis build_fock_basis(const MomentumGrid& grid, int n_max,
                           std::uint64_t dimension_cap = 1'000'000);

namespace detail {
// Advances a non-decreasing mode tuple to its lexicographic successor within
// the sector; returns false when the sector is exhausted.
inline bool next_multiset(std::vector<int>& modes, int num_modes) {
    const int n = static_cast<int>(modes.size());
    for (int j = n - 1; j >= 0; --j) {
        if (modes[j] < num_modes - 1) {
            const int v = modes[j] + 1;
            for (int l = j; l < n; ++l) modes[l] = v;
            return true;
        }
    }
    return false;
}
}  // namespace detail

// Visits every basis state in index order without unranking:
// fn(index, sorted_modes).
template <class Fn>
void for_each_state(const FockBasis& basis, Fn&& fn) {
    std::vector<int> modes;
    fn(std::uint64_t{0}, std::span<const int>(modes));
    for (int n = 1; n <= basis.max_photons(); ++n) {
        modes.assign(n, 0);
        std::uint64_t index = basis.sector_offset(n);
        while (true) {
            fn(index, std::span<const int>(modes));
            ++index;
            if (!detail::next_multiset(modes, basis.num_modes())) break;
        }
    }
}

// Real sparse matrix in CSR form with canonically sorted entries.  Assembly
// order is scheduling-independent: triplets are emitted in state order and
// stably sorted before compression.
class SparseOperator {
  public:
    struct Triplet {
        std::uint32_t row;
        std::uint32_t col;
        double value;
    };

    SparseOperator() = default;
    static SparseOperator from_triplets(std::uint64_t dim, std::vector<Triplet>&& triplets);

    std::uint64_t dim() const { return dim_; }
    std::uint64_t nnz() const { return col_.size(); }

    void apply(std::span<const double> x, std::span<double> y) const;         // OpenMP over rows
    void apply_serial(std::span<const double> x, std::span<double> y) const;  // reference

    SparseOperator transpose() const;
    bool equals_exact(const SparseOperator& other) const;
    double max_abs_diff(const SparseOperator& other) const;
    double coeff(std::uint64_t row, std::uint64_t col) const;

    // Coordinate text export: "row col value" per line.
    void write_coordinate(std::ostream& os) const;

    const std::vector<std::uint64_t>& row_ptr() const { return row_ptr_; }
    const std::vector<std::uint32_t>& col() const { return col_; }
    const std::vector<double>& values() const { return val_; }

  private:
    std::uint64_t dim_ = 0;
    std::vector<std::uint64_t> row_ptr_;
    std::vector<std::uint32_t> col_;
    std::vector<double> val_;
};

// Diagonal operators.
SparseOperator assemble_Hf(const FockBasis& basis);
SparseOperator assemble_Nf(const FockBasis& basis);
std::array<SparseOperator, 3> assemble_Pf(const FockBasis& basis);

// Photon annihilation/creation parts of the vector potential at the origin.
// minus[i] lowers the photon number by one, plus[i] = adjoint(minus[i]).
struct LadderOperators {
    std::array<SparseOperator, 3> minus;
    std::array<SparseOperator, 3> plus;
};
LadderOperators assemble_A(const FockBasis& basis);

// sum_i A+_i A+_i (raises photon number by two).
SparseOperator assemble_AplusAplus(const FockBasis& basis);

// Dot-contracted products of the photon momentum with a ladder operator,
// used by the transversality checks and the quadratic-form split.
enum class LadderSign { Minus, Plus };
enum class MomentumSide { Left, Right };  // Left: P_f after A;  Right: P_f before A
SparseOperator assemble_Pf_dot_A(const FockBasis& basis, LadderSign sign, MomentumSide side);

// Largest magnitude of the reduced commutator entries
// sqrt(occupation) * coupling * dot3(k_m, eps_m); exactly 0.0 when the grid
// polarizations are exactly transverse.
double transversality_residual(const FockBasis& basis);

// Fiber Hamiltonian at total momentum zero:
//   H(alpha) = H_f + P_f^2 + 2 sqrt(alpha) P_f . (A- + A+)
//              + alpha (A+.A+ + A-.A- + 2 A+.A-)
// Normal ordering is realized by the A+.A- ordering, so the vacuum diagonal
// entry is exactly zero.  sign_flip = true negates the coupling (A -> -A),
// which is unitarily equivalent via photon parity.
SparseOperator assemble_hamiltonian(const FockBasis& basis, double alpha, bool sign_flip = false,
                                    Exec exec = Exec::Parallel);

// Matrix-free application of the same operator; kept as an independent
// implementation path and used where the assembled matrix would not fit.
void hamiltonian_apply(const FockBasis& basis, double alpha, std::span<const double> x,
                       std::span<double> y, bool sign_flip = false, Exec exec = Exec::Parallel);

// First-, second- and third-order dressing vectors, built by exact diagonal
// resolvent solves of (H_f + P_f^2) restricted off the vacuum:
//   phi2 = -(H_f+P_f^2)^-1 A+.A+ |0>
//   phi3 = -(H_f+P_f^2)^-1 P_f.A+ phi2
//   phi1 = -(H_f+P_f^2)^-1 P_f.A- phi2
// Full-dimension vectors; phi_j is supported on the j-photon sector.
struct DiscretePhi {
    std::vector<double> phi1;
    std::vector<double> phi2;
    std::vector<double> phi3;
};
DiscretePhi phi_grid(const FockBasis& basis);

// <v, (H_f + P_f^2) w>; bilinear, symmetric, positive semi-definite with the
// vacuum as kernel.
double star_inner(const FockBasis& basis, std::span<const double> v, std::span<const double> w);

// Plain Euclidean inner product / norm helpers on basis vectors.
double vec_dot(std::span<const double> v, std::span<const double> w);
double vec_norm(std::span<const double> v);

// Evaluates the coefficients on the grid by sector streaming.  Memory use is
// O(sector-2 size): the 3-photon sector is never materialized, so refinement
// grids whose total dimension exceeds any reasonable cap are still cheap.
CoefficientSet grid_coefficients(const FockBasis& basis, Exec exec = Exec::Parallel);

// <0| A-.A+ |0> on the grid = sum over modes of coupling^2; converges to the
// commutator constant of the continuum model as the grid refines.
double vacuum_AminusAplus(const FockBasis& basis);

// Basis export: one line per state, comma-separated occupation numbers.
void write_basis_csv(std::ostream& os, const FockBasis& basis);

}  // namespace fiberlab
