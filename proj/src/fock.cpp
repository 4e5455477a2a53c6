#include "fiberlab/fock.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fiberlab {

std::uint64_t FockBasis::dimension_for(int num_modes, int n_max) {
    // sum_{n=0}^{n_max} C(num_modes + n - 1, n), computed incrementally
    long double total = 1.0L;  // vacuum
    long double sector = 1.0L;
    for (int n = 1; n <= n_max; ++n) {
        sector = sector * (num_modes + n - 1) / n;
        total += sector;
    }
    if (total > 1e17L) throw SizeError("Fock basis dimension overflows sane limits", UINT64_MAX);
    // redo exactly in integers now that we know it fits
    std::uint64_t tot = 1, sec = 1;
    for (int n = 1; n <= n_max; ++n) {
        sec = sec * static_cast<std::uint64_t>(num_modes + n - 1) / static_cast<std::uint64_t>(n);
        tot += sec;
    }
    return tot;
}

FockBasis::FockBasis(const MomentumGrid& grid, int n_max, std::uint64_t dimension_cap) {
    if (n_max < 0) throw std::invalid_argument("FockBasis: n_max must be non-negative");
    profile_ = grid.spec.profile;
    num_modes_ = grid.num_single_particle_states();
    n_max_ = n_max;
    dimension_cap_ = dimension_cap;

    sector_offset_.resize(n_max_ + 2);
    sector_size_.resize(n_max_ + 1);
    std::uint64_t off = 0, sec = 1;
    for (int n = 0; n <= n_max_; ++n) {
        if (n > 0) sec = sec * static_cast<std::uint64_t>(num_modes_ + n - 1) / static_cast<std::uint64_t>(n);
        sector_offset_[n] = off;
        sector_size_[n] = sec;
        off += sec;
    }
    sector_offset_[n_max_ + 1] = off;
    dimension_ = off;
    if (dimension_ != dimension_for(num_modes_, n_max_))
        throw std::logic_error("FockBasis: inconsistent dimension bookkeeping");
    if (dimension_ > dimension_cap_)
        throw SizeError("Fock basis dimension exceeds the configured cap", dimension_);

    // binomial table up to C(num_modes + n_max, n_max + 1)
    binom_cols_ = n_max_ + 2;
    const int rows = num_modes_ + n_max_ + 1;
    binom_.assign(static_cast<std::size_t>(rows) * binom_cols_, 0);
    for (int a = 0; a < rows; ++a) {
        binom_[static_cast<std::size_t>(a) * binom_cols_] = 1;
        for (int b = 1; b < binom_cols_ && b <= a; ++b) {
            const std::uint64_t up = binom_[static_cast<std::size_t>(a - 1) * binom_cols_ + b];
            const std::uint64_t upleft = binom_[static_cast<std::size_t>(a - 1) * binom_cols_ + b - 1];
            binom_[static_cast<std::size_t>(a) * binom_cols_ + b] = up + upleft;
        }
    }

    // single-particle data: mode 2*node + lambda
    const FormFactor ff{profile_};
    omega_.resize(num_modes_);
    k_.resize(num_modes_);
    eps_.resize(num_modes_);
    coupling_.resize(num_modes_);
    for (int node = 0; node < grid.num_nodes(); ++node) {
        const MomentumMode& mode = grid.modes[node];
        const double r = norm3(mode.k);
        const double f = form_factor_radial(ff, r);
        const double c = f * std::sqrt(mode.weight);
        for (int lambda = 0; lambda < 2; ++lambda) {
            const int m = 2 * node + lambda;
            omega_[m] = r;
            k_[m] = mode.k;
            eps_[m] = lambda == 0 ? mode.pair.eps_plus : mode.pair.eps_minus;
            coupling_[m] = c;
        }
    }
}

FockBasis build_fock_basis(const MomentumGrid& grid, int n_max, std::uint64_t dimension_cap) {
    return FockBasis(grid, n_max, dimension_cap);
}

std::uint64_t FockBasis::binom(int a, int b) const {
    if (b < 0 || a < 0 || b > a) return 0;
    if (b >= binom_cols_) throw std::logic_error("FockBasis: binomial column out of range");
    return binom_[static_cast<std::size_t>(a) * binom_cols_ + b];
}

int FockBasis::sector_of(std::uint64_t index) const {
    for (int n = 0; n <= n_max_; ++n)
        if (index < sector_offset_[n + 1]) return n;
    throw std::out_of_range("FockBasis: state index out of range");
}

std::uint64_t FockBasis::sector_rank(std::span<const int> m) const {
    const int n = static_cast<int>(m.size());
    const int universe = num_modes_ + n - 1;
    std::uint64_t rank = 0;
    int prev = -1;
    for (int i = 0; i < n; ++i) {
        const int b = m[i] + i;
        const int r = n - i;
        rank += binom(universe - 1 - prev, r) - binom(universe - b, r);
        prev = b;
    }
    return rank;
}

void FockBasis::sector_unrank(int n, std::uint64_t rank, std::vector<int>& out) const {
    out.resize(n);
    const int universe = num_modes_ + n - 1;
    int prev = -1;
    for (int i = 0; i < n; ++i) {
        int v = prev + 1;
        while (true) {
            const std::uint64_t cnt = binom(universe - 1 - v, n - 1 - i);
            if (rank < cnt) break;
            rank -= cnt;
            ++v;
        }
        out[i] = v - i;
        prev = v;
    }
}

void FockBasis::state_modes(std::uint64_t index, std::vector<int>& out) const {
    const int n = sector_of(index);
    sector_unrank(n, index - sector_offset_[n], out);
}

std::uint64_t FockBasis::index_of(std::span<const int> sorted_modes) const {
    const int n = static_cast<int>(sorted_modes.size());
    if (n > n_max_) throw std::out_of_range("FockBasis: state exceeds photon truncation");
    return sector_offset_[n] + sector_rank(sorted_modes);
}

void FockBasis::occupations(std::uint64_t index, std::vector<int>& out) const {
    std::vector<int> modes;
    state_modes(index, modes);
    out.assign(num_modes_, 0);
    for (int m : modes) ++out[m];
}

std::uint64_t FockBasis::index_of_occupations(std::span<const int> occ) const {
    std::vector<int> modes;
    for (int m = 0; m < static_cast<int>(occ.size()); ++m)
        for (int c = 0; c < occ[m]; ++c) modes.push_back(m);
    return index_of(modes);
}

Vec3 FockBasis::total_momentum(std::span<const int> sorted_modes) const {
    Vec3 total;
    for (int m : sorted_modes) total = total + k_[m];
    return total;
}

double FockBasis::star_weight(std::span<const int> sorted_modes) const {
    double hf = 0.0;
    for (int m : sorted_modes) hf += omega_[m];
    const Vec3 total = total_momentum(sorted_modes);
    return hf + dot3(total, total);
}

std::uint64_t FockBasis::pair_rank(int m1, int m2) const {
    const std::uint64_t m = m1;
    return m * static_cast<std::uint64_t>(num_modes_) - m * (m - 1) / 2 +
           static_cast<std::uint64_t>(m2 - m1);
}

// ---------------------------------------------------------------------------
// SparseOperator

SparseOperator SparseOperator::from_triplets(std::uint64_t dim, std::vector<Triplet>&& triplets) {
    // Stable sort keeps the emission order among equal (row, col) keys, so
    // duplicate folding sums in a scheduling-independent order.
    std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    SparseOperator op;
    op.dim_ = dim;
    op.row_ptr_.assign(dim + 1, 0);
    op.col_.reserve(triplets.size());
    op.val_.reserve(triplets.size());
    std::size_t i = 0;
    while (i < triplets.size()) {
        const std::uint32_t r = triplets[i].row;
        const std::uint32_t c = triplets[i].col;
        double v = triplets[i].value;
        std::size_t j = i + 1;
        while (j < triplets.size() && triplets[j].row == r && triplets[j].col == c) {
            v += triplets[j].value;
            ++j;
        }
        op.col_.push_back(c);
        op.val_.push_back(v);
        ++op.row_ptr_[r + 1];
        i = j;
    }
    for (std::uint64_t r = 0; r < dim; ++r) op.row_ptr_[r + 1] += op.row_ptr_[r];
    triplets.clear();
    triplets.shrink_to_fit();
    return op;
}

void SparseOperator::apply_serial(std::span<const double> x, std::span<double> y) const {
    for (std::uint64_t r = 0; r < dim_; ++r) {
        double acc = 0.0;
        for (std::uint64_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) acc += val_[p] * x[col_[p]];
        y[r] = acc;
    }
}

void SparseOperator::apply(std::span<const double> x, std::span<double> y) const {
    const std::int64_t n = static_cast<std::int64_t>(dim_);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
        double acc = 0.0;
        for (std::uint64_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) acc += val_[p] * x[col_[p]];
        y[r] = acc;
    }
}

SparseOperator SparseOperator::transpose() const {
    SparseOperator t;
    t.dim_ = dim_;
    t.row_ptr_.assign(dim_ + 1, 0);
    t.col_.resize(col_.size());
    t.val_.resize(val_.size());
    for (std::uint32_t c : col_) ++t.row_ptr_[c + 1];
    for (std::uint64_t r = 0; r < dim_; ++r) t.row_ptr_[r + 1] += t.row_ptr_[r];
    std::vector<std::uint64_t> cursor(t.row_ptr_.begin(), t.row_ptr_.end() - 1);
    for (std::uint64_t r = 0; r < dim_; ++r) {
        for (std::uint64_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
            const std::uint64_t q = cursor[col_[p]]++;
            t.col_[q] = static_cast<std::uint32_t>(r);
            t.val_[q] = val_[p];
        }
    }
    return t;
}

bool SparseOperator::equals_exact(const SparseOperator& other) const {
    return dim_ == other.dim_ && row_ptr_ == other.row_ptr_ && col_ == other.col_ &&
           val_ == other.val_;
}

double SparseOperator::max_abs_diff(const SparseOperator& other) const {
    if (dim_ != other.dim_) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (std::uint64_t r = 0; r < dim_; ++r) {
        std::uint64_t p = row_ptr_[r], q = other.row_ptr_[r];
        const std::uint64_t pe = row_ptr_[r + 1], qe = other.row_ptr_[r + 1];
        while (p < pe || q < qe) {
            if (p < pe && (q == qe || col_[p] < other.col_[q])) {
                worst = std::max(worst, std::abs(val_[p]));
                ++p;
            } else if (q < qe && (p == pe || other.col_[q] < col_[p])) {
                worst = std::max(worst, std::abs(other.val_[q]));
                ++q;
            } else {
                worst = std::max(worst, std::abs(val_[p] - other.val_[q]));
                ++p;
                ++q;
            }
        }
    }
    return worst;
}

double SparseOperator::coeff(std::uint64_t row, std::uint64_t col) const {
    for (std::uint64_t p = row_ptr_[row]; p < row_ptr_[row + 1]; ++p)
        if (col_[p] == col) return val_[p];
    return 0.0;
}

void SparseOperator::write_coordinate(std::ostream& os) const {
    char buf[96];
    for (std::uint64_t r = 0; r < dim_; ++r) {
        for (std::uint64_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
            std::snprintf(buf, sizeof(buf), "%llu %u %.17g\n",
                          static_cast<unsigned long long>(r), col_[p], val_[p]);
            os << buf;
        }
    }
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

using Triplet = SparseOperator::Triplet;

// Runs fn(state_index, sorted_modes, out_triplets) over all states, either
// serially or over contiguous state chunks in parallel.  Triplet buffers are
// concatenated in chunk order, so the emitted sequence is identical to the
// serial one and results are scheduling-independent.
template <class Fn>
std::vector<Triplet> emit_over_states(const FockBasis& basis, Exec exec, Fn&& fn) {
    const std::uint64_t dim = basis.dimension();
    int nchunks = 1;
#ifdef _OPENMP
    if (exec == Exec::Parallel) nchunks = std::max(1, omp_get_max_threads());
#endif
    if (dim < 1024) nchunks = 1;
    std::vector<std::vector<Triplet>> buffers(nchunks);

#pragma omp parallel for schedule(static, 1) if (nchunks > 1)
    for (int c = 0; c < nchunks; ++c) {
        const std::uint64_t begin = dim * c / nchunks;
        const std::uint64_t end = dim * (c + 1) / nchunks;
        std::vector<int> modes;
        for (std::uint64_t s = begin; s < end; ++s) {
            basis.state_modes(s, modes);
            fn(s, modes, buffers[c]);
        }
    }

    std::vector<Triplet> all;
    std::size_t total = 0;
    for (const auto& b : buffers) total += b.size();
    all.reserve(total);
    for (auto& b : buffers) {
        all.insert(all.end(), b.begin(), b.end());
        b.clear();
        b.shrink_to_fit();
    }
    return all;
}

int count_occupation(const std::vector<int>& modes, int m) {
    int c = 0;
    for (int v : modes) c += (v == m);
    return c;
}

void insert_sorted(std::vector<int>& modes, int m) {
    modes.insert(std::upper_bound(modes.begin(), modes.end(), m), m);
}

void erase_one(std::vector<int>& modes, int m) {
    modes.erase(std::find(modes.begin(), modes.end(), m));
}

}  // namespace

SparseOperator assemble_Hf(const FockBasis& basis) {
    auto trips = emit_over_states(basis, Exec::Parallel,
                                  [&](std::uint64_t s, const std::vector<int>& modes,
                                      std::vector<Triplet>& out) {
                                      double hf = 0.0;
                                      for (int m : modes) hf += basis.mode_omega(m);
                                      out.push_back({static_cast<std::uint32_t>(s),
                                                     static_cast<std::uint32_t>(s), hf});
                                  });
    return SparseOperator::from_triplets(basis.dimension(), std::move(trips));
}

SparseOperator assemble_Nf(const FockBasis& basis) {
    auto trips = emit_over_states(basis, Exec::Parallel,
                                  [&](std::uint64_t s, const std::vector<int>& modes,
                                      std::vector<Triplet>& out) {
                                      out.push_back({static_cast<std::uint32_t>(s),
                                                     static_cast<std::uint32_t>(s),
                                                     static_cast<double>(modes.size())});
                                  });
    return SparseOperator::from_triplets(basis.dimension(), std::move(trips));
}

std::array<SparseOperator, 3> assemble_Pf(const FockBasis& basis) {
    std::array<std::vector<Triplet>, 3> trips;
    for (int i = 0; i < 3; ++i) {
        trips[i] = emit_over_states(
            basis, Exec::Parallel,
            [&, i](std::uint64_t s, const std::vector<int>& modes, std::vector<Triplet>& out) {
                const Vec3 total = basis.total_momentum(modes);
                const double comp = i == 0 ? total.x : (i == 1 ? total.y : total.z);
                out.push_back(
                    {static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s), comp});
            });
    }
    return {SparseOperator::from_triplets(basis.dimension(), std::move(trips[0])),
            SparseOperator::from_triplets(basis.dimension(), std::move(trips[1])),
            SparseOperator::from_triplets(basis.dimension(), std::move(trips[2]))};
}

LadderOperators assemble_A(const FockBasis& basis) {
    LadderOperators ops;
    for (int i = 0; i < 3; ++i) {
        auto comp = [&](const Vec3& v) { return i == 0 ? v.x : (i == 1 ? v.y : v.z); };
        auto minus_trips = emit_over_states(
            basis, Exec::Parallel,
            [&](std::uint64_t s, const std::vector<int>& modes, std::vector<Triplet>& out) {
                std::vector<int> tmp;
                for (std::size_t j = 0; j < modes.size(); ++j) {
                    const int m = modes[j];
                    if (j > 0 && modes[j - 1] == m) continue;  // one entry per distinct mode
                    const int occ = count_occupation(modes, m);
                    tmp = modes;
                    erase_one(tmp, m);
                    const std::uint64_t t = basis.index_of(tmp);
                    const double val =
                        std::sqrt(static_cast<double>(occ)) * basis.mode_coupling(m) *
                        comp(basis.mode_eps(m));
                    out.push_back({static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(s),
                                   val});
                }
            });
        auto plus_trips = emit_over_states(
            basis, Exec::Parallel,
            [&](std::uint64_t s, const std::vector<int>& modes, std::vector<Triplet>& out) {
                if (static_cast<int>(modes.size()) >= basis.max_photons()) return;
                std::vector<int> tmp;
                for (int m = 0; m < basis.num_modes(); ++m) {
                    const int occ = count_occupation(modes, m);
                    tmp = modes;
                    insert_sorted(tmp, m);
                    const std::uint64_t t = basis.index_of(tmp);
                    const double val =
                        std::sqrt(static_cast<double>(occ + 1)) * basis.mode_coupling(m) *
                        comp(basis.mode_eps(m));
                    out.push_back({static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(s),
                                   val});
                }
            });
        ops.minus[i] = SparseOperator::from_triplets(basis.dimension(), std::move(minus_trips));
        ops.plus[i] = SparseOperator::from_triplets(basis.dimension(), std::move(plus_trips));
    }
    return ops;
}

namespace {

// <s + 1_m + 1_m2 | A+.A+ | s>, m <= m2, occupations taken in s.
double aplus_aplus_amp(const FockBasis& basis, const std::vector<int>& modes, int m, int m2) {
    const int occ_m = count_occupation(modes, m);
    if (m == m2) {
        const double root = std::sqrt(static_cast<double>((occ_m + 1) * (occ_m + 2)));
        return (basis.mode_coupling(m) * basis.mode_coupling(m)) *
               dot3(basis.mode_eps(m), basis.mode_eps(m)) * root;
    }
    const int occ_m2 = count_occupation(modes, m2);
    const double root = std::sqrt(static_cast<double>((occ_m + 1) * (occ_m2 + 1)));
    return 2.0 * (basis.mode_coupling(m) * basis.mode_coupling(m2)) *
           dot3(basis.mode_eps(m), basis.mode_eps(m2)) * root;
}

}  // namespace

SparseOperator assemble_AplusAplus(const FockBasis& basis) {
    auto trips = emit_over_states(
        basis, Exec::Parallel,
        [&](std::uint64_t s, const std::vector<int>& modes, std::vector<Triplet>& out) {
            if (static_cast<int>(modes.size()) + 2 > basis.max_photons()) return;
            std::vector<int> tmp;
            for (int m = 0; m < basis.num_modes(); ++m) {
                for (int m2 = m; m2 < basis.num_modes(); ++m2) {
                    tmp = modes;
                    insert_sorted(tmp, m);
                    insert_sorted(tmp, m2);
                    out.push_back({static_cast<std::uint32_t>(basis.index_of(tmp)),
                                   static_cast<std::uint32_t>(s),
                                   aplus_aplus_amp(basis, modes, m, m2)});
                }
            }
        });
    return SparseOperator::from_triplets(basis.dimension(), std::move(trips));
}

SparseOperator assemble_Pf_dot_A(const FockBasis& basis, LadderSign sign, MomentumSide side) {
    auto trips = emit_over_states(
        basis, Exec::Parallel,
        [&](std::uint64_t s, const std::vector<int>& modes, std::vector<Triplet>& out) {
            const Vec3 k_source = basis.total_momentum(modes);
            std::vector<int> tmp;
            if (sign == LadderSign::Plus) {
                if (static_cast<int>(modes.size()) >= basis.max_photons()) return;
                for (int m = 0; m < basis.num_modes(); ++m) {
                    const int occ = count_occupation(modes, m);
                    tmp = modes;
                    insert_sorted(tmp, m);
                    const Vec3 k_used =
                        side == MomentumSide::Left ? k_source + basis.mode_k(m) : k_source;
                    const double val = std::sqrt(static_cast<double>(occ + 1)) *
                                       basis.mode_coupling(m) * dot3(k_used, basis.mode_eps(m));
                    out.push_back({static_cast<std::uint32_t>(basis.index_of(tmp)),
                                   static_cast<std::uint32_t>(s), val});
                }
            } else {
                for (std::size_t j = 0; j < modes.size(); ++j) {
                    const int m = modes[j];
                    if (j > 0 && modes[j - 1] == m) continue;
                    const int occ = count_occupation(modes, m);
                    tmp = modes;
                    erase_one(tmp, m);
                    const Vec3 k_used =
                        side == MomentumSide::Left ? k_source - basis.mode_k(m) : k_source;
                    const double val = std::sqrt(static_cast<double>(occ)) *
                                       basis.mode_coupling(m) * dot3(k_used, basis.mode_eps(m));
                    out.push_back({static_cast<std::uint32_t>(basis.index_of(tmp)),
                                   static_cast<std::uint32_t>(s), val});
                }
            }
        });
    return SparseOperator::from_triplets(basis.dimension(), std::move(trips));
}

double transversality_residual(const FockBasis& basis) {
    // Reduced commutator entry magnitude: sqrt(occupation) * coupling * (k.eps).
    const double occ_bound = std::sqrt(static_cast<double>(std::max(1, basis.max_photons())));
    double worst = 0.0;
    for (int m = 0; m < basis.num_modes(); ++m) {
        const double d = dot3(basis.mode_k(m), basis.mode_eps(m));
        worst = std::max(worst, std::abs(occ_bound * basis.mode_coupling(m) * d));
    }
    return worst;
}

SparseOperator assemble_hamiltonian(const FockBasis& basis, double alpha, bool sign_flip,
                                    Exec exec) {
    if (alpha < 0.0) throw std::domain_error("assemble_hamiltonian: alpha must be non-negative");
    const double couple = sign_flip ? -1.0 : 1.0;
    const double cross_scale = couple * 2.0 * std::sqrt(alpha);
    const double pair_scale = alpha;

    auto trips = emit_over_states(
        basis, exec,
        [&](std::uint64_t s, const std::vector<int>& modes, std::vector<Triplet>& out) {
            const auto su = static_cast<std::uint32_t>(s);
            const int nph = static_cast<int>(modes.size());
            const Vec3 k_total = basis.total_momentum(modes);

            // diagonal: H_f + P_f^2 + 2 alpha sum_m n_m |c_m eps_m|^2
            double diag = dot3(k_total, k_total);
            for (int m : modes) diag += basis.mode_omega(m);
            for (std::size_t j = 0; j < modes.size(); ++j) {
                const int m = modes[j];
                if (j > 0 && modes[j - 1] == m) continue;
                const int occ = count_occupation(modes, m);
                diag += 2.0 * alpha * occ * (basis.mode_coupling(m) * basis.mode_coupling(m)) *
                        dot3(basis.mode_eps(m), basis.mode_eps(m));
            }
            out.push_back({su, su, diag});
            if (alpha == 0.0) return;

            std::vector<int> tmp;

            // 2 sqrt(alpha) P_f.(A+ + A-): emit the A+ direction and mirror.
            if (nph < basis.max_photons()) {
                for (int m = 0; m < basis.num_modes(); ++m) {
                    const int occ = count_occupation(modes, m);
                    tmp = modes;
                    insert_sorted(tmp, m);
                    const auto t = static_cast<std::uint32_t>(basis.index_of(tmp));
                    const double val = cross_scale * std::sqrt(static_cast<double>(occ + 1)) *
                                       basis.mode_coupling(m) *
                                       dot3(k_total + basis.mode_k(m), basis.mode_eps(m));
                    out.push_back({t, su, val});
                    out.push_back({su, t, val});
                }
            }

            // alpha (A+.A+ + A-.A-): emit the raising direction and mirror.
            if (nph + 2 <= basis.max_photons()) {
                for (int m = 0; m < basis.num_modes(); ++m) {
                    for (int m2 = m; m2 < basis.num_modes(); ++m2) {
                        tmp = modes;
                        insert_sorted(tmp, m);
                        insert_sorted(tmp, m2);
                        const auto t = static_cast<std::uint32_t>(basis.index_of(tmp));
                        const double val = pair_scale * aplus_aplus_amp(basis, modes, m, m2);
                        out.push_back({t, su, val});
                        out.push_back({su, t, val});
                    }
                }
            }

            // 2 alpha A+.A- off-diagonal: annihilate m, create m' != m.  Each
            // unordered connection is emitted once (t > s) with its mirror.
            for (std::size_t j = 0; j < modes.size(); ++j) {
                const int m = modes[j];
                if (j > 0 && modes[j - 1] == m) continue;
                const int occ_m = count_occupation(modes, m);
                for (int m2 = 0; m2 < basis.num_modes(); ++m2) {
                    if (m2 == m) continue;
                    tmp = modes;
                    erase_one(tmp, m);
                    insert_sorted(tmp, m2);
                    const std::uint64_t t = basis.index_of(tmp);
                    if (t < s) continue;
                    const int occ_m2 = count_occupation(modes, m2);
                    const double val = 2.0 * alpha *
                                       (basis.mode_coupling(m) * basis.mode_coupling(m2)) *
                                       dot3(basis.mode_eps(m), basis.mode_eps(m2)) *
                                       std::sqrt(static_cast<double>(occ_m * (occ_m2 + 1)));
                    const auto tu = static_cast<std::uint32_t>(t);
                    out.push_back({tu, su, val});
                    out.push_back({su, tu, val});
                }
            }
        });
    return SparseOperator::from_triplets(basis.dimension(), std::move(trips));
}

void hamiltonian_apply(const FockBasis& basis, double alpha, std::span<const double> x,
                       std::span<double> y, bool sign_flip, Exec exec) {
    if (alpha < 0.0) throw std::domain_error("hamiltonian_apply: alpha must be non-negative");
    const double couple = sign_flip ? -1.0 : 1.0;
    const double cross_scale = couple * 2.0 * std::sqrt(alpha);
    const std::int64_t dim = static_cast<std::int64_t>(basis.dimension());

    // Gather formulation: each target row is accumulated independently, so
    // the result is bit-identical for any thread count.
    auto row = [&](std::uint64_t t, std::vector<int>& modes, std::vector<int>& tmp,
                   std::vector<int>& distinct, std::vector<int>& occ_of) {
        basis.state_modes(t, modes);
        const int nph = static_cast<int>(modes.size());
        const Vec3 k_total = basis.total_momentum(modes);

        double diag = dot3(k_total, k_total);
        for (int m : modes) diag += basis.mode_omega(m);
        for (std::size_t j = 0; j < modes.size(); ++j) {
            const int m = modes[j];
            if (j > 0 && modes[j - 1] == m) continue;
            const int occ = count_occupation(modes, m);
            diag += 2.0 * alpha * occ * (basis.mode_coupling(m) * basis.mode_coupling(m)) *
                    dot3(basis.mode_eps(m), basis.mode_eps(m));
        }
        double acc = diag * x[t];
        if (alpha == 0.0) return acc;

        // cross term, source one photon below: t = s + 1_m
        for (std::size_t j = 0; j < modes.size(); ++j) {
            const int m = modes[j];
            if (j > 0 && modes[j - 1] == m) continue;
            const int occ = count_occupation(modes, m);
            tmp = modes;
            erase_one(tmp, m);
            const double val = cross_scale * std::sqrt(static_cast<double>(occ)) *
                               basis.mode_coupling(m) * dot3(k_total, basis.mode_eps(m));
            acc += val * x[basis.index_of(tmp)];
        }
        // cross term, source one photon above: s = t + 1_m
        if (nph < basis.max_photons()) {
            for (int m = 0; m < basis.num_modes(); ++m) {
                const int occ = count_occupation(modes, m);
                tmp = modes;
                insert_sorted(tmp, m);
                const double val = cross_scale * std::sqrt(static_cast<double>(occ + 1)) *
                                   basis.mode_coupling(m) *
                                   dot3(k_total + basis.mode_k(m), basis.mode_eps(m));
                acc += val * x[basis.index_of(tmp)];
            }
        }
        // pair term, source two photons below (A+.A+ reaching t): remove one
        // unordered pair (m <= m2) of occupied modes
        if (nph >= 2) {
            distinct.clear();
            occ_of.clear();
            for (std::size_t j = 0; j < modes.size(); ++j) {
                if (j > 0 && modes[j - 1] == modes[j]) {
                    ++occ_of.back();
                } else {
                    distinct.push_back(modes[j]);
                    occ_of.push_back(1);
                }
            }
            for (std::size_t a = 0; a < distinct.size(); ++a) {
                for (std::size_t b = a; b < distinct.size(); ++b) {
                    if (a == b && occ_of[a] < 2) continue;
                    const int m = distinct[a];
                    const int m2 = distinct[b];
                    tmp = modes;
                    erase_one(tmp, m);
                    erase_one(tmp, m2);
                    const double val = alpha * aplus_aplus_amp(basis, tmp, m, m2);
                    acc += val * x[basis.index_of(tmp)];
                }
            }
        }
        // pair term, source two photons above (A-.A- reaching t)
        if (nph + 2 <= basis.max_photons()) {
            for (int m = 0; m < basis.num_modes(); ++m) {
                for (int m2 = m; m2 < basis.num_modes(); ++m2) {
                    tmp = modes;
                    insert_sorted(tmp, m);
                    insert_sorted(tmp, m2);
                    const double val = alpha * aplus_aplus_amp(basis, modes, m, m2);
                    acc += val * x[basis.index_of(tmp)];
                }
            }
        }
        // 2 alpha A+.A-: sources within the sector; t = s - 1_m + 1_mu with
        // mu occupied in t, m occupied in s (m != mu).
        for (std::size_t j = 0; j < modes.size(); ++j) {
            const int mu = modes[j];
            if (j > 0 && modes[j - 1] == mu) continue;
            const int occ_mu = count_occupation(modes, mu);
            for (int m = 0; m < basis.num_modes(); ++m) {
                if (m == mu) continue;
                const int occ_m = count_occupation(modes, m);
                tmp = modes;
                erase_one(tmp, mu);
                insert_sorted(tmp, m);
                const double val = 2.0 * alpha *
                                   (basis.mode_coupling(m) * basis.mode_coupling(mu)) *
                                   dot3(basis.mode_eps(m), basis.mode_eps(mu)) *
                                   std::sqrt(static_cast<double>((occ_m + 1) * occ_mu));
                acc += val * x[basis.index_of(tmp)];
            }
        }
        return acc;
    };

#pragma omp parallel if (exec == Exec::Parallel)
    {
        std::vector<int> modes, tmp, distinct, occ_of;
#pragma omp for schedule(static)
        for (std::int64_t t = 0; t < dim; ++t)
            y[t] = row(static_cast<std::uint64_t>(t), modes, tmp, distinct, occ_of);
    }
}

// ---------------------------------------------------------------------------
// Dressing vectors and coefficients

namespace {

double sector_weight_check(double w) {
    if (w <= 0.0) throw std::runtime_error("grid degeneracy: vanishing H_f + P_f^2 off vacuum");
    return w;
}

}  // namespace

DiscretePhi phi_grid(const FockBasis& basis) {
    if (basis.max_photons() < 3)
        throw std::invalid_argument("phi_grid: needs a basis truncated at n_max >= 3");
    const int M = basis.num_modes();
    DiscretePhi phi;
    phi.phi1.assign(basis.dimension(), 0.0);
    phi.phi2.assign(basis.dimension(), 0.0);
    phi.phi3.assign(basis.dimension(), 0.0);

    const std::uint64_t off1 = basis.sector_offset(1);
    const std::uint64_t off2 = basis.sector_offset(2);
    const std::uint64_t off3 = basis.sector_offset(3);

    // phi2 = -(H_f+P_f^2)^-1 A+.A+ |0>
    std::vector<int> pair(2), one(1), triple(3);
    for (int m = 0; m < M; ++m) {
        for (int m2 = m; m2 < M; ++m2) {
            pair[0] = m;
            pair[1] = m2;
            const double w = sector_weight_check(basis.star_weight(pair));
            const double b = aplus_aplus_amp(basis, {}, m, m2);
            phi.phi2[off2 + basis.pair_rank(m, m2)] = -b / w;
        }
    }

    // phi1 = -(H_f+P_f^2)^-1 P_f.A- phi2
    std::vector<double> v1(M, 0.0);
    for (int m = 0; m < M; ++m) {
        for (int m2 = m; m2 < M; ++m2) {
            const double p2 = phi.phi2[off2 + basis.pair_rank(m, m2)];
            if (p2 == 0.0) continue;
            if (m == m2) {
                // annihilate one of the two: target |1_m>, P_f eigenvalue k_m
                v1[m] += p2 * std::sqrt(2.0) * basis.mode_coupling(m) *
                         dot3(basis.mode_k(m), basis.mode_eps(m));
            } else {
                v1[m2] += p2 * basis.mode_coupling(m) * dot3(basis.mode_k(m2), basis.mode_eps(m));
                v1[m] += p2 * basis.mode_coupling(m2) * dot3(basis.mode_k(m), basis.mode_eps(m2));
            }
        }
    }
    for (int m = 0; m < M; ++m) {
        one[0] = m;
        phi.phi1[off1 + m] = -v1[m] / sector_weight_check(basis.star_weight(one));
    }

    // phi3 = -(H_f+P_f^2)^-1 P_f.A+ phi2
    for (int m = 0; m < M; ++m) {
        for (int m2 = m; m2 < M; ++m2) {
            const double p2 = phi.phi2[off2 + basis.pair_rank(m, m2)];
            if (p2 == 0.0) continue;
            pair[0] = m;
            pair[1] = m2;
            for (int mc = 0; mc < M; ++mc) {
                triple = pair;
                insert_sorted(triple, mc);
                const int occ = count_occupation(pair, mc);
                const Vec3 k_total = basis.total_momentum(triple);
                const double amp = std::sqrt(static_cast<double>(occ + 1)) *
                                   basis.mode_coupling(mc) * dot3(k_total, basis.mode_eps(mc));
                phi.phi3[basis.index_of(triple)] += p2 * amp;
            }
        }
    }
    for (std::uint64_t r = 0; r < basis.sector_size(3); ++r) {
        if (phi.phi3[off3 + r] == 0.0) continue;
        basis.state_modes(off3 + r, triple);
        phi.phi3[off3 + r] = -phi.phi3[off3 + r] / sector_weight_check(basis.star_weight(triple));
    }
    return phi;
}

double star_inner(const FockBasis& basis, std::span<const double> v, std::span<const double> w) {
    if (v.size() != w.size() || v.size() != basis.dimension())
        throw std::invalid_argument("star_inner: dimension mismatch");
    double acc = 0.0;
    for_each_state(basis, [&](std::uint64_t s, std::span<const int> modes) {
        if (v[s] == 0.0 || w[s] == 0.0) return;
        acc += v[s] * w[s] * basis.star_weight(modes);
    });
    return acc;
}

double vec_dot(std::span<const double> v, std::span<const double> w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * w[i];
    return acc;
}

double vec_norm(std::span<const double> v) { return std::sqrt(vec_dot(v, v)); }

CoefficientSet grid_coefficients(const FockBasis& basis, Exec exec) {
    if (basis.max_photons() < 3)
        throw std::invalid_argument("grid_coefficients: needs n_max >= 3");
    const int M = basis.num_modes();
    CoefficientSet set;
    set.provenance = Provenance::GridOracle;

    // Sector-2 amplitudes of phi2, compact storage.
    const std::uint64_t n_pairs = basis.sector_size(2);
    std::vector<double> phi2(n_pairs, 0.0);
    std::vector<int> pair(2);
    double c2 = 0.0;
    for (int m = 0; m < M; ++m) {
        for (int m2 = m; m2 < M; ++m2) {
            pair[0] = m;
            pair[1] = m2;
            const double w = sector_weight_check(basis.star_weight(pair));
            const double b = aplus_aplus_amp(basis, {}, m, m2);
            const double p = -b / w;
            phi2[basis.pair_rank(m, m2)] = p;
            c2 += w * p * p;
        }
    }
    set.c2 = c2;

    // c_a = sum_i |A-_i phi2|^2 over the 1-photon sector.
    {
        std::vector<double> u(static_cast<std::size_t>(3) * M, 0.0);
        for (int m = 0; m < M; ++m) {
            for (int m2 = m; m2 < M; ++m2) {
                const double p2 = phi2[basis.pair_rank(m, m2)];
                if (p2 == 0.0) continue;
                if (m == m2) {
                    const double amp = std::sqrt(2.0) * basis.mode_coupling(m) * p2;
                    const Vec3& e = basis.mode_eps(m);
                    u[0 * M + m] += amp * e.x;
                    u[1 * M + m] += amp * e.y;
                    u[2 * M + m] += amp * e.z;
                } else {
                    const double amp_m = basis.mode_coupling(m) * p2;   // annihilate m -> |1_m2>
                    const double amp_m2 = basis.mode_coupling(m2) * p2; // annihilate m2 -> |1_m>
                    const Vec3& em = basis.mode_eps(m);
                    const Vec3& em2 = basis.mode_eps(m2);
                    u[0 * M + m2] += amp_m * em.x;
                    u[1 * M + m2] += amp_m * em.y;
                    u[2 * M + m2] += amp_m * em.z;
                    u[0 * M + m] += amp_m2 * em2.x;
                    u[1 * M + m] += amp_m2 * em2.y;
                    u[2 * M + m] += amp_m2 * em2.z;
                }
            }
        }
        double ca = 0.0;
        for (double x : u) ca += x * x;
        set.c_a = ca;
    }

    // c1 = |phi1|*^2 via the 1-photon vector.
    {
        std::vector<double> v1(M, 0.0);
        for (int m = 0; m < M; ++m) {
            for (int m2 = m; m2 < M; ++m2) {
                const double p2 = phi2[basis.pair_rank(m, m2)];
                if (p2 == 0.0) continue;
                if (m == m2) {
                    v1[m] += p2 * std::sqrt(2.0) * basis.mode_coupling(m) *
                             dot3(basis.mode_k(m), basis.mode_eps(m));
                } else {
                    v1[m2] +=
                        p2 * basis.mode_coupling(m) * dot3(basis.mode_k(m2), basis.mode_eps(m));
                    v1[m] +=
                        p2 * basis.mode_coupling(m2) * dot3(basis.mode_k(m), basis.mode_eps(m2));
                }
            }
        }
        double c1 = 0.0;
        std::vector<int> one(1);
        for (int m = 0; m < M; ++m) {
            one[0] = m;
            const double w = sector_weight_check(basis.star_weight(one));
            c1 += (v1[m] * v1[m]) / w;
        }
        set.c1 = c1;
    }

    // c3 = |phi3|*^2, streamed over the 3-photon sector; the sector is never
    // materialized.  Partial sums are indexed by the leading mode and reduced
    // in ascending order, so serial and parallel results are bit-identical.
    {
        std::vector<double> partial(M, 0.0);
#pragma omp parallel for schedule(dynamic, 1) if (exec == Exec::Parallel)
        for (int m1 = 0; m1 < M; ++m1) {
            double local = 0.0;
            for (int m2 = m1; m2 < M; ++m2) {
                const Vec3 k12 = basis.mode_k(m1) + basis.mode_k(m2);
                const double hf12 = basis.mode_omega(m1) + basis.mode_omega(m2);
                for (int m3 = m2; m3 < M; ++m3) {
                    const Vec3 k_total = k12 + basis.mode_k(m3);
                    const double w3 = hf12 + basis.mode_omega(m3) + dot3(k_total, k_total);
                    // distinct modes of the triple with multiplicities
                    double amp = 0.0;
                    const int t[3] = {m1, m2, m3};
                    for (int j = 0; j < 3; ++j) {
                        if (j > 0 && t[j] == t[j - 1]) continue;
                        const int mu = t[j];
                        int occ = 0;
                        for (int l = 0; l < 3; ++l) occ += (t[l] == mu);
                        // remaining pair after removing one mu
                        int ra, rb;
                        if (j == 0) {
                            ra = t[1];
                            rb = t[2];
                        } else if (j == 1) {
                            ra = t[0];
                            rb = t[2];
                        } else {
                            ra = t[0];
                            rb = t[1];
                        }
                        const double p2 = phi2[basis.pair_rank(ra, rb)];
                        if (p2 == 0.0) continue;
                        amp += std::sqrt(static_cast<double>(occ)) * basis.mode_coupling(mu) *
                               dot3(k_total, basis.mode_eps(mu)) * p2;
                    }
                    if (amp != 0.0) local += (amp * amp) / w3;
                }
            }
            partial[m1] = local;
        }
        double c3 = 0.0;
        for (int m1 = 0; m1 < M; ++m1) c3 += partial[m1];
        set.c3 = c3;
    }
    return set;
}

double vacuum_AminusAplus(const FockBasis& basis) {
    double acc = 0.0;
    for (int m = 0; m < basis.num_modes(); ++m) {
        acc += (basis.mode_coupling(m) * basis.mode_coupling(m)) *
               dot3(basis.mode_eps(m), basis.mode_eps(m));
    }
    return acc;
}

void write_basis_csv(std::ostream& os, const FockBasis& basis) {
    std::vector<int> occ;
    for_each_state(basis, [&](std::uint64_t s, std::span<const int> modes) {
        occ.assign(basis.num_modes(), 0);
        for (int m : modes) ++occ[m];
        for (int m = 0; m < basis.num_modes(); ++m) {
            os << occ[m];
            os << (m + 1 == basis.num_modes() ? '\n' : ',');
        }
        (void)s;
    });
}

}  // namespace fiberlab
