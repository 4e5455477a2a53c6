#include "fiberlab/coefficients.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <vector>

#include "fiberlab/quadrature.hpp"
#include "fiberlab/rng.hpp"

namespace fiberlab {

namespace {

constexpr double kPi = std::numbers::pi;

// Radial integration segments on which kappa^2 is smooth (polynomial for the
// built-in kinds).
std::vector<std::pair<double, double>> radial_segments(const CutoffProfile& profile) {
    std::vector<std::pair<double, double>> segs;
    if (profile.support_radius <= 0.0) return segs;
    if (profile.kind == CutoffProfile::Kind::Sharp) {
        segs.emplace_back(0.0, profile.support_radius);
    } else {
        segs.emplace_back(0.0, profile.plateau_radius);
        if (profile.support_radius > profile.plateau_radius)
            segs.emplace_back(profile.plateau_radius, profile.support_radius);
    }
    return segs;
}

}  // namespace

double energy_expansion(const CoefficientSet& coeffs, double alpha) {
    if (alpha < 0.0) throw std::domain_error("energy_expansion: alpha must be non-negative");
    return -alpha * alpha * coeffs.c2 +
           alpha * alpha * alpha * (2.0 * coeffs.c_a - 4.0 * coeffs.c3 - 4.0 * coeffs.c1);
}

double radial_mass(const CutoffProfile& profile) {
    double total = 0.0;
    for (const auto& [a, b] : radial_segments(profile)) {
        const GaussRule rule = gauss_legendre_on(24, a, b);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double r = rule.nodes[i];
            const double kap = kappa_eval(profile, r);
            total += rule.weights[i] * r * kap * kap;
        }
    }
    return total;
}

double commutator_constant(const FormFactor& ff) { return (2.0 / kPi) * radial_mass(ff.profile); }

namespace {

// Nodes and weights of the reduced c2 integral; the radial weight absorbs
// r kappa^2(r).
struct ReducedAxes {
    std::vector<double> r, wr;
    std::vector<double> u, wu;
};

ReducedAxes make_axes(const FormFactor& ff, int resolution) {
    ReducedAxes ax;
    for (const auto& [a, b] : radial_segments(ff.profile)) {
        const GaussRule rule = gauss_legendre_on(resolution, a, b);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double r = rule.nodes[i];
            const double kap = kappa_eval(ff.profile, r);
            ax.r.push_back(r);
            ax.wr.push_back(rule.weights[i] * r * kap * kap);
        }
    }
    const GaussRule urule = gauss_legendre(resolution);
    for (std::size_t l = 0; l < urule.nodes.size(); ++l) {
        const double u = urule.nodes[l];
        ax.u.push_back(u);
        ax.wu.push_back(urule.weights[l] * (1.0 + u * u));
    }
    return ax;
}

double c2_reduced_value(const FormFactor& ff, int resolution, Exec exec) {
    const ReducedAxes ax = make_axes(ff, resolution);
    const int nr = static_cast<int>(ax.r.size());
    const int nu = static_cast<int>(ax.u.size());
    if (nr == 0) return 0.0;

    std::vector<double> partial(nr, 0.0);
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (int i = 0; i < nr; ++i) {
        const double r = ax.r[i];
        double acc = 0.0;
        for (int j = 0; j < nr; ++j) {
            const double rp = ax.r[j];
            const double wrr = ax.wr[i] * ax.wr[j];
            const double base = r + rp + r * r + rp * rp;
            const double cross = 2.0 * r * rp;
            for (int l = 0; l < nu; ++l) {
                acc += wrr * ax.wu[l] / (base + cross * ax.u[l]);
            }
        }
        partial[i] = acc;
    }
    double total = 0.0;
    for (int i = 0; i < nr; ++i) total += partial[i];
    return total / (kPi * kPi);
}

}  // namespace

QuadratureEstimate c2_quadrature(const FormFactor& ff, int resolution, Exec exec) {
    if (resolution < 8)
        throw std::invalid_argument("c2_quadrature: need at least 8 nodes per axis");
    const double value = c2_reduced_value(ff, resolution, exec);
    const double coarse = c2_reduced_value(ff, std::max(4, resolution / 2), exec);
    return {value, std::abs(value - coarse), resolution};
}

// ---------------------------------------------------------------------------
// Monte Carlo estimators

namespace {

double hash01(const Vec3& k, std::uint64_t seed) {
    std::uint64_t h = splitmix64(seed ^ 0x5bf03635d1f4d9c3ULL);
    h = splitmix64(h ^ std::bit_cast<std::uint64_t>(k.x));
    h = splitmix64(h ^ std::bit_cast<std::uint64_t>(k.y));
    h = splitmix64(h ^ std::bit_cast<std::uint64_t>(k.z));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

PolarizationPair bases_for(const Vec3& k, const PolarizationTwist& twist) {
    PolarizationPair pair = polarization_basis(k);
    if (!twist.active) return pair;
    const double angle = 2.0 * kPi * hash01(k, twist.seed);
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * pair.eps_plus + s * pair.eps_minus, -s * pair.eps_plus + c * pair.eps_minus};
}

struct Sampler {
    const CutoffProfile* profile;
    double support;
    bool sharp;

    Vec3 draw(BlockRng& rng) const {
        double r = 0.0;
        if (sharp) {
            r = support * std::sqrt(rng.uniform());
        } else {
            // proposal density ~ r on [0, support], thinned by kappa^2
            while (true) {
                r = support * std::sqrt(rng.uniform());
                const double kap = kappa_eval(*profile, r);
                if (rng.uniform() < kap * kap) break;
            }
        }
        const double cth = 2.0 * rng.uniform() - 1.0;
        const double sth = std::sqrt(std::max(0.0, 1.0 - cth * cth));
        const double phi = 2.0 * kPi * rng.uniform();
        return {r * sth * std::cos(phi), r * sth * std::sin(phi), r * cth};
    }
};

double omega2(const Vec3& a, const Vec3& b) {
    const Vec3 t = a + b;
    return norm3(a) + norm3(b) + dot3(t, t);
}

// sum_{lm} (eps_l(k) . eps_m(k'))^2
double pol_sum2(const PolarizationPair& a, const PolarizationPair& b) {
    const Vec3* ea[2] = {&a.eps_plus, &a.eps_minus};
    const Vec3* eb[2] = {&b.eps_plus, &b.eps_minus};
    double acc = 0.0;
    for (int l = 0; l < 2; ++l)
        for (int m = 0; m < 2; ++m) {
            const double d = dot3(*ea[l], *eb[m]);
            acc += d * d;
        }
    return acc;
}

// sum over polarizations of (eps_l(k).eps_lp(kp)) (eps_m(q).eps_lp(kp)) *
// (va.eps_l(k)) (vb.eps_m(q)); with va = eps-contraction target vectors.
// Used for both CA (va = eps_m(q) folded directly) and C1 (va = vb = k').
double pol_triple(const PolarizationPair& pk, const PolarizationPair& pkp,
                  const PolarizationPair& pq, const Vec3* va, const Vec3* vb) {
    const Vec3* ek[2] = {&pk.eps_plus, &pk.eps_minus};
    const Vec3* ep[2] = {&pkp.eps_plus, &pkp.eps_minus};
    const Vec3* eq[2] = {&pq.eps_plus, &pq.eps_minus};
    double acc = 0.0;
    for (int l = 0; l < 2; ++l) {
        for (int lp = 0; lp < 2; ++lp) {
            const double d1 = dot3(*ek[l], *ep[lp]);
            for (int m = 0; m < 2; ++m) {
                const double d2 = dot3(*eq[m], *ep[lp]);
                const double left = va ? dot3(*va, *ek[l]) : 1.0;
                const double right = vb ? dot3(*vb, *eq[m]) : 1.0;
                const double close = (va || vb) ? 1.0 : dot3(*ek[l], *eq[m]);
                acc += d1 * d2 * left * right * close;
            }
        }
    }
    return acc;
}

struct PermTensor {
    // G_{abc} for one argument ordering of the three momenta
    double g[2][2][2];
};

PermTensor three_photon_kernel(const Vec3& x1, const Vec3& x2, const Vec3& x3,
                               const PolarizationPair& p1, const PolarizationPair& p2,
                               const PolarizationPair& p3) {
    PermTensor t;
    const Vec3 v = x2 + x3;
    const double w2 = omega2(x2, x3);
    const Vec3* e1[2] = {&p1.eps_plus, &p1.eps_minus};
    const Vec3* e2[2] = {&p2.eps_plus, &p2.eps_minus};
    const Vec3* e3[2] = {&p3.eps_plus, &p3.eps_minus};
    for (int a = 0; a < 2; ++a) {
        const double va = dot3(v, *e1[a]);
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) t.g[a][b][c] = va * dot3(*e2[b], *e3[c]) / w2;
    }
    return t;
}

constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};

struct McAccumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
};

}  // namespace

MCEstimate coefficient_mc(WhichCoefficient which, const FormFactor& ff, std::int64_t n_samples,
                          std::uint64_t seed, Exec exec, PolarizationTwist twist) {
    if (n_samples < 1) throw std::invalid_argument("coefficient_mc: n_samples must be positive");
    const double mass = radial_mass(ff.profile);
    if (mass <= 0.0)
        throw DegenerateMeasureError("coefficient_mc: importance density has zero mass");
    const double zp = mass / kPi;  // f(k)^2 / density ratio per momentum

    const Sampler sampler{&ff.profile, ff.profile.support_radius,
                          ff.profile.kind == CutoffProfile::Kind::Sharp};

    auto weight = [&](BlockRng& rng) -> double {
        switch (which) {
            case WhichCoefficient::C2: {
                const Vec3 k = sampler.draw(rng);
                const Vec3 kp = sampler.draw(rng);
                const PolarizationPair pk = bases_for(k, twist);
                const PolarizationPair pkp = bases_for(kp, twist);
                return 2.0 * zp * zp * pol_sum2(pk, pkp) / omega2(k, kp);
            }
            case WhichCoefficient::CA: {
                const Vec3 kp = sampler.draw(rng);
                const Vec3 k = sampler.draw(rng);
                const Vec3 q = sampler.draw(rng);
                const PolarizationPair pk = bases_for(k, twist);
                const PolarizationPair pkp = bases_for(kp, twist);
                const PolarizationPair pq = bases_for(q, twist);
                const double tr = pol_triple(pk, pkp, pq, nullptr, nullptr);
                return 4.0 * zp * zp * zp * tr / (omega2(k, kp) * omega2(q, kp));
            }
            case WhichCoefficient::C1: {
                const Vec3 kp = sampler.draw(rng);
                const Vec3 k = sampler.draw(rng);
                const Vec3 q = sampler.draw(rng);
                const PolarizationPair pk = bases_for(k, twist);
                const PolarizationPair pkp = bases_for(kp, twist);
                const PolarizationPair pq = bases_for(q, twist);
                const double num = pol_triple(pk, pkp, pq, &kp, &kp);
                const double rkp = norm3(kp);
                const double nu = rkp + rkp * rkp;
                return 4.0 * zp * zp * zp * num / (nu * omega2(k, kp) * omega2(q, kp));
            }
            case WhichCoefficient::C3: {
                const Vec3 x[3] = {sampler.draw(rng), sampler.draw(rng), sampler.draw(rng)};
                const PolarizationPair p[3] = {bases_for(x[0], twist), bases_for(x[1], twist),
                                               bases_for(x[2], twist)};
                const PermTensor id = three_photon_kernel(x[0], x[1], x[2], p[0], p[1], p[2]);
                const Vec3 total = x[0] + x[1] + x[2];
                const double w3 =
                    norm3(x[0]) + norm3(x[1]) + norm3(x[2]) + dot3(total, total);
                double acc = 0.0;
                for (const auto& perm : kPerms) {
                    const PermTensor gp =
                        three_photon_kernel(x[perm[0]], x[perm[1]], x[perm[2]], p[perm[0]],
                                            p[perm[1]], p[perm[2]]);
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b)
                            for (int c = 0; c < 2; ++c) {
                                const int pol[3] = {a, b, c};
                                acc += id.g[a][b][c] *
                                       gp.g[pol[perm[0]]][pol[perm[1]]][pol[perm[2]]];
                            }
                }
                return zp * zp * zp * acc / w3;
            }
        }
        return 0.0;
    };

    const std::int64_t n_blocks = (n_samples + kSamplesPerBlock - 1) / kSamplesPerBlock;
    std::vector<McAccumulator> partial(n_blocks);

#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (std::int64_t b = 0; b < n_blocks; ++b) {
        BlockRng rng(seed, static_cast<std::uint64_t>(b));
        const std::int64_t begin = b * kSamplesPerBlock;
        const std::int64_t end = std::min(n_samples, begin + kSamplesPerBlock);
        McAccumulator acc;
        for (std::int64_t i = begin; i < end; ++i) {
            const double w = weight(rng);
            acc.sum += w;
            acc.sum_sq += w * w;
        }
        partial[b] = acc;
    }

    double sum = 0.0, sum_sq = 0.0;
    for (const auto& acc : partial) {
        sum += acc.sum;
        sum_sq += acc.sum_sq;
    }
    const double n = static_cast<double>(n_samples);
    const double mean = sum / n;
    const double var = n > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
    return {mean, std::sqrt(var / n), n_samples, seed};
}

CoefficientSet mc_coefficient_set(const FormFactor& ff, std::int64_t n_samples,
                                  std::uint64_t seed, Exec exec, PolarizationTwist twist) {
    CoefficientSet set;
    set.provenance = Provenance::MonteCarlo;
    const WhichCoefficient order[4] = {WhichCoefficient::C2, WhichCoefficient::CA,
                                       WhichCoefficient::C3, WhichCoefficient::C1};
    double* field[4] = {&set.c2, &set.c_a, &set.c3, &set.c1};
    int err_slot[4] = {0, 1, 2, 3};
    for (int i = 0; i < 4; ++i) {
        const MCEstimate est =
            coefficient_mc(order[i], ff, n_samples, splitmix64(seed + i), exec, twist);
        *field[i] = est.mean;
        set.error[err_slot[i]] = est.std_error;
    }
    return set;
}

}  // namespace fiberlab
