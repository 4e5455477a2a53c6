#include "fiberlab/field_model.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "fiberlab/quadrature.hpp"

namespace fiberlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Snap to the dyadic grid 2^-48.  Values of magnitude below 8 then have
// exact floating-point sums in groups of up to 16, which makes per-state
// momentum totals independent of summation order.
double snap_dyadic(double v) { return std::ldexp(std::round(std::ldexp(v, 48)), -48); }

// Adjusts one component of e (paired with the largest |k| component) by ulps
// until dot3(k, e) evaluates to exactly 0.0.  The dot is already zero to
// rounding; this removes the last one or two ulps.
Vec3 polish_orthogonal(const Vec3& k, Vec3 e) {
    double* comp[3] = {&e.x, &e.y, &e.z};
    const double kc[3] = {k.x, k.y, k.z};
    int j = 0;
    if (std::abs(kc[1]) > std::abs(kc[j])) j = 1;
    if (std::abs(kc[2]) > std::abs(kc[j])) j = 2;

    for (int attempt = 0; attempt < 64; ++attempt) {
        const double d = dot3(k, e);
        if (d == 0.0) return e;
        const double step = d / kc[j];
        if (std::abs(step) > 4.0 * std::abs(*comp[j]) * 1e-16 + 1e-300) {
            *comp[j] -= step;
            continue;
        }
        // Within a couple of ulps: scan neighbours for an exact zero.
        const double center = *comp[j];
        double lo = center, hi = center;
        for (int s = 0; s < 8; ++s) {
            lo = std::nextafter(lo, -1e30);
            hi = std::nextafter(hi, 1e30);
            *comp[j] = lo;
            if (dot3(k, e) == 0.0) return e;
            *comp[j] = hi;
            if (dot3(k, e) == 0.0) return e;
        }
        *comp[j] = center - step;
    }
    return e;  // |dot| is at worst a few ulps; callers tolerate 1e-14
}

}  // namespace

double kappa_eval(const CutoffProfile& profile, double r) {
    if (r < 0.0) throw std::domain_error("kappa_eval: negative radius");
    switch (profile.kind) {
        case CutoffProfile::Kind::Sharp:
            return r < profile.support_radius ? 1.0 : 0.0;
        case CutoffProfile::Kind::Smoothstep: {
            if (r <= profile.plateau_radius) return 1.0;
            if (r >= profile.support_radius) return 0.0;
            const double s = (r - profile.plateau_radius) /
                             (profile.support_radius - profile.plateau_radius);
            return 1.0 - s * s * (3.0 - 2.0 * s);
        }
    }
    return 0.0;
}

double form_factor_radial(const FormFactor& ff, double r) {
    if (r <= 0.0) throw std::domain_error("form_factor: |k| must be positive");
    return kappa_eval(ff.profile, r) / (kTwoPi * std::sqrt(r));
}

double form_factor(const FormFactor& ff, const Vec3& k) {
    return form_factor_radial(ff, norm3(k));
}

PolarizationPair polarization_basis(const Vec3& k) {
    const double n = norm3(k);
    if (n == 0.0) throw std::domain_error("polarization_basis: zero wavevector");
    const Vec3 khat = {k.x / n, k.y / n, k.z / n};
    const Vec3 zhat = {0.0, 0.0, 1.0};
    const Vec3 raw = cross3(khat, zhat);  // = (khat.y, -khat.x, 0)
    const double rawn = norm3(raw);
    if (rawn < 1e-12) {
        return {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
    }
    Vec3 eps_plus = polish_orthogonal(k, {raw.x / rawn, raw.y / rawn, raw.z / rawn});
    Vec3 eps_minus = polish_orthogonal(k, normalized3(cross3(khat, eps_plus)));
    return {eps_plus, eps_minus};
}

double polarization_sum(const Vec3& khat, const Vec3& khat2) {
    if (std::abs(norm3(khat) - 1.0) > 1e-10 || std::abs(norm3(khat2) - 1.0) > 1e-10)
        throw std::domain_error("polarization_sum: arguments must be unit vectors");
    const double u = dot3(khat, khat2);
    return 1.0 + u * u;
}

double MomentumGrid::total_weight() const {
    double s = 0.0;
    for (const auto& m : modes) s += m.weight;
    return s;
}

MomentumGrid build_grid(const GridSpec& spec) {
    if (spec.n_radial < 1 || spec.n_polar < 1 || spec.n_azimuthal < 1)
        throw std::invalid_argument("build_grid: node counts must be >= 1");

    const double support = spec.profile.support_radius;
    const GaussRule radial = gauss_legendre_on(spec.n_radial, 0.0, support);
    const GaussRule polar = gauss_legendre(spec.n_polar);  // cos(theta) on [-1, 1]
    const double dphi = kTwoPi / spec.n_azimuthal;

    MomentumGrid grid;
    grid.spec = spec;
    grid.modes.reserve(static_cast<std::size_t>(spec.n_radial) * spec.n_polar * spec.n_azimuthal);
    for (int i = 0; i < spec.n_radial; ++i) {
        const double r = radial.nodes[i];
        for (int j = 0; j < spec.n_polar; ++j) {
            const double cth = polar.nodes[j];
            const double sth = std::sqrt(1.0 - cth * cth);
            for (int l = 0; l < spec.n_azimuthal; ++l) {
                const double phi = dphi * (l + 0.5);
                Vec3 k = {r * sth * std::cos(phi), r * sth * std::sin(phi), r * cth};
                k = {snap_dyadic(k.x), snap_dyadic(k.y), snap_dyadic(k.z)};
                MomentumMode mode;
                mode.k = k;
                mode.weight = r * r * radial.weights[i] * polar.weights[j] * dphi;
                mode.pair = polarization_basis(k);
                grid.modes.push_back(mode);
            }
        }
    }
    return grid;
}

MomentumGrid make_grid_from_modes(const CutoffProfile& profile, std::vector<MomentumMode> modes) {
    MomentumGrid grid;
    grid.spec.profile = profile;
    grid.spec.n_radial = 0;
    grid.spec.n_polar = 0;
    grid.spec.n_azimuthal = 0;
    grid.modes = std::move(modes);
    return grid;
}

MomentumGrid rotate_grid_about_z(const MomentumGrid& grid, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    auto rot = [&](const Vec3& v) -> Vec3 { return {c * v.x - s * v.y, s * v.x + c * v.y, v.z}; };
    MomentumGrid out = grid;
    for (auto& m : out.modes) {
        m.k = rot(m.k);
        // Rebuild the pair from the rotated wavevector; for rotations about z
        // this coincides with rotating the pair itself.
        m.pair = polarization_basis(m.k);
    }
    return out;
}

MomentumGrid break_transversality_for_test(const MomentumGrid& grid, double tilt) {
    MomentumGrid out = grid;
    for (auto& m : out.modes) {
        const Vec3 khat = normalized3(m.k);
        m.pair.eps_plus = normalized3(m.pair.eps_plus + tilt * khat);
    }
    return out;
}

void write_grid_csv(std::ostream& os, const MomentumGrid& grid) {
    os << "kx,ky,kz,weight\n";
    char buf[160];
    for (const auto& m : grid.modes) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", m.k.x, m.k.y, m.k.z,
                      m.weight);
        os << buf;
    }
}

std::string grid_spec_to_config(const GridSpec& spec) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "grid.n_radial = %d\ngrid.n_polar = %d\ngrid.n_azimuthal = %d\n"
                  "cutoff.kind = %s\ncutoff.plateau_radius = %.17g\ncutoff.support_radius = %.17g\n",
                  spec.n_radial, spec.n_polar, spec.n_azimuthal,
                  spec.profile.kind == CutoffProfile::Kind::Sharp ? "sharp" : "smoothstep",
                  spec.profile.plateau_radius, spec.profile.support_radius);
    return buf;
}

}  // namespace fiberlab
