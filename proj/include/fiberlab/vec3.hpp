#pragma once

#include <cmath>

namespace fiberlab {

// Plain 3-vector value type. Kept deliberately minimal; all linear algebra
// in this project is either 3-dimensional or lives in sparse Fock-space
// vectors, so there is no general matrix type.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }

// Fixed left-to-right evaluation order; together with -ffp-contract=off this
// makes dot products bit-reproducible and lets exactly cancelling terms
// cancel to 0.0.
inline double dot3(const Vec3& a, const Vec3& b) {
    return (a.x * b.x + a.y * b.y) + a.z * b.z;
}

inline Vec3 cross3(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm3(const Vec3& a) { return std::sqrt(dot3(a, a)); }

inline Vec3 normalized3(const Vec3& a) {
    const double n = norm3(a);
    return {a.x / n, a.y / n, a.z / n};
}

}  // namespace fiberlab
