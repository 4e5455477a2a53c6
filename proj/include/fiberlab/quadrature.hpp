#pragma once

#include <vector>

namespace fiberlab {

// Gauss-Legendre rule on [-1, 1]. Nodes ascending, weights positive.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Computes the n-point rule by Newton iteration on the Legendre polynomial.
// Accurate to a few ulps for n up to several hundred.
GaussRule gauss_legendre(int n);

// Same rule mapped affinely onto [a, b].
GaussRule gauss_legendre_on(int n, double a, double b);

}  // namespace fiberlab
