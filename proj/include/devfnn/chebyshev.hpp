#pragma once

#include <stdexcept>
#include <Eigen/Dense>

namespace devfnn {

/// Functional-link expansion of an input vector with Chebyshev
/// polynomials of the first kind up to second order:
///   [1, x1, 2*x1^2 - 1, x2, 2*x2^2 - 1, ...]
/// Length is 2n + 1 for an n-dimensional input.
inline Eigen::VectorXd chebyshev_expand(const Eigen::VectorXd& x) {
    if (x.size() == 0) throw std::invalid_argument("chebyshev_expand: empty input");
    Eigen::VectorXd out(2 * x.size() + 1);
    out(0) = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        out(2 * i + 1) = x(i);
        out(2 * i + 2) = 2.0 * x(i) * x(i) - 1.0;
    }
    return out;
}

} // namespace devfnn
