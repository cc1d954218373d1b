#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <vector>

namespace greenprec {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using Mask = std::vector<bool>;

// Real lift of a complex vector: [Re(v); Im(v)].
inline RealVector lift(const ComplexVector& v) {
    RealVector out(2 * v.size());
    out.head(v.size()) = v.real();
    out.tail(v.size()) = v.imag();
    return out;
}

inline ComplexVector unlift(const RealVector& v) {
    const Eigen::Index n = v.size() / 2;
    ComplexVector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = Complex(v[i], v[n + i]);
    return out;
}

// Real lift of a complex matrix: [Re -Im; Im Re].
inline RealMatrix lift(const ComplexMatrix& h) {
    const Eigen::Index k = h.rows(), m = h.cols();
    RealMatrix out(2 * k, 2 * m);
    out.topLeftCorner(k, m) = h.real();
    out.topRightCorner(k, m) = -h.imag();
    out.bottomLeftCorner(k, m) = h.imag();
    out.bottomRightCorner(k, m) = h.real();
    return out;
}

inline std::size_t count_active(const Mask& mask) {
    std::size_t n = 0;
    for (bool b : mask) n += b ? 1 : 0;
    return n;
}

// Sign with sgn(0) = +1.
inline double sign_nonneg(double v) { return v < 0.0 ? -1.0 : 1.0; }

}  // namespace greenprec
