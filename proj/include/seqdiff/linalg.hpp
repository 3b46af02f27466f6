#pragma once

#include <cmath>

#include "matrix.hpp"

namespace seqdiff {

struct EigenDecomposition {
    Matrix vectors;               // columns are eigenvectors
    std::vector<double> values;   // matching eigenvalues
};

inline bool is_symmetric(const Matrix& a, double tol = 1e-10) {
    if (a.rows() != a.cols()) return false;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = r + 1; c < a.cols(); ++c)
            if (std::abs(a(r, c) - a(c, r)) > tol) return false;
    return true;
}

// Cyclic Jacobi rotations. Intended for small symmetric matrices
// (feature covariances, dim <= 32).
inline EigenDecomposition symmetric_eigen(const Matrix& input, double tol = 1e-12,
                                          int max_sweeps = 100) {
    if (!is_symmetric(input))
        throw std::invalid_argument("symmetric_eigen: matrix is not symmetric");
    const std::size_t n = input.rows();
    Matrix a = input;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(off) < tol) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double app = a(p, p), aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    EigenDecomposition out;
    out.vectors = v;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
    return out;
}

// Symmetric PSD square root. Slightly negative eigenvalues (rounding noise,
// judged relative to the spectrum's magnitude) are clamped to 0; anything
// more negative is rejected unless clamp_negative is set, which maps every
// negative eigenvalue to 0 (for near-PSD inputs such as symmetrized products
// of two PSD matrices).
inline Matrix psd_sqrt(const Matrix& a, bool clamp_negative = false) {
    auto eig = symmetric_eigen(a);
    const std::size_t n = a.rows();
    double spectrum = 0.0;
    for (double lambda : eig.values) spectrum = std::max(spectrum, std::abs(lambda));
    const double tol = std::max(1e-10, 1e-8 * spectrum);
    Matrix d(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double lambda = eig.values[i];
        if (lambda < -tol && !clamp_negative)
            throw std::invalid_argument("psd_sqrt: eigenvalue " + std::to_string(lambda) +
                                        " below PSD tolerance");
        if (lambda < 0.0) lambda = 0.0;
        d(i, i) = std::sqrt(lambda);
    }
    Matrix s = matmul(matmul(eig.vectors, d), eig.vectors.transpose());
    // enforce exact symmetry against rotation round-off
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = r + 1; c < n; ++c) {
            const double m = 0.5 * (s(r, c) + s(c, r));
            s(r, c) = m;
            s(c, r) = m;
        }
    return s;
}

}  // namespace seqdiff
