#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "pme/errors.hpp"
#include "pme/matrix.hpp"

namespace pme {

namespace detail {

inline void require_square_symmetric(const Matrix& a, double tol = 1e-10) {
    if (a.rows() != a.cols()) throw NonSymmetric("matrix is not square");
    const double scale = std::max(1.0, a.max_abs());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol * scale)
                throw NonSymmetric("matrix asymmetry exceeds tolerance");
}

}  // namespace detail

/// Lower-triangular Cholesky factor of an SPD matrix. Solves reuse the
/// factorization, so M is factored once per spline fit.
class CholeskyFactor {
public:
    /// Factors A (must be symmetric). Pivots are required to exceed the
    /// jitter floor 1e-10 * trace(A) / n; on the first failure the
    /// factorization is retried once with that jitter added to the diagonal.
    /// `allow_retry = false` disables the jittered retry; use it where a
    /// singular matrix must be reported rather than regularized away.
    explicit CholeskyFactor(const Matrix& a, bool allow_retry = true) {
        detail::require_square_symmetric(a);
        const std::size_t n = a.rows();
        const double floor = n == 0 ? 0.0 : 1e-10 * std::abs(a.trace()) / static_cast<double>(n);
        if (!try_factor(a, floor, 0.0)) {
            if (!allow_retry || !try_factor(a, floor, std::max(floor, 1e-300)))
                throw NotPositiveDefinite("Cholesky pivot at or below jitter floor after retry");
        }
    }

    std::size_t size() const { return l_.rows(); }

    /// Solves A * X = B column-wise.
    Matrix solve(const Matrix& b) const {
        const std::size_t n = size();
        if (b.rows() != n) throw LengthMismatch("Cholesky solve: row count mismatch");
        Matrix x = b;
        // Forward substitution L y = b.
        for (std::size_t i = 0; i < n; ++i) {
            const double* li = l_.row(i);
            double* xi = x.row(i);
            for (std::size_t k = 0; k < i; ++k) {
                const double lik = li[k];
                const double* xk = x.row(k);
                for (std::size_t j = 0; j < x.cols(); ++j) xi[j] -= lik * xk[j];
            }
            const double inv = 1.0 / li[i];
            for (std::size_t j = 0; j < x.cols(); ++j) xi[j] *= inv;
        }
        // Back substitution L^T x = y.
        for (std::size_t ii = n; ii-- > 0;) {
            double* xi = x.row(ii);
            for (std::size_t k = ii + 1; k < n; ++k) {
                const double lki = l_(k, ii);
                const double* xk = x.row(k);
                for (std::size_t j = 0; j < x.cols(); ++j) xi[j] -= lki * xk[j];
            }
            const double inv = 1.0 / l_(ii, ii);
            for (std::size_t j = 0; j < x.cols(); ++j) xi[j] *= inv;
        }
        return x;
    }

private:
    bool try_factor(const Matrix& a, double floor, double jitter) {
        const std::size_t n = a.rows();
        l_ = Matrix(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            double* li = l_.row(i);
            for (std::size_t j = 0; j <= i; ++j) {
                double s = a(i, j);
                if (i == j) s += jitter;
                const double* lj = l_.row(j);
                for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
                if (i == j) {
                    if (s <= floor) return false;
                    li[j] = std::sqrt(s);
                } else {
                    li[j] = s / lj[j];
                }
            }
        }
        return true;
    }

    Matrix l_;
};

/// Solves A * X = B for symmetric positive definite A.
inline Matrix solve_spd(const Matrix& a, const Matrix& b) {
    return CholeskyFactor(a).solve(b);
}

struct EigenDecomposition {
    std::vector<double> values;  // descending
    Matrix vectors;              // orthonormal columns, vectors.col(i) pairs values[i]
};

/// Full symmetric eigendecomposition by cyclic Jacobi rotations. Adequate
/// and robust at the N <= 3000 scale this library targets.
inline EigenDecomposition eig_sym(const Matrix& a_in) {
    detail::require_square_symmetric(a_in);
    const std::size_t n = a_in.rows();
    Matrix a = a_in;
    Matrix v = Matrix::identity(n);

    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) norm += a(i, j) * a(i, j);
    norm = std::sqrt(norm);
    const double threshold = 1e-12 * std::max(norm, 1e-300);

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps && off_norm() > threshold; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

struct PcaResult {
    std::vector<double> mean;  // length D
    Matrix components;         // d x D, one component per row, descending variance
    std::vector<double> variances;
};

/// Sample PCA with 1/N covariance normalization.
inline PcaResult pca(const PointCloud& cloud, std::size_t d) {
    const std::size_t n = cloud.rows();
    const std::size_t dim = cloud.cols();
    if (n < 2) throw DegenerateCloud("pca needs at least 2 points");
    if (d > dim) throw InvalidInput("pca: d must be <= D");

    std::vector<double> mean(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) mean[j] += cloud(i, j);
    for (double& m : mean) m /= static_cast<double>(n);

    double spread = 0.0;
    Matrix cov(dim, dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double cj = cloud(i, j) - mean[j];
            spread = std::max(spread, std::abs(cj));
            for (std::size_t k = j; k < dim; ++k)
                cov(j, k) += cj * (cloud(i, k) - mean[k]);
        }
    }
    if (spread == 0.0) throw DegenerateCloud("pca: all points identical");
    for (std::size_t j = 0; j < dim; ++j)
        for (std::size_t k = j; k < dim; ++k) {
            cov(j, k) /= static_cast<double>(n);
            cov(k, j) = cov(j, k);
        }

    const EigenDecomposition eig = eig_sym(cov);
    PcaResult out;
    out.mean = std::move(mean);
    out.components = Matrix(d, dim);
    out.variances.resize(d);
    for (std::size_t r = 0; r < d; ++r) {
        out.variances[r] = eig.values[r];
        for (std::size_t j = 0; j < dim; ++j) out.components(r, j) = eig.vectors(j, r);
    }
    return out;
}

/// Classical multidimensional scaling: double-center -1/2 J D^2 J and embed
/// with the top-k eigenpairs. Negative eigenvalues (non-Euclidean graph
/// distances) are clamped to zero.
inline Matrix classical_mds(const Matrix& distances, std::size_t k) {
    const std::size_t n = distances.rows();
    if (distances.cols() != n) throw InvalidDistances("distance matrix must be square");
    const double scale = std::max(1.0, distances.max_abs());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double dij = distances(i, j);
            if (!std::isfinite(dij) || dij < 0.0)
                throw InvalidDistances("distance matrix has a negative or non-finite entry");
            if (std::abs(dij - distances(j, i)) > 1e-10 * scale)
                throw InvalidDistances("distance matrix is asymmetric");
        }
        if (std::abs(distances(i, i)) > 1e-12 * scale)
            throw InvalidDistances("distance matrix diagonal is not zero");
    }

    Matrix b(n, n);
    std::vector<double> row_mean(n, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double sq = distances(i, j) * distances(i, j);
            b(i, j) = sq;
            row_mean[i] += sq;
        }
        row_mean[i] /= static_cast<double>(n);
        grand += row_mean[i];
    }
    grand /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            b(i, j) = -0.5 * (b(i, j) - row_mean[i] - row_mean[j] + grand);

    const EigenDecomposition eig = eig_sym(b);
    Matrix coords(n, k);
    for (std::size_t c = 0; c < k && c < n; ++c) {
        const double lam = std::max(0.0, eig.values[c]);
        const double s = std::sqrt(lam);
        for (std::size_t i = 0; i < n; ++i) coords(i, c) = s * eig.vectors(i, c);
    }
    return coords;
}

}  // namespace pme
