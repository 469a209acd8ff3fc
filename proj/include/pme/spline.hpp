#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "pme/errors.hpp"
#include "pme/linalg.hpp"
#include "pme/matrix.hpp"
#include "pme/rng.hpp"
#include "pme/templates.hpp"

namespace pme {

/// A fitted map f: template -> R^D in representer form,
/// f_j(m) = sum_i theta_ij phi_i(m) + sum_l alpha_lj R_1(m, m_l).
/// Immutable after construction; safe to share across threads.
struct SplineMap {
    TemplateKind kind = TemplateKind::Interval;
    std::vector<TemplatePoint> knots;
    Matrix alpha;  // N x D
    Matrix theta;  // d0 x D
    double lambda = 0.0;
    std::size_t ambient_dim = 0;
};

/// One regression problem of a PA iteration: the cloud, the current
/// projection indices, and the penalty weight.
struct FitProblem {
    PointCloud cloud;  // N x D
    std::vector<TemplatePoint> indices;
    double lambda = 0.0;
};

namespace detail {

inline Matrix design_null(TemplateKind kind, const std::vector<TemplatePoint>& knots) {
    const std::size_t d0 = null_dim(kind);
    Matrix t(knots.size(), d0);
    for (std::size_t i = 0; i < knots.size(); ++i) {
        const std::vector<double> phi = null_basis(kind, knots[i]);
        for (std::size_t j = 0; j < d0; ++j) t(i, j) = phi[j];
    }
    return t;
}

}  // namespace detail

/// Closed-form penalized least-squares fit:
///   M = K + N*lambda*I,
///   theta = (T' M^-1 T)^-1 T' M^-1 X,
///   alpha = M^-1 (X - T theta).
inline SplineMap fit_spline(const FitProblem& problem) {
    const std::size_t n = problem.cloud.rows();
    const std::size_t dim = problem.cloud.cols();
    const TemplateKind kind = problem.indices.empty() ? TemplateKind::Interval
                                                      : problem.indices.front().kind;
    if (problem.indices.size() != n)
        throw LengthMismatch("fit_spline: indices length != cloud size");
    if (problem.lambda <= 0.0) throw InvalidInput("fit_spline: lambda must be > 0");
    const std::size_t d0 = null_dim(kind);
    if (n < d0) throw RankDeficientDesign("fit_spline: fewer points than null-space dimension");

    Matrix m = gram(kind, problem.indices);
    const double ridge = static_cast<double>(n) * problem.lambda;
    for (std::size_t i = 0; i < n; ++i) m(i, i) += ridge;

    const Matrix t = detail::design_null(kind, problem.indices);
    const CholeskyFactor m_chol(m);
    const Matrix minv_t = m_chol.solve(t);          // N x d0
    const Matrix minv_x = m_chol.solve(problem.cloud);  // N x D
    const Matrix tt_minv_t = t.transposed() * minv_t;   // d0 x d0, SPD when T has full rank
    const Matrix tt_minv_x = t.transposed() * minv_x;

    Matrix theta;
    try {
        // strict factorization: a rank-deficient design must throw, not be
        // masked by the jittered retry
        theta = CholeskyFactor(tt_minv_t, false).solve(tt_minv_x);
    } catch (const NotPositiveDefinite&) {
        throw RankDeficientDesign("fit_spline: T' M^-1 T is singular (degenerate knots)");
    }
    const Matrix alpha = minv_x - minv_t * theta;

    SplineMap map;
    map.kind = kind;
    map.knots = problem.indices;
    map.alpha = alpha;
    map.theta = theta;
    map.lambda = problem.lambda;
    map.ambient_dim = dim;
    return map;
}

/// Evaluates the fitted map at a template point.
inline std::vector<double> eval_map(const SplineMap& map, const TemplatePoint& m) {
    if (m.kind != map.kind) throw InvalidPoint("eval_map: point kind mismatch");
    const std::vector<double> phi = null_basis(map.kind, m);
    std::vector<double> out(map.ambient_dim, 0.0);
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double p = phi[i];
        for (std::size_t j = 0; j < map.ambient_dim; ++j) out[j] += p * map.theta(i, j);
    }
    for (std::size_t l = 0; l < map.knots.size(); ++l) {
        const double k = kernel(map.kind, m, map.knots[l]);
        if (k == 0.0) continue;
        for (std::size_t j = 0; j < map.ambient_dim; ++j) out[j] += k * map.alpha(l, j);
    }
    return out;
}

/// Penalty of the fitted map in closed form: sum_j alpha_j' K alpha_j,
/// clamped at 0 against the -1e-14-scale floating point floor.
inline double penalty(const SplineMap& map) {
    if (map.knots.empty()) return 0.0;
    const Matrix k = gram(map.kind, map.knots);
    const std::size_t n = map.knots.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* ki = k.row(i);
        const double* ai = map.alpha.row(i);
        for (std::size_t l = 0; l < n; ++l) {
            const double kil = ki[l];
            if (kil == 0.0) continue;
            const double* al = map.alpha.row(l);
            for (std::size_t j = 0; j < map.ambient_dim; ++j) total += ai[j] * kil * al[j];
        }
    }
    return std::max(0.0, total);
}

struct LossBreakdown {
    double fit_error = 0.0;  // (1/N) sum ||X_i - f(m_i)||^2
    double penalty = 0.0;
    double total = 0.0;      // fit_error + lambda * penalty
};

/// Empirical loss L_{N,lambda} at given projection indices.
inline LossBreakdown loss(const SplineMap& map, const PointCloud& cloud,
                          const std::vector<TemplatePoint>& indices) {
    const std::size_t n = cloud.rows();
    if (indices.size() != n) throw LengthMismatch("loss: indices length != cloud size");
    LossBreakdown out;
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> f = eval_map(map, indices[i]);
        out.fit_error += squared_distance(cloud.row(i), f.data(), cloud.cols());
    }
    if (n > 0) out.fit_error /= static_cast<double>(n);
    out.penalty = penalty(map);
    out.total = out.fit_error + map.lambda * out.penalty;
    return out;
}

/// Reduced-basis fit: max_knots knots chosen uniformly at random serve as
/// basis knots while all N residuals enter the objective. Solves the normal
/// equations of (1/N)||X - Phi c||^2 + lambda c_a' K~ c_a.
inline SplineMap fit_spline_reduced(const FitProblem& problem, std::size_t max_knots,
                                    std::uint64_t seed) {
    const std::size_t n = problem.cloud.rows();
    const TemplateKind kind = problem.indices.empty() ? TemplateKind::Interval
                                                      : problem.indices.front().kind;
    const std::size_t d0 = null_dim(kind);
    if (max_knots < d0 + 1) throw InvalidInput("fit_spline_reduced: max_knots < d0 + 1");
    if (problem.indices.size() != n)
        throw LengthMismatch("fit_spline_reduced: indices length != cloud size");
    if (max_knots >= n) return fit_spline(problem);

    // Uniform choice without replacement (partial Fisher-Yates).
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    for (std::size_t i = 0; i < max_knots; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(
                                      rng.uniform() * static_cast<double>(n - i));
        std::swap(perm[i], perm[std::min(j, n - 1)]);
    }
    std::vector<TemplatePoint> knots;
    knots.reserve(max_knots);
    for (std::size_t i = 0; i < max_knots; ++i) knots.push_back(problem.indices[perm[i]]);

    const std::size_t nb = d0 + max_knots;
    Matrix phi(n, nb);  // [T | R_1(m_i, knot_k)]
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> nb_i = null_basis(kind, problem.indices[i]);
        for (std::size_t j = 0; j < d0; ++j) phi(i, j) = nb_i[j];
        for (std::size_t k = 0; k < max_knots; ++k)
            phi(i, d0 + k) = kernel(kind, problem.indices[i], knots[k]);
    }
    const Matrix k_red = gram(kind, knots);

    // (Phi'Phi / N + lambda * blockdiag(0, K~)) c = Phi'X / N
    Matrix a = phi.transposed() * phi;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < nb; ++i)
        for (std::size_t j = 0; j < nb; ++j) {
            a(i, j) *= inv_n;
            if (i >= d0 && j >= d0) a(i, j) += problem.lambda * k_red(i - d0, j - d0);
        }
    Matrix rhs = phi.transposed() * problem.cloud;
    for (double& v : rhs.data()) v *= inv_n;

    Matrix coeffs;
    try {
        coeffs = solve_spd(a, rhs);
    } catch (const NotPositiveDefinite&) {
        throw RankDeficientDesign("fit_spline_reduced: normal equations are singular");
    }

    SplineMap map;
    map.kind = kind;
    map.knots = std::move(knots);
    map.theta = Matrix(d0, problem.cloud.cols());
    map.alpha = Matrix(max_knots, problem.cloud.cols());
    for (std::size_t j = 0; j < problem.cloud.cols(); ++j) {
        for (std::size_t i = 0; i < d0; ++i) map.theta(i, j) = coeffs(i, j);
        for (std::size_t k = 0; k < max_knots; ++k) map.alpha(k, j) = coeffs(d0 + k, j);
    }
    map.lambda = problem.lambda;
    map.ambient_dim = problem.cloud.cols();
    return map;
}

}  // namespace pme
