#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "pme/errors.hpp"
#include "pme/matrix.hpp"
#include "pme/rng.hpp"

namespace pme {

/// The three supported template manifolds.
enum class TemplateKind { Interval, Circle, Sphere };

inline std::size_t intrinsic_dim(TemplateKind kind) {
    return kind == TemplateKind::Sphere ? 2 : 1;
}

/// Dimension of the zero-penalty null space: affine on [0,1], constants on
/// S^1 and S^2.
inline std::size_t null_dim(TemplateKind kind) {
    return kind == TemplateKind::Interval ? 2 : 1;
}

inline std::string template_name(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::Interval: return "interval";
        case TemplateKind::Circle: return "circle";
        case TemplateKind::Sphere: return "sphere";
    }
    return "?";
}

/// A point on a template manifold: a scalar parameter for Interval ([0,1])
/// and Circle ([0,1) with identified endpoints), a unit 3-vector for Sphere.
struct TemplatePoint {
    TemplateKind kind = TemplateKind::Interval;
    double t = 0.0;
    std::array<double, 3> v{0.0, 0.0, 1.0};

    static TemplatePoint interval(double t) {
        TemplatePoint p;
        p.kind = TemplateKind::Interval;
        p.t = t;
        return p;
    }
    static TemplatePoint circle(double t) {
        TemplatePoint p;
        p.kind = TemplateKind::Circle;
        p.t = t;
        return p;
    }
    static TemplatePoint sphere(double x, double y, double z) {
        TemplatePoint p;
        p.kind = TemplateKind::Sphere;
        p.v = {x, y, z};
        return p;
    }

    void validate() const {
        switch (kind) {
            case TemplateKind::Interval:
                if (!(t >= 0.0 && t <= 1.0)) throw InvalidPoint("interval point outside [0,1]");
                return;
            case TemplateKind::Circle:
                if (!(t >= 0.0 && t < 1.0)) throw InvalidPoint("circle point outside [0,1)");
                return;
            case TemplateKind::Sphere: {
                const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
                if (std::abs(n - 1.0) > 1e-12) throw InvalidPoint("sphere point is not unit-norm");
                return;
            }
        }
    }
};

namespace detail {

/// Fourth Bernoulli polynomial.
inline double bernoulli4(double u) {
    return ((u - 2.0) * u + 1.0) * u * u - 1.0 / 30.0;
}

inline double fractional_part(double u) { return u - std::floor(u); }

/// q_2 used by the S^2 kernel. Diverging log branch is switched to the
/// limit value 0.5 once the dot product is within 1e-9 of 1.
inline double sphere_q2(double t) {
    if (t > 1.0 - 1e-9) return 0.5;
    const double one_minus = 1.0 - t;
    const double lg = std::log(1.0 + std::sqrt(2.0 / one_minus));
    return 0.5 * (lg * (1.0 - 4.0 * t + 3.0 * t * t) -
                  3.0 * std::sqrt(2.0 * one_minus * one_minus * one_minus) + 4.0 - 3.0 * t);
}

}  // namespace detail

/// Reproducing kernel R_1 of the penalized RKHS component for each template.
inline double kernel(TemplateKind kind, const TemplatePoint& a, const TemplatePoint& b) {
    if (a.kind != kind || b.kind != kind) throw InvalidPoint("kernel: point kind mismatch");
    a.validate();
    b.validate();
    switch (kind) {
        case TemplateKind::Interval: {
            // arguments ordered so the expression is bit-exact symmetric
            const double m = std::min(a.t, b.t);
            const double s = std::max(a.t, b.t);
            return m * m * m / 3.0 - 0.5 * m * m * (m + s) + m * m * s;
        }
        case TemplateKind::Circle: {
            // B4 is symmetric about 1/2; fold the argument so k(s,t) == k(t,s)
            const double u = detail::fractional_part(a.t - b.t);
            return -detail::bernoulli4(std::min(u, 1.0 - u)) / 24.0;
        }
        case TemplateKind::Sphere: {
            double dot = a.v[0] * b.v[0] + a.v[1] * b.v[1] + a.v[2] * b.v[2];
            dot = std::clamp(dot, -1.0, 1.0);
            return (detail::sphere_q2(dot) - 1.0 / 3.0) / (4.0 * std::numbers::pi);
        }
    }
    return 0.0;
}

/// Gram matrix K_ij = R_1(m_i, m_j).
inline Matrix gram(TemplateKind kind, const std::vector<TemplatePoint>& knots) {
    if (knots.empty()) throw InvalidInput("gram: need at least one knot");
    const std::size_t n = knots.size();
    Matrix k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = kernel(kind, knots[i], knots[j]);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

/// Null-space basis phi at a point: (1, t) for Interval, (1) otherwise.
inline std::vector<double> null_basis(TemplateKind kind, const TemplatePoint& m) {
    if (m.kind != kind) throw InvalidPoint("null_basis: point kind mismatch");
    m.validate();
    if (kind == TemplateKind::Interval) return {1.0, m.t};
    return {1.0};
}

/// Geodesic distance on the template.
inline double template_distance(TemplateKind kind, const TemplatePoint& a, const TemplatePoint& b) {
    if (a.kind != kind || b.kind != kind) throw InvalidPoint("template_distance: kind mismatch");
    a.validate();
    b.validate();
    switch (kind) {
        case TemplateKind::Interval:
            return std::abs(a.t - b.t);
        case TemplateKind::Circle: {
            const double u = detail::fractional_part(a.t - b.t);
            return std::min(u, 1.0 - u);
        }
        case TemplateKind::Sphere: {
            double dot = a.v[0] * b.v[0] + a.v[1] * b.v[1] + a.v[2] * b.v[2];
            return std::acos(std::clamp(dot, -1.0, 1.0));
        }
    }
    return 0.0;
}

/// i.i.d. uniform sample on the template; deterministic given seed. Sphere
/// points come from normalized standard Gaussians.
inline std::vector<TemplatePoint> uniform_sample(TemplateKind kind, std::size_t n,
                                                 std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TemplatePoint> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        switch (kind) {
            case TemplateKind::Interval:
                out.push_back(TemplatePoint::interval(rng.uniform()));
                break;
            case TemplateKind::Circle:
                out.push_back(TemplatePoint::circle(rng.uniform()));
                break;
            case TemplateKind::Sphere: {
                double x, y, z, norm;
                do {
                    x = rng.normal();
                    y = rng.normal();
                    z = rng.normal();
                    norm = std::sqrt(x * x + y * y + z * z);
                } while (norm < 1e-12);
                out.push_back(TemplatePoint::sphere(x / norm, y / norm, z / norm));
                break;
            }
        }
    }
    return out;
}

/// Deterministic quasi-uniform lattice on S^2: golden-angle azimuth with
/// z stratified as (2i+1)/n - 1.
inline std::vector<TemplatePoint> fibonacci_sphere(std::size_t n) {
    if (n == 0) throw InvalidInput("fibonacci_sphere: n must be >= 1");
    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    std::vector<TemplatePoint> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n) - 1.0;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double a = golden_angle * static_cast<double>(i);
        double x = r * std::cos(a);
        double y = r * std::sin(a);
        // renormalize to keep the unit invariant at 1e-12
        const double norm = std::sqrt(x * x + y * y + z * z);
        out.push_back(TemplatePoint::sphere(x / norm, y / norm, z / norm));
    }
    return out;
}

}  // namespace pme
