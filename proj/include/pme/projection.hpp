#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "pme/errors.hpp"
#include "pme/parallel.hpp"
#include "pme/spline.hpp"
#include "pme/templates.hpp"

namespace pme {

struct ProjectionConfig {
    std::size_t grid_size = 1000;        // 1-d partition resolution
    double circle_endpoint_eps = 1e-6;   // last circle node is 1 - eps
    std::size_t sphere_starts = 16;      // multistart seeds on S^2
    std::size_t sphere_max_iter = 200;
    double sphere_tol = 1e-10;
    std::size_t sphere_lattice = 1024;   // Fibonacci lattice used to pick the best extra start

    void validate() const {
        if (grid_size < 2) throw InvalidInput("projection: grid_size must be >= 2");
        if (!(circle_endpoint_eps > 0.0 && circle_endpoint_eps < 1e-3))
            throw InvalidInput("projection: circle_endpoint_eps out of range");
        if (sphere_starts < 1) throw InvalidInput("projection: sphere_starts must be >= 1");
    }
};

namespace detail {

inline double sq_dist_to_map(const SplineMap& map, const TemplatePoint& m, const double* x) {
    const std::vector<double> f = eval_map(map, m);
    return squared_distance(x, f.data(), map.ambient_dim);
}

/// Golden-section pass on [lo, hi] for the 1-d squared-distance profile.
/// Circle evaluations wrap via the fractional part.
inline double golden_section_1d(const SplineMap& map, const double* x, double lo, double hi,
                                double tol) {
    auto make_point = [&](double t) {
        if (map.kind == TemplateKind::Circle) return TemplatePoint::circle(fractional_part(t));
        return TemplatePoint::interval(std::clamp(t, 0.0, 1.0));
    };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = sq_dist_to_map(map, make_point(c), x);
    double fd = sq_dist_to_map(map, make_point(d), x);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = sq_dist_to_map(map, make_point(c), x);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = sq_dist_to_map(map, make_point(d), x);
        }
    }
    return 0.5 * (a + b);
}

/// 1-d partition nodes. For Circle the last node is 1 - eps because the
/// endpoints are identified.
inline std::vector<double> partition_nodes(TemplateKind kind, const ProjectionConfig& cfg) {
    const std::size_t m = cfg.grid_size;
    std::vector<double> nodes(m + 1);
    for (std::size_t j = 0; j <= m; ++j)
        nodes[j] = static_cast<double>(j) / static_cast<double>(m);
    if (kind == TemplateKind::Circle) nodes[m] = 1.0 - cfg.circle_endpoint_eps;
    return nodes;
}

inline TemplatePoint project_point_1d(const SplineMap& map, const double* x,
                                      const ProjectionConfig& cfg,
                                      const std::vector<double>& nodes,
                                      const Matrix* grid_values) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        double d;
        if (grid_values != nullptr) {
            d = squared_distance(x, grid_values->row(j), map.ambient_dim);
        } else {
            const TemplatePoint m = map.kind == TemplateKind::Circle
                                        ? TemplatePoint::circle(fractional_part(nodes[j]))
                                        : TemplatePoint::interval(nodes[j]);
            d = sq_dist_to_map(map, m, x);
        }
        if (d < best_d) {  // strict: ties go to the smallest index
            best_d = d;
            best = j;
        }
    }
    // Refine on the bracketing cell. Circle brackets may wrap; evaluations
    // reduce mod 1 so raw endpoints outside [0,1) are fine.
    const double step = 1.0 / static_cast<double>(cfg.grid_size);
    double lo, hi;
    if (map.kind == TemplateKind::Circle) {
        lo = nodes[best] - step;
        hi = nodes[best] + step;
    } else {
        lo = best == 0 ? nodes.front() : nodes[best - 1];
        hi = best + 1 < nodes.size() ? nodes[best + 1] : nodes.back();
    }
    double t = golden_section_1d(map, x, lo, hi, 1e-10);
    TemplatePoint refined = map.kind == TemplateKind::Circle
                                ? TemplatePoint::circle(fractional_part(t))
                                : TemplatePoint::interval(std::clamp(t, 0.0, 1.0));
    const TemplatePoint grid_pt = map.kind == TemplateKind::Circle
                                      ? TemplatePoint::circle(fractional_part(nodes[best]))
                                      : TemplatePoint::interval(nodes[best]);
    // The refinement must never be worse than the grid answer.
    if (sq_dist_to_map(map, refined, x) <= best_d) return refined;
    return grid_pt;
}

inline std::array<double, 3> normalize3(const std::array<double, 3>& v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (n < 1e-300) return {0.0, 0.0, 1.0};
    return {v[0] / n, v[1] / n, v[2] / n};
}

/// Orthonormal tangent basis at a unit vector p.
inline void tangent_basis(const std::array<double, 3>& p, std::array<double, 3>& e1,
                          std::array<double, 3>& e2) {
    const std::array<double, 3> ref =
        std::abs(p[0]) < 0.9 ? std::array<double, 3>{1.0, 0.0, 0.0}
                             : std::array<double, 3>{0.0, 1.0, 0.0};
    // e1 = normalize(ref - (ref.p) p), e2 = p x e1
    const double dot = ref[0] * p[0] + ref[1] * p[1] + ref[2] * p[2];
    e1 = normalize3({ref[0] - dot * p[0], ref[1] - dot * p[1], ref[2] - dot * p[2]});
    e2 = {p[1] * e1[2] - p[2] * e1[1], p[2] * e1[0] - p[0] * e1[2], p[0] * e1[1] - p[1] * e1[0]};
}

/// Derivative-free Nelder-Mead in the 2-d tangent chart at `start`, with
/// retraction to S^2 by normalization. Returns the best point found.
inline TemplatePoint nelder_mead_sphere(const SplineMap& map, const double* x,
                                        const TemplatePoint& start, std::size_t max_iter,
                                        double tol) {
    std::array<double, 3> e1, e2;
    tangent_basis(start.v, e1, e2);
    auto chart = [&](double u1, double u2) {
        return TemplatePoint::sphere(
            start.v[0] + u1 * e1[0] + u2 * e2[0], start.v[1] + u1 * e1[1] + u2 * e2[1],
            start.v[2] + u1 * e1[2] + u2 * e2[2]);
    };
    auto objective = [&](double u1, double u2) {
        TemplatePoint p = chart(u1, u2);
        p.v = normalize3(p.v);
        return sq_dist_to_map(map, p, x);
    };

    struct Vertex {
        double u1, u2, f;
    };
    const double h = 0.5;
    std::array<Vertex, 3> s{Vertex{0.0, 0.0, objective(0.0, 0.0)},
                            Vertex{h, 0.0, objective(h, 0.0)},
                            Vertex{0.0, h, objective(0.0, h)}};
    auto order = [&] {
        std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    };
    order();
    for (std::size_t it = 0; it < max_iter; ++it) {
        if (std::abs(s[2].f - s[0].f) <= tol * (std::abs(s[0].f) + tol)) break;
        const double cu1 = 0.5 * (s[0].u1 + s[1].u1);
        const double cu2 = 0.5 * (s[0].u2 + s[1].u2);
        const double ru1 = cu1 + (cu1 - s[2].u1);
        const double ru2 = cu2 + (cu2 - s[2].u2);
        const double fr = objective(ru1, ru2);
        if (fr < s[0].f) {
            const double eu1 = cu1 + 2.0 * (cu1 - s[2].u1);
            const double eu2 = cu2 + 2.0 * (cu2 - s[2].u2);
            const double fe = objective(eu1, eu2);
            if (fe < fr)
                s[2] = {eu1, eu2, fe};
            else
                s[2] = {ru1, ru2, fr};
        } else if (fr < s[1].f) {
            s[2] = {ru1, ru2, fr};
        } else {
            const double ku1 = cu1 + 0.5 * (s[2].u1 - cu1);
            const double ku2 = cu2 + 0.5 * (s[2].u2 - cu2);
            const double fk = objective(ku1, ku2);
            if (fk < s[2].f) {
                s[2] = {ku1, ku2, fk};
            } else {
                // shrink toward the best vertex
                for (int i = 1; i < 3; ++i) {
                    s[i].u1 = s[0].u1 + 0.5 * (s[i].u1 - s[0].u1);
                    s[i].u2 = s[0].u2 + 0.5 * (s[i].u2 - s[0].u2);
                    s[i].f = objective(s[i].u1, s[i].u2);
                }
            }
        }
        order();
    }
    TemplatePoint best = chart(s[0].u1, s[0].u2);
    best.v = normalize3(best.v);
    return best;
}

inline TemplatePoint project_point_sphere(const SplineMap& map, const double* x,
                                          const ProjectionConfig& cfg,
                                          const std::vector<TemplatePoint>& lattice,
                                          const Matrix* lattice_values) {
    // Multistart seeds plus the best lattice node.
    std::vector<TemplatePoint> starts = fibonacci_sphere(cfg.sphere_starts);
    std::size_t best_node = 0;
    double best_node_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < lattice.size(); ++j) {
        const double d = lattice_values != nullptr
                             ? squared_distance(x, lattice_values->row(j), map.ambient_dim)
                             : sq_dist_to_map(map, lattice[j], x);
        if (d < best_node_d) {
            best_node_d = d;
            best_node = j;
        }
    }
    starts.push_back(lattice[best_node]);

    TemplatePoint best = lattice[best_node];
    double best_d = best_node_d;
    for (const TemplatePoint& s : starts) {
        const TemplatePoint cand =
            nelder_mead_sphere(map, x, s, cfg.sphere_max_iter, cfg.sphere_tol);
        const double d = sq_dist_to_map(map, cand, x);
        if (d < best_d) {
            best_d = d;
            best = cand;
        }
    }
    return best;
}

}  // namespace detail

/// Nearest-point projection index pi_f(x) = argmin_m ||x - f(m)||.
/// Deterministic: grid ties break to the smallest index.
inline TemplatePoint project_point(const SplineMap& map, const std::vector<double>& x,
                                   const ProjectionConfig& cfg = {}) {
    cfg.validate();
    if (x.size() != map.ambient_dim) throw InvalidInput("project_point: dimension mismatch");
    for (double v : x)
        if (!std::isfinite(v)) throw InvalidInput("project_point: non-finite query");

    if (map.kind == TemplateKind::Sphere) {
        const std::vector<TemplatePoint> lattice = fibonacci_sphere(cfg.sphere_lattice);
        return detail::project_point_sphere(map, x.data(), cfg, lattice, nullptr);
    }
    const std::vector<double> nodes = detail::partition_nodes(map.kind, cfg);
    return detail::project_point_1d(map, x.data(), cfg, nodes, nullptr);
}

/// Elementwise projection of a cloud; order preserved and identical to the
/// sequential point-by-point result. Map evaluations on the shared search
/// grid are precomputed once.
inline std::vector<TemplatePoint> project_all(const SplineMap& map, const PointCloud& cloud,
                                              const ProjectionConfig& cfg = {}) {
    cfg.validate();
    if (cloud.rows() > 0 && cloud.cols() != map.ambient_dim)
        throw InvalidInput("project_all: cloud dimension mismatch");
    const std::size_t n = cloud.rows();
    std::vector<TemplatePoint> out(n, TemplatePoint{});
    if (n == 0) return out;

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < cloud.cols(); ++j)
            if (!std::isfinite(cloud(i, j))) throw InvalidInput("project_all: non-finite point");

    if (map.kind == TemplateKind::Sphere) {
        const std::vector<TemplatePoint> lattice = fibonacci_sphere(cfg.sphere_lattice);
        Matrix values(lattice.size(), map.ambient_dim);
        parallel_for(lattice.size(), [&](std::size_t j) {
            const std::vector<double> f = eval_map(map, lattice[j]);
            std::copy(f.begin(), f.end(), values.row(j));
        });
        parallel_for(n, [&](std::size_t i) {
            out[i] = detail::project_point_sphere(map, cloud.row(i), cfg, lattice, &values);
        });
        return out;
    }

    const std::vector<double> nodes = detail::partition_nodes(map.kind, cfg);
    Matrix values(nodes.size(), map.ambient_dim);
    parallel_for(nodes.size(), [&](std::size_t j) {
        const TemplatePoint m = map.kind == TemplateKind::Circle
                                    ? TemplatePoint::circle(detail::fractional_part(nodes[j]))
                                    : TemplatePoint::interval(nodes[j]);
        const std::vector<double> f = eval_map(map, m);
        std::copy(f.begin(), f.end(), values.row(j));
    });
    parallel_for(n, [&](std::size_t i) {
        out[i] = detail::project_point_1d(map, cloud.row(i), cfg, nodes, &values);
    });
    return out;
}

}  // namespace pme
