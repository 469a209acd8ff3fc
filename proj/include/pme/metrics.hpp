#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "pme/errors.hpp"
#include "pme/linalg.hpp"
#include "pme/matrix.hpp"
#include "pme/spline.hpp"
#include "pme/templates.hpp"

namespace pme {

/// Hausdorff distance between two finite point sets: the larger of the two
/// directed nearest-neighbor sup distances.
inline double hausdorff(const PointCloud& a, const PointCloud& b) {
    if (a.rows() == 0 || b.rows() == 0) throw EmptySet("hausdorff: empty point set");
    if (a.cols() != b.cols()) throw LengthMismatch("hausdorff: dimension mismatch");
    const std::size_t d = a.cols();
    auto directed = [&](const PointCloud& from, const PointCloud& to) {
        double sup = 0.0;
        for (std::size_t i = 0; i < from.rows(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < to.rows(); ++j)
                best = std::min(best, squared_distance(from.row(i), to.row(j), d));
            sup = std::max(sup, best);
        }
        return std::sqrt(sup);
    };
    return std::max(directed(a, b), directed(b, a));
}

/// Deterministic quadrature nodes on a template: uniform grids in 1-d, the
/// Fibonacci lattice on S^2.
inline std::vector<TemplatePoint> quadrature_nodes(TemplateKind kind, std::size_t n_quad) {
    std::vector<TemplatePoint> nodes;
    nodes.reserve(n_quad);
    switch (kind) {
        case TemplateKind::Interval:
            for (std::size_t i = 0; i < n_quad; ++i)
                nodes.push_back(TemplatePoint::interval(
                    n_quad == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n_quad - 1)));
            break;
        case TemplateKind::Circle:
            for (std::size_t i = 0; i < n_quad; ++i)
                nodes.push_back(
                    TemplatePoint::circle(static_cast<double>(i) / static_cast<double>(n_quad)));
            break;
        case TemplateKind::Sphere:
            nodes = fibonacci_sphere(n_quad);
            break;
    }
    return nodes;
}

/// Samples the image of a map at n_quad quadrature nodes.
inline PointCloud sample_map(const SplineMap& map, std::size_t n_quad) {
    const std::vector<TemplatePoint> nodes = quadrature_nodes(map.kind, n_quad);
    PointCloud out(nodes.size(), map.ambient_dim);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::vector<double> f = eval_map(map, nodes[i]);
        std::copy(f.begin(), f.end(), out.row(i));
    }
    return out;
}

using ReferenceMap = std::function<std::vector<double>(const TemplatePoint&)>;

/// Root mean squared pointwise distance between a fitted map and a
/// reference map over the quadrature set.
inline double l2_map_distance(const SplineMap& map, const ReferenceMap& reference,
                              std::size_t n_quad) {
    if (n_quad < 100) throw InvalidInput("l2_map_distance: n_quad must be >= 100");
    const std::vector<TemplatePoint> nodes = quadrature_nodes(map.kind, n_quad);
    double acc = 0.0;
    for (const TemplatePoint& m : nodes) {
        const std::vector<double> f = eval_map(map, m);
        const std::vector<double> g = reference(m);
        if (g.size() != f.size()) throw KindMismatch("l2_map_distance: ambient dim mismatch");
        acc += squared_distance(f.data(), g.data(), f.size());
    }
    return std::sqrt(acc / static_cast<double>(nodes.size()));
}

inline double l2_map_distance(const SplineMap& map, const SplineMap& reference,
                              std::size_t n_quad) {
    if (map.kind != reference.kind) throw KindMismatch("l2_map_distance: template kind mismatch");
    return l2_map_distance(
        map, [&](const TemplatePoint& m) { return eval_map(reference, m); }, n_quad);
}

/// Distance to a constant map (e.g. the sample mean).
inline double l2_map_distance(const SplineMap& map, const std::vector<double>& constant,
                              std::size_t n_quad) {
    return l2_map_distance(
        map, [&](const TemplatePoint&) { return constant; }, n_quad);
}

inline std::vector<double> cloud_mean(const PointCloud& cloud) {
    std::vector<double> mean(cloud.cols(), 0.0);
    for (std::size_t i = 0; i < cloud.rows(); ++i)
        for (std::size_t j = 0; j < cloud.cols(); ++j) mean[j] += cloud(i, j);
    for (double& m : mean) m /= static_cast<double>(std::max<std::size_t>(1, cloud.rows()));
    return mean;
}

inline double cloud_diameter(const PointCloud& cloud) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < cloud.rows(); ++i)
        for (std::size_t j = i + 1; j < cloud.rows(); ++j)
            d2 = std::max(d2, squared_distance(cloud.row(i), cloud.row(j), cloud.cols()));
    return std::sqrt(d2);
}

/// Max over quadrature points of the distance from f(m) to the top-1 PCA
/// affine line of the cloud. Interval templates only.
inline double distance_to_pca_line(const SplineMap& map, const PointCloud& cloud,
                                   std::size_t n_quad) {
    if (map.kind != TemplateKind::Interval)
        throw KindMismatch("distance_to_pca_line: interval template required");
    const PcaResult p = pca(cloud, 1);
    const std::vector<TemplatePoint> nodes = quadrature_nodes(map.kind, n_quad);
    double worst = 0.0;
    for (const TemplatePoint& m : nodes) {
        const std::vector<double> f = eval_map(map, m);
        double along = 0.0;
        for (std::size_t j = 0; j < f.size(); ++j)
            along += (f[j] - p.mean[j]) * p.components(0, j);
        double d2 = 0.0;
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double resid = f[j] - p.mean[j] - along * p.components(0, j);
            d2 += resid * resid;
        }
        worst = std::max(worst, d2);
    }
    return std::sqrt(worst);
}

}  // namespace pme
