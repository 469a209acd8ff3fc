#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <vector>

#include "pme/errors.hpp"
#include "pme/linalg.hpp"
#include "pme/matrix.hpp"
#include "pme/parallel.hpp"
#include "pme/templates.hpp"

namespace pme {

struct IsomapConfig {
    std::optional<std::size_t> k;  // neighbors; smallest connected k if absent
    std::size_t target_dim = 1;

    void validate(std::size_t n) const {
        if (target_dim < 1 || target_dim > 3)
            throw InvalidInput("isomap: target_dim must be in {1,2,3}");
        if (k && (*k < 1 || *k >= n)) throw InvalidInput("isomap: need 1 <= k < N");
    }
};

/// Symmetrized k-nearest-neighbor graph: edge (i,j) present iff j is among
/// i's k nearest or vice versa. Non-edges are +inf, diagonal 0.
inline Matrix knn_graph(const PointCloud& cloud, std::size_t k) {
    const std::size_t n = cloud.rows();
    if (k < 1 || k >= n) throw InvalidInput("knn_graph: need 1 <= k < N");
    const double inf = std::numeric_limits<double>::infinity();
    Matrix adj(n, n, inf);
    for (std::size_t i = 0; i < n; ++i) adj(i, i) = 0.0;

    std::vector<std::vector<std::pair<double, std::size_t>>> nearest(n);
    parallel_for(n, [&](std::size_t i) {
        std::vector<std::pair<double, std::size_t>> d;
        d.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            d.emplace_back(squared_distance(cloud.row(i), cloud.row(j), cloud.cols()), j);
        }
        std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
        d.resize(k);
        nearest[i] = std::move(d);
    });
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [sq, j] : nearest[i]) {
            const double w = std::sqrt(sq);
            adj(i, j) = w;
            adj(j, i) = w;
        }
    }
    return adj;
}

/// All-pairs shortest paths by Dijkstra from each source. +inf marks
/// disconnected pairs. Per-source runs execute concurrently.
inline Matrix graph_geodesics(const Matrix& adjacency) {
    const std::size_t n = adjacency.rows();
    if (adjacency.cols() != n) throw InvalidInput("graph_geodesics: adjacency must be square");
    const double inf = std::numeric_limits<double>::infinity();

    // Compact adjacency lists; the matrix form is mostly +inf.
    std::vector<std::vector<std::pair<std::size_t, double>>> edges(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && std::isfinite(adjacency(i, j))) edges[i].emplace_back(j, adjacency(i, j));

    Matrix dist(n, n, inf);
    parallel_for(n, [&](std::size_t src) {
        std::vector<double> d(n, inf);
        d[src] = 0.0;
        using Item = std::pair<double, std::size_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        heap.emplace(0.0, src);
        while (!heap.empty()) {
            const auto [du, u] = heap.top();
            heap.pop();
            if (du > d[u]) continue;
            for (const auto& [v, w] : edges[u]) {
                const double nd = du + w;
                if (nd < d[v]) {
                    d[v] = nd;
                    heap.emplace(nd, v);
                }
            }
        }
        for (std::size_t j = 0; j < n; ++j) dist(src, j) = d[j];
    });
    return dist;
}

namespace detail {

inline bool graph_connected(const Matrix& adj) {
    const std::size_t n = adj.rows();
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t v = 0; v < n; ++v) {
            if (!seen[v] && u != v && std::isfinite(adj(u, v))) {
                seen[v] = 1;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == n;
}

/// Smallest k whose kNN graph closes a loop-shaped cloud. Connectivity is
/// not enough: the connected graph may leave the largest sampling gap
/// open, which folds the MDS embedding into an arc and scrambles the
/// angles. Detection: on a closed loop the geodesically farthest pair is
/// ambient-far (loop-antipodal); on an open loop it is the two ambient-
/// close flanks of the unclosed gap.
inline std::size_t smallest_cyclic_k(const PointCloud& cloud) {
    const std::size_t n = cloud.rows();
    const std::size_t d = cloud.cols();
    double diam2 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            diam2 = std::max(diam2, squared_distance(cloud.row(i), cloud.row(j), d));

    for (std::size_t k = 1; k + 1 < n; ++k) {
        const Matrix adj = knn_graph(cloud, k);
        if (!graph_connected(adj)) continue;
        const Matrix geo = graph_geodesics(adj);
        double best = -1.0;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (geo(i, j) > best) {
                    best = geo(i, j);
                    bi = i;
                    bj = j;
                }
        const double ambient2 = squared_distance(cloud.row(bi), cloud.row(bj), d);
        if (ambient2 >= 0.09 * diam2) return k;  // farthest pair is 0.3 diam apart
    }
    return n - 1;
}

}  // namespace detail

/// ISOMAP embedding: kNN graph geodesics followed by classical MDS. When k
/// is absent, the smallest k producing a connected graph is chosen.
inline Matrix isomap(const PointCloud& cloud, const IsomapConfig& cfg) {
    const std::size_t n = cloud.rows();
    cfg.validate(n);
    if (n < cfg.target_dim + 1) throw InvalidInput("isomap: need N >= target_dim + 1");

    Matrix adj;
    if (cfg.k) {
        adj = knn_graph(cloud, *cfg.k);
        if (!detail::graph_connected(adj)) throw Disconnected("isomap: kNN graph disconnected");
    } else {
        bool found = false;
        for (std::size_t k = 1; k < n; ++k) {
            adj = knn_graph(cloud, k);
            if (detail::graph_connected(adj)) {
                found = true;
                break;
            }
        }
        if (!found) throw Disconnected("isomap: no k < N connects the graph");
    }
    return classical_mds(graph_geodesics(adj), cfg.target_dim);
}

namespace detail {

inline void require_not_constant(const PointCloud& cloud) {
    for (std::size_t i = 1; i < cloud.rows(); ++i)
        for (std::size_t j = 0; j < cloud.cols(); ++j)
            if (cloud(i, j) != cloud(0, j)) return;
    throw DegenerateCloud("all points identical");
}

/// Centers coordinates; rows that land exactly at the origin get a
/// deterministic 1e-12 nudge along the first axis.
inline Matrix center_with_nudge(const Matrix& coords) {
    Matrix out = coords;
    const std::size_t n = out.rows(), d = out.cols();
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += out(i, j);
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double norm = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            out(i, j) -= mean[j];
            norm += out(i, j) * out(i, j);
        }
        if (norm == 0.0) out(i, 0) = 1e-12;
    }
    return out;
}

}  // namespace detail

/// Interval initialization: 1-d ISOMAP coordinates rescaled affinely to
/// [0,1], min to 0 and max to 1.
inline std::vector<TemplatePoint> interval_init(const PointCloud& cloud, IsomapConfig cfg = {}) {
    if (cloud.rows() < 2) throw DegenerateCloud("interval_init: need N >= 2");
    detail::require_not_constant(cloud);
    cfg.target_dim = 1;
    const Matrix y = isomap(cloud, cfg);
    double lo = y(0, 0), hi = y(0, 0);
    for (std::size_t i = 1; i < y.rows(); ++i) {
        lo = std::min(lo, y(i, 0));
        hi = std::max(hi, y(i, 0));
    }
    if (hi <= lo) throw DegenerateCloud("interval_init: degenerate 1-d embedding");
    std::vector<TemplatePoint> out;
    out.reserve(y.rows());
    for (std::size_t i = 0; i < y.rows(); ++i)
        out.push_back(TemplatePoint::interval((y(i, 0) - lo) / (hi - lo)));
    return out;
}

/// Circular projection: center the (optionally 2-d ISOMAP-embedded)
/// coordinates and read the angle, t = atan2(y, x) / 2pi mod 1.
inline std::vector<TemplatePoint> circular_init(const PointCloud& cloud, bool use_isomap,
                                                IsomapConfig cfg = {}) {
    if (cloud.rows() < 3) throw InvalidInput("circular_init: need N >= 3");
    detail::require_not_constant(cloud);
    Matrix coords;
    if (use_isomap) {
        cfg.target_dim = 2;
        // close the loop: plain connectivity can leave the largest sampling
        // gap open, which folds the embedding and scrambles the angles
        if (!cfg.k) cfg.k = detail::smallest_cyclic_k(cloud);
        coords = isomap(cloud, cfg);
    } else {
        if (cloud.cols() < 2) throw InvalidInput("circular_init: need D >= 2");
        coords = Matrix(cloud.rows(), 2);
        for (std::size_t i = 0; i < cloud.rows(); ++i) {
            coords(i, 0) = cloud(i, 0);
            coords(i, 1) = cloud(i, 1);
        }
    }
    coords = detail::center_with_nudge(coords);
    std::vector<TemplatePoint> out;
    out.reserve(coords.rows());
    for (std::size_t i = 0; i < coords.rows(); ++i) {
        const double t =
            detail::fractional_part(std::atan2(coords(i, 1), coords(i, 0)) /
                                    (2.0 * std::numbers::pi));
        out.push_back(TemplatePoint::circle(t < 1.0 ? t : 0.0));
    }
    return out;
}

/// Spherical normalization: center then divide by the Euclidean norm,
/// optionally after a 3-d ISOMAP step.
inline std::vector<TemplatePoint> spherical_init(const PointCloud& cloud, bool use_isomap,
                                                 IsomapConfig cfg = {}) {
    if (cloud.rows() < 4) throw InvalidInput("spherical_init: need N >= 4");
    detail::require_not_constant(cloud);
    Matrix coords;
    if (use_isomap) {
        cfg.target_dim = 3;
        if (!cfg.k) cfg.k = detail::smallest_cyclic_k(cloud);
        coords = isomap(cloud, cfg);
    } else {
        if (cloud.cols() != 3) throw InvalidInput("spherical_init: need D = 3 without ISOMAP");
        coords = cloud;
    }
    coords = detail::center_with_nudge(coords);
    std::vector<TemplatePoint> out;
    out.reserve(coords.rows());
    for (std::size_t i = 0; i < coords.rows(); ++i) {
        const double n = std::sqrt(coords(i, 0) * coords(i, 0) + coords(i, 1) * coords(i, 1) +
                                   coords(i, 2) * coords(i, 2));
        out.push_back(TemplatePoint::sphere(coords(i, 0) / n, coords(i, 1) / n, coords(i, 2) / n));
    }
    return out;
}

}  // namespace pme
