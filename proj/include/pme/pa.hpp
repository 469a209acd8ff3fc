#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pme/errors.hpp"
#include "pme/init.hpp"
#include "pme/projection.hpp"
#include "pme/spline.hpp"

namespace pme {

enum class InitStrategy {
    Interval,         // 1-d ISOMAP rescaled to [0,1]
    CircularRaw,      // angle of the centered raw coordinates
    CircularIsomap,   // 2-d ISOMAP, then circular projection
    SphericalRaw,     // center and normalize
    SphericalIsomap,  // 3-d ISOMAP, then normalize
    Provided,         // caller supplies the initial indices
};

struct PAConfig {
    double lambda = 1e-4;
    double eps_stop = 1e-5;
    std::size_t max_iter = 100;
    ProjectionConfig projection;
    InitStrategy init_strategy = InitStrategy::Interval;
    std::vector<TemplatePoint> provided_indices;  // used by InitStrategy::Provided
    std::optional<std::size_t> knot_cap;          // reduced-basis knot count
    IsomapConfig isomap;
    std::uint64_t seed = 0;  // knot subsampling stream

    void validate() const {
        if (lambda <= 0.0) throw InvalidInput("pa: lambda must be > 0");
        if (eps_stop <= 0.0) throw InvalidInput("pa: eps_stop must be > 0");
        if (max_iter < 1) throw InvalidInput("pa: max_iter must be >= 1");
    }
};

struct PAIterationRecord {
    std::size_t iter = 0;
    double fit_error = 0.0;  // D(f^n) with 1/N normalization
    double penalty = 0.0;
    double total = 0.0;      // L_{N,lambda}
    double eps = 0.0;        // |D^n - D^{n-1}| / D^{n-1}
};

struct PATrace {
    std::vector<PAIterationRecord> records;
    bool converged = false;
    std::size_t iterations_used = 0;
};

struct PAResult {
    SplineMap map;
    PATrace trace;
    std::vector<TemplatePoint> indices;
};

namespace detail {

inline std::vector<TemplatePoint> initialize_indices(const PointCloud& cloud,
                                                     TemplateKind kind, const PAConfig& cfg) {
    (void)kind;
    switch (cfg.init_strategy) {
        case InitStrategy::Interval: return interval_init(cloud, cfg.isomap);
        case InitStrategy::CircularRaw: return circular_init(cloud, false, cfg.isomap);
        case InitStrategy::CircularIsomap: return circular_init(cloud, true, cfg.isomap);
        case InitStrategy::SphericalRaw: return spherical_init(cloud, false, cfg.isomap);
        case InitStrategy::SphericalIsomap: return spherical_init(cloud, true, cfg.isomap);
        case InitStrategy::Provided:
            if (cfg.provided_indices.size() != cloud.rows())
                throw LengthMismatch("pa: provided indices length != cloud size");
            return cfg.provided_indices;
    }
    throw InvalidInput("pa: unknown init strategy");
}

inline InitStrategy default_strategy(TemplateKind kind) {
    switch (kind) {
        case TemplateKind::Interval: return InitStrategy::Interval;
        case TemplateKind::Circle: return InitStrategy::CircularRaw;
        case TemplateKind::Sphere: return InitStrategy::SphericalRaw;
    }
    return InitStrategy::Interval;
}

inline SplineMap fit_step(const PointCloud& cloud, const std::vector<TemplatePoint>& indices,
                          const PAConfig& cfg) {
    FitProblem problem{cloud, indices, cfg.lambda};
    if (cfg.knot_cap && *cfg.knot_cap < cloud.rows())
        return fit_spline_reduced(problem, *cfg.knot_cap, cfg.seed);
    return fit_spline(problem);
}

inline double fit_error_at(const SplineMap& map, const PointCloud& cloud,
                           const std::vector<TemplatePoint>& indices) {
    double e = 0.0;
    for (std::size_t i = 0; i < cloud.rows(); ++i) {
        const std::vector<double> f = eval_map(map, indices[i]);
        e += squared_distance(cloud.row(i), f.data(), cloud.cols());
    }
    return cloud.rows() > 0 ? e / static_cast<double>(cloud.rows()) : 0.0;
}

}  // namespace detail

/// Projection-Adaptation iteration: alternate nearest-point projection and
/// closed-form spline refit until the relative change of the fitting error
/// drops to eps_stop or max_iter is reached.
inline PAResult pa_fit(const PointCloud& cloud, TemplateKind kind, const PAConfig& cfg) {
    cfg.validate();
    const std::size_t n = cloud.rows();
    if (n < null_dim(kind) + 1) throw InvalidInput("pa_fit: too few points");
    if (cloud.cols() <= intrinsic_dim(kind)) throw InvalidInput("pa_fit: need D > d");

    PAResult result;
    std::vector<TemplatePoint> indices = detail::initialize_indices(cloud, kind, cfg);

    // f^(0) from the initial indices, then its own projection defines D(f^(0)).
    result.map = detail::fit_step(cloud, indices, cfg);
    indices = project_all(result.map, cloud, cfg.projection);
    double d_prev = detail::fit_error_at(result.map, cloud, indices);
    {
        const double pen = penalty(result.map);
        const double total = d_prev + cfg.lambda * pen;
        if (!std::isfinite(total)) throw NonFiniteLoss("pa_fit: non-finite initial loss");
        result.trace.records.push_back({0, d_prev, pen, total, 0.0});
    }
    result.indices = indices;

    if (d_prev == 0.0) {  // interpolating initial fit; relative rule undefined
        result.trace.converged = true;
        result.trace.iterations_used = 0;
        return result;
    }

    for (std::size_t iter = 1; iter <= cfg.max_iter; ++iter) {
        result.map = detail::fit_step(cloud, indices, cfg);
        const double d_cur = detail::fit_error_at(result.map, cloud, indices);
        const double pen = penalty(result.map);
        const double total = d_cur + cfg.lambda * pen;
        if (!std::isfinite(total)) {
            result.trace.iterations_used = iter;
            throw NonFiniteLoss("pa_fit: non-finite loss at iteration " + std::to_string(iter));
        }
        const double eps = std::abs(d_cur - d_prev) / d_prev;
        result.trace.records.push_back({iter, d_cur, pen, total, eps});
        result.trace.iterations_used = iter;
        result.indices = indices;

        if (eps <= cfg.eps_stop || d_cur == 0.0) {
            result.trace.converged = true;
            return result;
        }
        indices = project_all(result.map, cloud, cfg.projection);
        d_prev = d_cur;
    }
    result.trace.converged = false;
    return result;
}

struct SweepEntry {
    double lambda = 0.0;
    std::optional<PAResult> result;
    std::string error;  // set when the fit at this lambda failed
};

/// Runs pa_fit on each lambda of a strictly increasing grid. With
/// warm_start, each run is initialized from the previous run's final
/// indices. Per-lambda failures are recorded and the sweep continues.
inline std::vector<SweepEntry> lambda_sweep(const PointCloud& cloud, TemplateKind kind,
                                            const PAConfig& base_cfg,
                                            const std::vector<double>& lambdas,
                                            bool warm_start = false) {
    if (lambdas.empty()) throw InvalidInput("lambda_sweep: empty grid");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (lambdas[i] <= 0.0) throw InvalidInput("lambda_sweep: lambdas must be positive");
        if (i > 0 && lambdas[i] <= lambdas[i - 1])
            throw InvalidInput("lambda_sweep: lambdas must be strictly increasing");
    }
    std::vector<SweepEntry> out;
    out.reserve(lambdas.size());
    std::vector<TemplatePoint> warm_indices;
    for (const double lambda : lambdas) {
        PAConfig cfg = base_cfg;
        cfg.lambda = lambda;
        if (warm_start && !warm_indices.empty()) {
            cfg.init_strategy = InitStrategy::Provided;
            cfg.provided_indices = warm_indices;
        }
        SweepEntry entry;
        entry.lambda = lambda;
        try {
            entry.result = pa_fit(cloud, kind, cfg);
            if (warm_start) warm_indices = entry.result->indices;
        } catch (const Error& e) {
            entry.error = e.what();
        }
        out.push_back(std::move(entry));
    }
    return out;
}

}  // namespace pme
