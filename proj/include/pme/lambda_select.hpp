#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pme/errors.hpp"
#include "pme/pa.hpp"
#include "pme/templates.hpp"

namespace pme {

/// Nadaraya-Watson estimate of the conditional squared residual
/// Phi(m) = E(||R||^2 | M = m), with Gaussian weights on the template
/// geodesic distance.
struct PhiEstimate {
    TemplateKind kind = TemplateKind::Interval;
    std::vector<TemplatePoint> locations;
    std::vector<double> residuals;  // squared residuals, >= 0
    double bandwidth = 0.0;

    double operator()(const TemplatePoint& query) const {
        double wsum = 0.0, vsum = 0.0;
        double nearest = std::numeric_limits<double>::infinity();
        std::size_t nearest_i = 0;
        const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
        for (std::size_t i = 0; i < locations.size(); ++i) {
            const double d = template_distance(kind, query, locations[i]);
            if (d < nearest) {
                nearest = d;
                nearest_i = i;
            }
            const double w = std::exp(-d * d * inv);
            wsum += w;
            vsum += w * residuals[i];
        }
        if (wsum < 1e-300) return residuals[nearest_i];  // query far from all samples
        return vsum / wsum;
    }
};

/// Builds the residual regression. Default bandwidth: median pairwise
/// template distance scaled by N^(-1/5).
inline PhiEstimate estimate_phi(const std::vector<TemplatePoint>& locations,
                                const std::vector<double>& residuals, TemplateKind kind,
                                std::optional<double> bandwidth = std::nullopt) {
    if (locations.size() != residuals.size())
        throw LengthMismatch("estimate_phi: locations/residuals length mismatch");
    if (locations.size() < 5) throw TooFewPairs("estimate_phi: need at least 5 pairs");
    for (double r : residuals)
        if (!(r >= 0.0)) throw InvalidInput("estimate_phi: residuals must be >= 0");

    PhiEstimate est;
    est.kind = kind;
    est.locations = locations;
    est.residuals = residuals;
    if (bandwidth) {
        if (*bandwidth <= 0.0) throw InvalidInput("estimate_phi: bandwidth must be > 0");
        est.bandwidth = *bandwidth;
    } else {
        std::vector<double> dists;
        dists.reserve(locations.size() * (locations.size() - 1) / 2);
        for (std::size_t i = 0; i < locations.size(); ++i)
            for (std::size_t j = i + 1; j < locations.size(); ++j)
                dists.push_back(template_distance(kind, locations[i], locations[j]));
        std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2),
                         dists.end());
        const double median = dists[dists.size() / 2];
        const double n_rate = std::pow(static_cast<double>(locations.size()), -0.2);
        est.bandwidth = std::max(median * n_rate, 1e-8);
    }
    return est;
}

/// Monte-Carlo mean and variance of Phi(U) with U uniform on the template;
/// deterministic given seed.
inline std::pair<double, double> phi_moments(const PhiEstimate& est, std::size_t n_mc,
                                             std::uint64_t seed) {
    if (n_mc < 100) throw InvalidInput("phi_moments: n_mc must be >= 100");
    const std::vector<TemplatePoint> samples = uniform_sample(est.kind, n_mc, seed);
    double mean = 0.0;
    std::vector<double> values(n_mc);
    for (std::size_t i = 0; i < n_mc; ++i) {
        values[i] = est(samples[i]);
        mean += values[i];
    }
    mean /= static_cast<double>(n_mc);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n_mc);
    return {mean, std::max(0.0, var)};
}

/// Discrete inflection of the mean squared residual on log-log axes: the
/// index whose backward second difference of log(mean) vs log(lambda) is
/// largest. If the profile is linear (all second differences ~ 0) there is
/// no cutoff and the last index is returned.
inline std::size_t inflection_bound(const std::vector<double>& lambdas,
                                    const std::vector<double>& mean_phi) {
    const std::size_t n = lambdas.size();
    if (n < 4) throw InvalidInput("inflection_bound: need at least 4 grid points");
    if (mean_phi.size() != n) throw LengthMismatch("inflection_bound: length mismatch");

    std::vector<double> x(n), y(n);
    double y_lo = std::numeric_limits<double>::infinity();
    double y_hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::log(lambdas[i]);
        y[i] = std::log(std::max(mean_phi[i], 1e-300));
        y_lo = std::min(y_lo, y[i]);
        y_hi = std::max(y_hi, y[i]);
    }
    std::size_t best = n - 1;
    double best_d2 = 0.0;
    for (std::size_t i = 2; i < n; ++i) {
        const double s1 = (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
        const double s0 = (y[i - 1] - y[i - 2]) / (x[i - 1] - x[i - 2]);
        const double d2 = s1 - s0;
        if (d2 > best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    const double flat_tol = 1e-9 * std::max(1.0, y_hi - y_lo);
    if (best_d2 <= flat_tol) return n - 1;
    return best;
}

struct LambdaProfile {
    std::vector<double> lambdas;
    std::vector<double> mean_phi;
    std::vector<double> sd_phi;
    std::vector<double> cv;
    std::vector<bool> ok;                 // fit succeeded at this lambda
    std::vector<std::string> failure;     // reason when !ok
    std::size_t eligible_max_index = 0;   // inflection cutoff (inclusive)
    std::size_t selected_index = 0;
    double selected_lambda = 0.0;
    std::vector<PAResult> fits;           // per-lambda results (empty entry when failed)
};

/// Full selection pipeline: PA fit per lambda, residual regression,
/// Monte-Carlo CV, inflection upper bound, then argmin of CV over eligible
/// lambdas with ties to the smaller lambda.
inline LambdaProfile select_lambda(const PointCloud& cloud, TemplateKind kind,
                                   const PAConfig& pa_cfg, const std::vector<double>& lambdas,
                                   std::size_t n_mc, std::uint64_t seed) {
    if (lambdas.size() < 4) throw InvalidInput("select_lambda: need >= 4 lambdas");
    for (std::size_t i = 1; i < lambdas.size(); ++i)
        if (lambdas[i] <= lambdas[i - 1])
            throw InvalidInput("select_lambda: lambdas must be strictly increasing");

    const double mean_floor = 1e-15;  // interpolating fits give near-zero residuals
    LambdaProfile profile;
    profile.lambdas = lambdas;
    const std::size_t n = lambdas.size();
    profile.mean_phi.assign(n, 0.0);
    profile.sd_phi.assign(n, 0.0);
    profile.cv.assign(n, 0.0);
    profile.ok.assign(n, false);
    profile.failure.assign(n, "");
    profile.fits.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        PAConfig cfg = pa_cfg;
        cfg.lambda = lambdas[i];
        try {
            PAResult fit = pa_fit(cloud, kind, cfg);
            std::vector<double> residuals(cloud.rows());
            for (std::size_t r = 0; r < cloud.rows(); ++r) {
                const std::vector<double> f = eval_map(fit.map, fit.indices[r]);
                residuals[r] = squared_distance(cloud.row(r), f.data(), cloud.cols());
            }
            const PhiEstimate est = estimate_phi(fit.indices, residuals, kind);
            const auto [mean, var] = phi_moments(est, n_mc, seed + i);
            profile.mean_phi[i] = mean;
            profile.sd_phi[i] = std::sqrt(var);
            profile.cv[i] = mean > mean_floor ? profile.sd_phi[i] / mean : 0.0;
            profile.ok[i] = true;
            profile.fits[i] = std::move(fit);
        } catch (const Error& e) {
            profile.failure[i] = e.what();
        }
    }

    std::vector<double> ok_lambdas, ok_means;
    std::vector<std::size_t> ok_index;
    for (std::size_t i = 0; i < n; ++i) {
        if (!profile.ok[i]) continue;
        ok_lambdas.push_back(lambdas[i]);
        ok_means.push_back(profile.mean_phi[i]);
        ok_index.push_back(i);
    }
    if (ok_index.size() < 4) throw InvalidInput("select_lambda: fewer than 4 lambdas succeeded");

    profile.eligible_max_index = ok_index[inflection_bound(ok_lambdas, ok_means)];

    bool found = false;
    double best_cv = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (!profile.ok[i] || i > profile.eligible_max_index) continue;
        if (profile.cv[i] < best_cv) {  // strict: ties stay with the smaller lambda
            best_cv = profile.cv[i];
            profile.selected_index = i;
            found = true;
        }
    }
    if (!found) throw InvalidInput("select_lambda: no eligible lambda");
    profile.selected_lambda = lambdas[profile.selected_index];
    return profile;
}

}  // namespace pme
