#include <catch_amalgamated.hpp>
#include <numbers>

#include "pme/projection.hpp"

using namespace pme;

namespace {

// Map whose image is the unit circle: f(t) = (cos 2pi t, sin 2pi t), built as
// a near-interpolating spline fit of dense noiseless samples.
SplineMap unit_circle_map() {
    FitProblem p;
    const std::size_t n = 80;
    p.cloud = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n);
        p.indices.push_back(TemplatePoint::circle(t));
        p.cloud(i, 0) = std::cos(2.0 * std::numbers::pi * t);
        p.cloud(i, 1) = std::sin(2.0 * std::numbers::pi * t);
    }
    p.lambda = 1e-10;
    return fit_spline(p);
}

SplineMap unit_sphere_map() {
    FitProblem p;
    const std::size_t n = 100;
    p.indices = fibonacci_sphere(n);
    p.cloud = Matrix(n, 3);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < 3; ++j) p.cloud(i, j) = p.indices[i].v[j];
    p.lambda = 1e-8;
    return fit_spline(p);
}

SplineMap random_interval_map(std::uint64_t seed) {
    FitProblem p;
    const std::size_t n = 30;
    p.cloud = Matrix(n, 2);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        p.indices.push_back(TemplatePoint::interval(t));
        p.cloud(i, 0) = t + 0.1 * rng.normal();
        p.cloud(i, 1) = std::sin(3.0 * t) + 0.1 * rng.normal();
    }
    p.lambda = 1e-4;
    return fit_spline(p);
}

}  // namespace

TEST_CASE("projection onto the unit circle: closed-form oracle") {
    const SplineMap map = unit_circle_map();
    const TemplatePoint m = project_point(map, {2.0, 0.0});
    // nearest point of the circle to (2,0) is angle 0
    const double wrapped = std::min(m.t, 1.0 - m.t);
    CHECK(wrapped <= 1e-4);

    // generic exterior point: nearest angle is atan2(y, x)
    const TemplatePoint m2 = project_point(map, {1.0, 1.5});
    const double expect = std::atan2(1.5, 1.0) / (2.0 * std::numbers::pi);
    CHECK(std::abs(m2.t - expect) <= 1e-4);
}

TEST_CASE("exact grid ties break to the smallest index") {
    // a constant map makes every grid node exactly equidistant, so the
    // argmin scan must return node 0 and refinement stays in its cell
    SplineMap m;
    m.kind = TemplateKind::Interval;
    m.knots = {TemplatePoint::interval(0.0)};
    m.ambient_dim = 2;
    m.alpha = Matrix(1, 2);
    m.theta = Matrix(2, 2);
    m.theta(0, 0) = 1.0;
    m.theta(0, 1) = -2.0;
    m.lambda = 1.0;
    const TemplatePoint p = project_point(m, {5.0, 5.0});
    CHECK(p.t <= 1e-3);  // index 0 wins all-equal comparisons
}

TEST_CASE("projection of an on-curve point returns a near-zero distance") {
    const SplineMap map = random_interval_map(5);
    const auto x = eval_map(map, TemplatePoint::interval(0.37));
    const TemplatePoint m = project_point(map, x);
    const auto fx = eval_map(map, m);
    CHECK(std::sqrt(squared_distance(fx.data(), x.data(), 2)) <= 1e-6);
}

TEST_CASE("1-d projection beats a 10x finer reference grid") {
    for (std::uint64_t seed : {1ULL, 2ULL}) {
        const SplineMap map = random_interval_map(seed);
        ProjectionConfig cfg;
        Rng rng(seed + 100);
        for (int trial = 0; trial < 40; ++trial) {
            const std::vector<double> x{rng.uniform(-1.0, 2.0), rng.uniform(-2.0, 2.0)};
            const TemplatePoint m = project_point(map, x, cfg);
            const double got = squared_distance(eval_map(map, m).data(), x.data(), 2);
            double ref = std::numeric_limits<double>::infinity();
            const std::size_t fine = cfg.grid_size * 10;
            for (std::size_t j = 0; j <= fine; ++j) {
                const double t = static_cast<double>(j) / static_cast<double>(fine);
                ref = std::min(ref, squared_distance(
                                        eval_map(map, TemplatePoint::interval(t)).data(),
                                        x.data(), 2));
            }
            CHECK(std::sqrt(got) <= std::sqrt(ref) + 1e-8);
        }
    }
}

TEST_CASE("circle projection handles the wrap-around cell") {
    const SplineMap map = unit_circle_map();
    // points just below angle 0 should project near t ~ 1-epsilon, not get
    // stuck at the seam
    const double a = -0.01;
    const TemplatePoint m = project_point(map, {2.0 * std::cos(a), 2.0 * std::sin(a)});
    const double expect = detail::fractional_part(a / (2.0 * std::numbers::pi));
    const double diff = std::abs(m.t - expect);
    CHECK(std::min(diff, 1.0 - diff) <= 1e-4);
}

TEST_CASE("sphere projection of an exterior point along the axis") {
    const SplineMap map = unit_sphere_map();
    const std::vector<double> x{0.0, 0.0, 5.0};
    const TemplatePoint m = project_point(map, x);
    // the fitted surface ripples slightly, so compare against a dense
    // reference lattice instead of the ideal pole
    const double got = std::sqrt(squared_distance(eval_map(map, m).data(), x.data(), 3));
    double ref = std::numeric_limits<double>::infinity();
    for (const auto& node : fibonacci_sphere(20000)) {
        const auto f = eval_map(map, node);
        ref = std::min(ref, std::sqrt(squared_distance(f.data(), x.data(), 3)));
    }
    CHECK(got <= ref + 1e-6);
    // and the minimizer still sits near the pole
    CHECK(template_distance(TemplateKind::Sphere, m, TemplatePoint::sphere(0.0, 0.0, 1.0)) <=
          0.05);
}

TEST_CASE("project_point rejects bad input") {
    const SplineMap map = unit_circle_map();
    CHECK_THROWS_AS(project_point(map, {1.0}), InvalidInput);
    CHECK_THROWS_AS(project_point(map, {1.0, std::nan("")}), InvalidInput);
}

TEST_CASE("project_all equals the sequential per-point result") {
    const SplineMap map = random_interval_map(9);
    Rng rng(200);
    PointCloud cloud(50, 2);
    for (double& v : cloud.data()) v = rng.uniform(-2.0, 2.0);
    const auto batch = project_all(map, cloud);
    REQUIRE(batch.size() == 50);
    for (std::size_t i = 0; i < 50; ++i) {
        const TemplatePoint single =
            project_point(map, {cloud(i, 0), cloud(i, 1)});
        CHECK(batch[i].t == single.t);
    }
}

TEST_CASE("project_all trivial cases") {
    const SplineMap map = unit_circle_map();
    CHECK(project_all(map, PointCloud(0, 2)).empty());
    PointCloud same(5, 2);
    for (std::size_t i = 0; i < 5; ++i) {
        same(i, 0) = 1.3;
        same(i, 1) = 0.4;
    }
    const auto idx = project_all(map, same);
    for (std::size_t i = 1; i < 5; ++i) CHECK(idx[i].t == idx[0].t);
}

TEST_CASE("projection is deterministic and idempotent") {
    const SplineMap map = random_interval_map(13);
    const std::vector<double> x{0.3, -0.8};
    const TemplatePoint a = project_point(map, x);
    const TemplatePoint b = project_point(map, x);
    CHECK(a.t == b.t);
    // projecting the image of a projection moves the image by <= 1e-8
    const auto fa = eval_map(map, a);
    const TemplatePoint c = project_point(map, fa);
    const auto fc = eval_map(map, c);
    CHECK(std::sqrt(squared_distance(fa.data(), fc.data(), 2)) <= 1e-8);
}

TEST_CASE("projection config validation") {
    ProjectionConfig cfg;
    cfg.grid_size = 1;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = ProjectionConfig{};
    cfg.circle_endpoint_eps = 0.1;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}
