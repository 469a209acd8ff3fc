#include <catch_amalgamated.hpp>
#include <numbers>

#include "pme/metrics.hpp"
#include "pme/spline.hpp"

using namespace pme;

namespace {

PointCloud circle_samples(double radius, std::size_t n) {
    PointCloud out(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(i) /
                         static_cast<double>(n);
        out(i, 0) = radius * std::cos(a);
        out(i, 1) = radius * std::sin(a);
    }
    return out;
}

SplineMap constant_map(TemplateKind kind, const std::vector<double>& c) {
    SplineMap m;
    m.kind = kind;
    m.knots = {kind == TemplateKind::Sphere ? TemplatePoint::sphere(0, 0, 1)
               : kind == TemplateKind::Circle ? TemplatePoint::circle(0.0)
                                              : TemplatePoint::interval(0.0)};
    m.ambient_dim = c.size();
    m.alpha = Matrix(1, c.size());
    m.theta = Matrix(null_dim(kind), c.size());
    for (std::size_t j = 0; j < c.size(); ++j) m.theta(0, j) = c[j];
    m.lambda = 1.0;
    return m;
}

}  // namespace

TEST_CASE("hausdorff basics") {
    PointCloud a(1, 1);
    PointCloud b(1, 1);
    b(0, 0) = 3.0;
    CHECK(hausdorff(a, a) == 0.0);
    CHECK(hausdorff(a, b) == Catch::Approx(3.0));
    CHECK_THROWS_AS(hausdorff(PointCloud(0, 1), a), EmptySet);
    CHECK_THROWS_AS(hausdorff(a, PointCloud(1, 2)), LengthMismatch);
}

TEST_CASE("hausdorff between concentric circles") {
    const PointCloud inner = circle_samples(1.0, 2000);
    const PointCloud outer = circle_samples(2.0, 2000);
    CHECK(hausdorff(inner, outer) == Catch::Approx(1.0).margin(0.01));
}

TEST_CASE("hausdorff symmetry and triangle inequality on random sets") {
    Rng rng(6);
    for (int trial = 0; trial < 5; ++trial) {
        PointCloud a(20, 2), b(30, 2), c(15, 2);
        for (double& v : a.data()) v = rng.uniform(-1.0, 1.0);
        for (double& v : b.data()) v = rng.uniform(-1.0, 1.0);
        for (double& v : c.data()) v = rng.uniform(-1.0, 1.0);
        const double ab = hausdorff(a, b);
        CHECK(ab == hausdorff(b, a));
        CHECK(ab <= hausdorff(a, c) + hausdorff(c, b) + 1e-12);
    }
}

TEST_CASE("l2_map_distance identities") {
    const auto c1 = std::vector<double>{1.0, 2.0};
    const auto c2 = std::vector<double>{4.0, 6.0};
    const SplineMap m1 = constant_map(TemplateKind::Circle, c1);
    CHECK(l2_map_distance(m1, m1, 200) == Catch::Approx(0.0).margin(1e-14));
    CHECK(l2_map_distance(m1, c2, 200) == Catch::Approx(5.0).epsilon(1e-12));
    CHECK_THROWS_AS(l2_map_distance(m1, c2, 50), InvalidInput);
    const SplineMap wrong = constant_map(TemplateKind::Interval, c1);
    CHECK_THROWS_AS(l2_map_distance(m1, wrong, 200), KindMismatch);
}

TEST_CASE("sample_map output shape and values for a constant map") {
    const SplineMap m = constant_map(TemplateKind::Sphere, {1.0, 0.0, 2.0});
    const PointCloud s = sample_map(m, 150);
    REQUIRE(s.rows() == 150);
    REQUIRE(s.cols() == 3);
    for (std::size_t i = 0; i < 150; ++i) {
        CHECK(s(i, 0) == Catch::Approx(1.0).margin(1e-12));
        CHECK(s(i, 2) == Catch::Approx(2.0).margin(1e-12));
    }
}

TEST_CASE("distance_to_pca_line oracle cases") {
    // cloud along the line y = 2x, plus an affine map exactly on that line
    PointCloud cloud(5, 2);
    for (std::size_t i = 0; i < 5; ++i) {
        const double t = static_cast<double>(i) - 2.0;
        cloud(i, 0) = t;
        cloud(i, 1) = 2.0 * t;
    }
    FitProblem p;
    p.cloud = cloud;
    for (std::size_t i = 0; i < 5; ++i)
        p.indices.push_back(TemplatePoint::interval(static_cast<double>(i) / 4.0));
    p.lambda = 1e-6;
    const SplineMap on_line = fit_spline(p);
    CHECK(distance_to_pca_line(on_line, cloud, 200) <= 1e-6);

    // constant map at the mean also lies on the line
    const SplineMap at_mean = constant_map(TemplateKind::Interval, cloud_mean(cloud));
    CHECK(distance_to_pca_line(at_mean, cloud, 200) <= 1e-10);

    const SplineMap circle = constant_map(TemplateKind::Circle, {0.0, 0.0});
    CHECK_THROWS_AS(distance_to_pca_line(circle, cloud, 200), KindMismatch);
}

TEST_CASE("cloud mean and diameter") {
    PointCloud cloud(2, 2);
    cloud(0, 0) = -1.0;
    cloud(1, 0) = 3.0;
    const auto mean = cloud_mean(cloud);
    CHECK(mean[0] == Catch::Approx(1.0));
    CHECK(mean[1] == Catch::Approx(0.0));
    CHECK(cloud_diameter(cloud) == Catch::Approx(4.0));
}
