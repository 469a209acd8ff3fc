#include <catch_amalgamated.hpp>
#include <numbers>

#include "pme/linalg.hpp"
#include "pme/spline.hpp"

using namespace pme;

namespace {

double objective(const SplineMap& map, const FitProblem& p) {
    const LossBreakdown l = loss(map, p.cloud, p.indices);
    return l.total;
}

// Independent minimizer: assemble the (d0+N)-coefficient normal equations of
// (1/N)||X - T theta - K alpha||^2 + lambda alpha' K alpha directly and solve.
SplineMap brute_force_fit(const FitProblem& p) {
    const TemplateKind kind = p.indices.front().kind;
    const std::size_t n = p.cloud.rows();
    const std::size_t d0 = null_dim(kind);
    const std::size_t nb = d0 + n;
    Matrix b(n, nb);  // [T | K]
    for (std::size_t i = 0; i < n; ++i) {
        const auto phi = null_basis(kind, p.indices[i]);
        for (std::size_t j = 0; j < d0; ++j) b(i, j) = phi[j];
        for (std::size_t l = 0; l < n; ++l)
            b(i, d0 + l) = kernel(kind, p.indices[i], p.indices[l]);
    }
    const Matrix k = gram(kind, p.indices);
    Matrix a = b.transposed() * b;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < nb; ++i)
        for (std::size_t j = 0; j < nb; ++j) {
            a(i, j) *= inv_n;
            if (i >= d0 && j >= d0) a(i, j) += p.lambda * k(i - d0, j - d0);
        }
    Matrix rhs = b.transposed() * p.cloud;
    for (double& v : rhs.data()) v *= inv_n;
    const Matrix c = solve_spd(a, rhs);

    SplineMap map;
    map.kind = kind;
    map.knots = p.indices;
    map.theta = Matrix(d0, p.cloud.cols());
    map.alpha = Matrix(n, p.cloud.cols());
    for (std::size_t j = 0; j < p.cloud.cols(); ++j) {
        for (std::size_t i = 0; i < d0; ++i) map.theta(i, j) = c(i, j);
        for (std::size_t l = 0; l < n; ++l) map.alpha(l, j) = c(d0 + l, j);
    }
    map.lambda = p.lambda;
    map.ambient_dim = p.cloud.cols();
    return map;
}

FitProblem random_problem(TemplateKind kind, std::size_t n, std::size_t dim, std::uint64_t seed,
                          double lambda) {
    FitProblem p;
    p.indices = uniform_sample(kind, n, seed);
    p.cloud = Matrix(n, dim);
    Rng rng(seed + 1000);
    for (double& v : p.cloud.data()) v = rng.normal();
    p.lambda = lambda;
    return p;
}

}  // namespace

TEST_CASE("fit_spline matches the brute-force representer oracle") {
    for (auto kind : {TemplateKind::Interval, TemplateKind::Circle, TemplateKind::Sphere}) {
        const FitProblem p = random_problem(kind, 20, 3, 42 + static_cast<int>(kind), 1e-3);
        const SplineMap fast = fit_spline(p);
        const SplineMap slow = brute_force_fit(p);
        const double of = objective(fast, p);
        const double os = objective(slow, p);
        CHECK(std::abs(of - os) <= 1e-8 * std::max(1.0, std::abs(os)));
    }
}

TEST_CASE("T' alpha = 0 after every fit") {
    for (auto kind : {TemplateKind::Interval, TemplateKind::Circle, TemplateKind::Sphere}) {
        const FitProblem p = random_problem(kind, 30, 2, 7 + static_cast<int>(kind), 1e-4);
        const SplineMap map = fit_spline(p);
        const std::size_t d0 = null_dim(kind);
        double alpha_norm = map.alpha.max_abs();
        for (std::size_t j = 0; j < d0; ++j) {
            for (std::size_t c = 0; c < map.ambient_dim; ++c) {
                double dot = 0.0;
                for (std::size_t i = 0; i < p.indices.size(); ++i) {
                    const auto phi = null_basis(kind, p.indices[i]);
                    dot += phi[j] * map.alpha(i, c);
                }
                CHECK(std::abs(dot) <= 1e-8 * std::max(1.0, alpha_norm));
            }
        }
    }
}

TEST_CASE("constant data on the circle is reproduced by the null space") {
    FitProblem p;
    p.indices = uniform_sample(TemplateKind::Circle, 15, 3);
    p.cloud = Matrix(15, 2);
    for (std::size_t i = 0; i < 15; ++i) {
        p.cloud(i, 0) = 2.5;
        p.cloud(i, 1) = -1.0;
    }
    p.lambda = 1e-4;
    const SplineMap map = fit_spline(p);
    CHECK(map.theta(0, 0) == Catch::Approx(2.5).margin(1e-8));
    CHECK(map.theta(0, 1) == Catch::Approx(-1.0).margin(1e-8));
    CHECK(map.alpha.max_abs() <= 1e-8);
    const auto f = eval_map(map, TemplatePoint::circle(0.123));
    CHECK(f[0] == Catch::Approx(2.5).margin(1e-8));
    CHECK(penalty(map) <= 1e-10);
}

TEST_CASE("affine interval data recovers theta = (1, 2)") {
    FitProblem p;
    p.cloud = Matrix(5, 1);
    for (std::size_t i = 0; i < 5; ++i) {
        const double t = static_cast<double>(i) / 4.0;
        p.indices.push_back(TemplatePoint::interval(t));
        p.cloud(i, 0) = 2.0 * t + 1.0;
    }
    for (double lambda : {1e-6, 1e-2, 10.0}) {
        p.lambda = lambda;
        const SplineMap map = fit_spline(p);
        CHECK(map.theta(0, 0) == Catch::Approx(1.0).margin(1e-7));
        CHECK(map.theta(1, 0) == Catch::Approx(2.0).margin(1e-7));
        CHECK(map.alpha.max_abs() <= 1e-7);
        CHECK(eval_map(map, TemplatePoint::interval(0.5))[0] ==
              Catch::Approx(2.0).margin(1e-7));
        CHECK(penalty(map) <= 1e-10);
    }
}

TEST_CASE("near-interpolation at lambda = 1e-12") {
    FitProblem p;
    const std::size_t n = 40;
    p.cloud = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        p.indices.push_back(TemplatePoint::interval(t));
        p.cloud(i, 0) = std::sin(2.0 * std::numbers::pi * t);
        p.cloud(i, 1) = std::cos(3.0 * t);
    }
    p.lambda = 1e-12;
    const SplineMap map = fit_spline(p);
    for (std::size_t i = 0; i < n; ++i) {
        const auto f = eval_map(map, p.indices[i]);
        CHECK(std::sqrt(squared_distance(f.data(), p.cloud.row(i), 2)) <= 1e-4);
    }
}

TEST_CASE("penalty equals finite-difference quadrature of the bending energy") {
    // noiseless sine on the interval
    FitProblem p;
    const std::size_t n = 200;
    p.cloud = Matrix(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        p.indices.push_back(TemplatePoint::interval(t));
        p.cloud(i, 0) = std::sin(2.0 * std::numbers::pi * t);
    }
    p.lambda = 1e-6;
    const SplineMap map = fit_spline(p);

    const std::size_t grid = 10000;
    const double h = 1.0 / static_cast<double>(grid);
    double quad = 0.0;
    for (std::size_t i = 1; i + 1 < grid; ++i) {
        const double t = static_cast<double>(i) * h;
        const double fm = eval_map(map, TemplatePoint::interval(t - h))[0];
        const double f0 = eval_map(map, TemplatePoint::interval(t))[0];
        const double fp = eval_map(map, TemplatePoint::interval(t + h))[0];
        const double second = (fp - 2.0 * f0 + fm) / (h * h);
        quad += second * second * h;
    }
    CHECK(penalty(map) == Catch::Approx(quad).epsilon(1e-2));
}

TEST_CASE("penalty decreases as lambda increases on fixed data") {
    const FitProblem base = random_problem(TemplateKind::Circle, 60, 2, 11, 1e-6);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {1e-6, 1e-4, 1e-2}) {
        FitProblem p = base;
        p.lambda = lambda;
        const double pen = penalty(fit_spline(p));
        CHECK(pen < prev);
        prev = pen;
    }
}

TEST_CASE("loss identities") {
    Rng rng(23);
    PointCloud cloud(30, 2);
    for (double& v : cloud.data()) v = rng.normal();
    std::vector<double> mean(2, 0.0);
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 0; j < 2; ++j) mean[j] += cloud(i, j) / 30.0;

    // constant map at the sample mean: fit_error = trace of 1/N covariance
    SplineMap constant;
    constant.kind = TemplateKind::Circle;
    constant.knots = {TemplatePoint::circle(0.0)};
    constant.alpha = Matrix(1, 2);
    constant.theta = Matrix(1, 2);
    constant.theta(0, 0) = mean[0];
    constant.theta(0, 1) = mean[1];
    constant.lambda = 1.0;
    constant.ambient_dim = 2;
    std::vector<TemplatePoint> idx(30, TemplatePoint::circle(0.25));
    const LossBreakdown l = loss(constant, cloud, idx);
    double trace_cov = 0.0;
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            const double c = cloud(i, j) - mean[j];
            trace_cov += c * c / 30.0;
        }
    CHECK(l.fit_error == Catch::Approx(trace_cov).epsilon(1e-10));
    CHECK(l.total == Catch::Approx(l.fit_error).margin(1e-12));  // penalty 0

    CHECK_THROWS_AS(loss(constant, cloud, {}), LengthMismatch);
}

TEST_CASE("first-order stationarity of the fitted coefficients") {
    const FitProblem p = random_problem(TemplateKind::Interval, 25, 2, 31, 1e-3);
    const SplineMap map = fit_spline(p);
    const double base = objective(map, p);
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        SplineMap perturbed = map;
        double norm2 = 0.0;
        std::vector<double> d_alpha(map.alpha.data().size());
        std::vector<double> d_theta(map.theta.data().size());
        for (double& v : d_alpha) {
            v = rng.normal();
            norm2 += v * v;
        }
        for (double& v : d_theta) {
            v = rng.normal();
            norm2 += v * v;
        }
        const double scale = 1e-3 / std::sqrt(norm2);
        for (std::size_t i = 0; i < d_alpha.size(); ++i)
            perturbed.alpha.data()[i] += scale * d_alpha[i];
        for (std::size_t i = 0; i < d_theta.size(); ++i)
            perturbed.theta.data()[i] += scale * d_theta[i];
        CHECK(objective(perturbed, p) >= base - 1e-12);
    }
}

TEST_CASE("fit_spline precondition failures") {
    FitProblem p;
    p.indices = uniform_sample(TemplateKind::Interval, 5, 1);
    p.cloud = Matrix(4, 2);
    p.lambda = 1e-3;
    CHECK_THROWS_AS(fit_spline(p), LengthMismatch);
    p.cloud = Matrix(5, 2);
    p.lambda = 0.0;
    CHECK_THROWS_AS(fit_spline(p), InvalidInput);
    // identical interval knots make T rank deficient
    FitProblem q;
    q.indices.assign(6, TemplatePoint::interval(0.5));
    q.cloud = Matrix(6, 2, 1.0);
    q.lambda = 1e-3;
    CHECK_THROWS_AS(fit_spline(q), RankDeficientDesign);
}

TEST_CASE("reduced-basis fit: no reduction reproduces the exact solve") {
    const FitProblem p = random_problem(TemplateKind::Circle, 20, 2, 19, 1e-4);
    const SplineMap full = fit_spline(p);
    const SplineMap red = fit_spline_reduced(p, 20, 5);
    CHECK(std::abs(objective(full, p) - objective(red, p)) <=
          1e-8 * std::max(1.0, objective(full, p)));
}

TEST_CASE("reduced-basis fit stays within 2x fit error on smooth data") {
    // half-circle curve data (the open-curve generator's shape)
    FitProblem p;
    const std::size_t n = 120;
    p.cloud = Matrix(n, 2);
    Rng rng(3);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = rng.uniform();
        p.indices.push_back(TemplatePoint::interval(t));
        p.cloud(i, 0) = std::cos(std::numbers::pi * t);
        p.cloud(i, 1) = std::sin(std::numbers::pi * t);
    }
    p.lambda = 1e-5;
    const SplineMap full = fit_spline(p);
    const SplineMap red = fit_spline_reduced(p, n / 2, 9);
    const double fe_full = loss(full, p.cloud, p.indices).fit_error;
    const double fe_red = loss(red, p.cloud, p.indices).fit_error;
    CHECK(fe_red <= 2.0 * std::max(fe_full, 1e-12));
}

TEST_CASE("reduced-basis fit validates max_knots") {
    const FitProblem p = random_problem(TemplateKind::Interval, 10, 1, 2, 1e-3);
    CHECK_THROWS_AS(fit_spline_reduced(p, 2, 0), InvalidInput);  // needs >= d0+1 = 3
}

TEST_CASE("collapse toward the sample mean as lambda grows") {
    const FitProblem base = random_problem(TemplateKind::Circle, 50, 2, 47, 1.0);
    std::vector<double> mean(2, 0.0);
    for (std::size_t i = 0; i < 50; ++i)
        for (std::size_t j = 0; j < 2; ++j) mean[j] += base.cloud(i, j) / 50.0;
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {1.0, 1e3, 1e6}) {
        FitProblem p = base;
        p.lambda = lambda;
        const SplineMap map = fit_spline(p);
        double worst = 0.0;
        for (const auto& m : uniform_sample(TemplateKind::Circle, 100, 8)) {
            const auto f = eval_map(map, m);
            worst = std::max(worst, std::sqrt(squared_distance(f.data(), mean.data(), 2)));
        }
        CHECK(worst < prev);
        prev = worst;
    }
    CHECK(prev <= 1e-3);
}
