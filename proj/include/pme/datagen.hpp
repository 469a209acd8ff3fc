#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pme/errors.hpp"
#include "pme/matrix.hpp"
#include "pme/rng.hpp"
#include "pme/templates.hpp"

namespace pme {

enum class Mechanism {
    HalfCircle,      // (cos pi t, sin pi t), Interval latent, D=2
    FlowerBoundary,  // r(t)(cos 2pi t, sin 2pi t), r = 1 + 0.3 sin(2 pi p t), Circle, D=2
    FlowerSurface,   // star-shaped closed surface, Sphere latent, D=3
    MoonSurface,     // bent sphere, b=1.2pi rho=2 R=1, Sphere latent, D=3
    Sine3D,          // O (t, sin 2pi t, 0), Interval, D=3
    Helix3D,         // O (cos 2pi t, sin 2pi t, 3t), Interval, D=3
    Star1D3D,        // (r(t) cos 2pi t, r(t) sin 2pi t, sin 3pi t), Circle, D=3
    Moon1D3D,        // cashew-shaped closed curve, Circle, D=3
};

struct GeneratorSpec {
    Mechanism mechanism = Mechanism::HalfCircle;
    std::size_t n = 100;
    double sigma2 = 0.0;
    std::size_t petals = 5;
    std::uint64_t seed = 0;
    std::optional<Matrix> rotation;  // 3x3, applied to D=3 mechanisms
    bool fibonacci_latents = false;  // FlowerSurface: draw latents from the Fibonacci sphere
};

struct GeneratedData {
    PointCloud cloud;
    std::vector<TemplatePoint> latents;
    std::function<std::vector<double>(const TemplatePoint&)> truth;  // noiseless map
    TemplateKind kind = TemplateKind::Interval;
};

namespace detail {

// Cashew-shaped closed curve: two concentric half-circles (radii 1 and 0.4,
// parallel curves 0.6 apart everywhere), joined by half-circles of radius
// 0.3, arc-length parameterized over [0,1). The dimensions are our
// constants; the uniform 0.6 self-separation keeps neighborhood graphs on
// sampled points free of shortcuts across the two arms.
inline std::array<double, 3> moon_curve(double t) {
    constexpr double r_out = 1.0;
    constexpr double r_in = 0.4;
    constexpr double cap_r = 0.5 * (r_out - r_in);
    constexpr double cap_c = 0.5 * (r_out + r_in);  // cap centers at (+-cap_c, 0)
    const double len_out = std::numbers::pi * r_out;
    const double len_in = std::numbers::pi * r_in;
    const double len_cap = std::numbers::pi * cap_r;
    const double total = len_out + len_in + 2.0 * len_cap;
    double s = (t - std::floor(t)) * total;

    if (s < len_out) {  // outer arc, (1,0) -> (-1,0), ccw through (0,1)
        const double a = s / r_out;  // angle in [0, pi]
        return {r_out * std::cos(a), r_out * std::sin(a), 0.0};
    }
    s -= len_out;
    if (s < len_cap) {  // left cap, (-1,0) -> (-0.4,0), dips below the axis
        const double a = std::numbers::pi + s / cap_r;  // angle in [pi, 2 pi]
        return {-cap_c + cap_r * std::cos(a), cap_r * std::sin(a), 0.0};
    }
    s -= len_cap;
    if (s < len_in) {  // inner arc, (-0.4,0) -> (0.4,0), cw through (0,0.4)
        const double a = std::numbers::pi - s / r_in;
        return {r_in * std::cos(a), r_in * std::sin(a), 0.0};
    }
    s -= len_in;
    // right cap, (0.4,0) -> (1,0), dips below the axis
    const double a = std::numbers::pi + s / cap_r;
    return {cap_c + cap_r * std::cos(a), cap_r * std::sin(a), 0.0};
}

inline std::array<double, 3> rotate3(const std::optional<Matrix>& rot,
                                     const std::array<double, 3>& p) {
    if (!rot) return p;
    std::array<double, 3> out{};
    for (std::size_t i = 0; i < 3; ++i)
        out[i] = (*rot)(i, 0) * p[0] + (*rot)(i, 1) * p[1] + (*rot)(i, 2) * p[2];
    return out;
}

}  // namespace detail

inline TemplateKind mechanism_template(Mechanism m) {
    switch (m) {
        case Mechanism::HalfCircle:
        case Mechanism::Sine3D:
        case Mechanism::Helix3D: return TemplateKind::Interval;
        case Mechanism::FlowerBoundary:
        case Mechanism::Star1D3D:
        case Mechanism::Moon1D3D: return TemplateKind::Circle;
        case Mechanism::FlowerSurface:
        case Mechanism::MoonSurface: return TemplateKind::Sphere;
    }
    throw UnsupportedMechanism("unknown mechanism");
}

inline std::size_t mechanism_ambient_dim(Mechanism m) {
    return (m == Mechanism::HalfCircle || m == Mechanism::FlowerBoundary) ? 2 : 3;
}

/// Haar-ish random rotation via Gram-Schmidt on Gaussian vectors, det +1.
inline Matrix random_rotation(std::uint64_t seed) {
    Rng rng(seed);
    Matrix q(3, 3);
    for (int attempt = 0;; ++attempt) {
        Matrix g(3, 3);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) g(i, j) = rng.normal();
        bool ok = true;
        for (std::size_t c = 0; c < 3 && ok; ++c) {
            std::array<double, 3> v{g(0, c), g(1, c), g(2, c)};
            for (std::size_t p = 0; p < c; ++p) {
                const double dot = v[0] * q(0, p) + v[1] * q(1, p) + v[2] * q(2, p);
                for (std::size_t i = 0; i < 3; ++i) v[i] -= dot * q(i, p);
            }
            const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
            if (norm < 1e-8) {
                ok = false;
                break;
            }
            for (std::size_t i = 0; i < 3; ++i) q(i, c) = v[i] / norm;
        }
        if (ok) break;
        if (attempt > 16) throw Error("random_rotation: degenerate draws");
    }
    const double det = q(0, 0) * (q(1, 1) * q(2, 2) - q(1, 2) * q(2, 1)) -
                       q(0, 1) * (q(1, 0) * q(2, 2) - q(1, 2) * q(2, 0)) +
                       q(0, 2) * (q(1, 0) * q(2, 1) - q(1, 1) * q(2, 0));
    if (det < 0.0)
        for (std::size_t i = 0; i < 3; ++i) q(i, 2) = -q(i, 2);
    return q;
}

/// Draws a seeded point cloud from one of the named mechanisms, returning
/// the latent parameters and a noiseless reference map.
inline GeneratedData generate(const GeneratorSpec& spec) {
    if (spec.n < 1) throw InvalidInput("generate: n must be >= 1");
    if (spec.sigma2 < 0.0) throw InvalidInput("generate: sigma2 must be >= 0");
    if (spec.petals < 1) throw InvalidInput("generate: petals must be >= 1");
    if (spec.rotation) {
        const Matrix& o = *spec.rotation;
        if (o.rows() != 3 || o.cols() != 3) throw InvalidInput("generate: rotation must be 3x3");
        const Matrix otg = o.transposed() * o;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                if (std::abs(otg(i, j) - (i == j ? 1.0 : 0.0)) > 1e-10)
                    throw InvalidInput("generate: rotation is not orthogonal");
    }

    const Mechanism mech = spec.mechanism;
    const TemplateKind kind = mechanism_template(mech);
    const std::size_t dim = mechanism_ambient_dim(mech);
    const double p = static_cast<double>(spec.petals);
    const std::optional<Matrix> rot = spec.rotation;
    constexpr double two_pi = 2.0 * std::numbers::pi;

    // The noiseless map from a template point. For the two surfaces the
    // latent unit vector (x,y,z) carries theta = atan2(y,x) and height z.
    auto truth = [mech, p, rot](const TemplatePoint& m) -> std::vector<double> {
        switch (mech) {
            case Mechanism::HalfCircle:
                return {std::cos(std::numbers::pi * m.t), std::sin(std::numbers::pi * m.t)};
            case Mechanism::FlowerBoundary: {
                const double r = 1.0 + 0.3 * std::sin(two_pi * p * m.t);
                return {r * std::cos(two_pi * m.t), r * std::sin(two_pi * m.t)};
            }
            case Mechanism::Sine3D: {
                const auto v = detail::rotate3(rot, {m.t, std::sin(two_pi * m.t), 0.0});
                return {v[0], v[1], v[2]};
            }
            case Mechanism::Helix3D: {
                const auto v = detail::rotate3(
                    rot, {std::cos(two_pi * m.t), std::sin(two_pi * m.t), 3.0 * m.t});
                return {v[0], v[1], v[2]};
            }
            case Mechanism::Star1D3D: {
                const double r = 1.0 + 0.3 * std::sin(two_pi * p * m.t);
                const auto v = detail::rotate3(rot, {r * std::cos(two_pi * m.t),
                                                     r * std::sin(two_pi * m.t),
                                                     std::sin(3.0 * std::numbers::pi * m.t)});
                return {v[0], v[1], v[2]};
            }
            case Mechanism::Moon1D3D: {
                const auto v = detail::rotate3(rot, detail::moon_curve(m.t));
                return {v[0], v[1], v[2]};
            }
            case Mechanism::FlowerSurface: {
                const double theta = std::atan2(m.v[1], m.v[0]);
                const double z = m.v[2];
                const double r = 1.0 + 0.3 * std::cos(p * theta);
                const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
                const auto v = detail::rotate3(
                    rot, {r * std::cos(theta) * s, r * std::sin(theta) * s, 0.5 * z});
                return {v[0], v[1], v[2]};
            }
            case Mechanism::MoonSurface: {
                constexpr double b = 1.2 * std::numbers::pi;
                constexpr double rho = 2.0;
                constexpr double big_r = 1.0;
                const double x = big_r * m.v[0];
                const double y = big_r * m.v[1];
                const double z = big_r * m.v[2];
                const double a = b * x / (2.0 * big_r);
                const auto v = detail::rotate3(
                    rot, {std::cos(a) * (rho * big_r + y), std::sin(a) * (rho * big_r + y), z});
                return {v[0], v[1], v[2]};
            }
        }
        throw UnsupportedMechanism("unknown mechanism");
    };

    Rng rng(spec.seed);
    GeneratedData out;
    out.kind = kind;
    out.cloud = Matrix(spec.n, dim);
    out.latents.reserve(spec.n);

    std::vector<TemplatePoint> fib;
    if (mech == Mechanism::FlowerSurface && spec.fibonacci_latents)
        fib = fibonacci_sphere(spec.n);

    const double sigma = std::sqrt(spec.sigma2);
    for (std::size_t i = 0; i < spec.n; ++i) {
        TemplatePoint m;
        switch (kind) {
            case TemplateKind::Interval: m = TemplatePoint::interval(rng.uniform()); break;
            case TemplateKind::Circle: m = TemplatePoint::circle(rng.uniform()); break;
            case TemplateKind::Sphere: {
                if (mech == Mechanism::FlowerSurface && spec.fibonacci_latents) {
                    m = fib[i];
                } else if (mech == Mechanism::FlowerSurface) {
                    // theta ~ Unif(0, 2pi) and z ~ Unif(-1, 1), stored as the
                    // unit vector with that azimuth and height
                    const double theta = rng.uniform(0.0, two_pi);
                    const double z = rng.uniform(-1.0, 1.0);
                    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
                    m = TemplatePoint::sphere(s * std::cos(theta), s * std::sin(theta), z);
                } else {
                    // MoonSurface: phi ~ Unif(0, 2pi), theta = arccos(Unif(-1, 1))
                    const double phi = rng.uniform(0.0, two_pi);
                    const double u = rng.uniform(-1.0, 1.0);
                    const double st = std::sqrt(std::max(0.0, 1.0 - u * u));
                    m = TemplatePoint::sphere(st * std::cos(phi), st * std::sin(phi), u);
                }
                break;
            }
        }
        out.latents.push_back(m);
        const std::vector<double> f = truth(m);
        for (std::size_t j = 0; j < dim; ++j)
            out.cloud(i, j) = f[j] + (sigma > 0.0 ? sigma * rng.normal() : 0.0);
    }
    out.truth = truth;
    return out;
}

/// Named presets used throughout the experiments.
inline GeneratorSpec preset(const std::string& name, std::uint64_t seed = 0) {
    GeneratorSpec spec;
    spec.seed = seed;
    if (name == "flower-boundary-paper") {
        spec.mechanism = Mechanism::FlowerBoundary;
        spec.n = 2500;
        spec.sigma2 = 1e-4;
        spec.petals = 5;
        return spec;
    }
    if (name == "half-circle-paper") {
        spec.mechanism = Mechanism::HalfCircle;
        spec.n = 2500;
        spec.sigma2 = 4e-4;
        return spec;
    }
    if (name == "flower-surface-paper") {
        spec.mechanism = Mechanism::FlowerSurface;
        spec.n = 300;
        spec.sigma2 = 1e-4;
        spec.petals = 6;
        return spec;
    }
    if (name == "moon-surface-paper") {
        spec.mechanism = Mechanism::MoonSurface;
        spec.n = 300;
        spec.sigma2 = 1e-4;
        return spec;
    }
    throw UnsupportedMechanism("unknown preset: " + name);
}

}  // namespace pme
