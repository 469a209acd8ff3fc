// pme: fit smooth principal manifolds (open/closed curves, closed surfaces)
// to noisy point clouds. Subcommands: gen, fit, sweep, select, eval.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pme/pme.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

pme::Mechanism parse_mechanism(const std::string& name) {
    if (name == "half-circle") return pme::Mechanism::HalfCircle;
    if (name == "flower-boundary") return pme::Mechanism::FlowerBoundary;
    if (name == "flower-surface") return pme::Mechanism::FlowerSurface;
    if (name == "moon-surface") return pme::Mechanism::MoonSurface;
    if (name == "sine-3d") return pme::Mechanism::Sine3D;
    if (name == "helix-3d") return pme::Mechanism::Helix3D;
    if (name == "star-1d3d") return pme::Mechanism::Star1D3D;
    if (name == "moon-1d3d") return pme::Mechanism::Moon1D3D;
    throw pme::UnsupportedMechanism("unknown mechanism: " + name);
}

pme::TemplateKind parse_template(const std::string& name) {
    if (name == "interval") return pme::TemplateKind::Interval;
    if (name == "circle") return pme::TemplateKind::Circle;
    if (name == "sphere") return pme::TemplateKind::Sphere;
    throw pme::InvalidInput("unknown template: " + name);
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0 && hi > lo) || count < 2)
        throw pme::InvalidInput("lambda grid: need 0 < min < max and count >= 2");
    std::vector<double> out(count);
    const double step = (std::log(hi) - std::log(lo)) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = std::exp(std::log(lo) + step * static_cast<double>(i));
    out.front() = lo;
    out.back() = hi;
    return out;
}

void write_latents_csv(const std::filesystem::path& path,
                       const std::vector<pme::TemplatePoint>& latents) {
    std::string out;
    for (const pme::TemplatePoint& m : latents) {
        if (m.kind == pme::TemplateKind::Sphere) {
            out += pme::format_real(m.v[0]);
            out += ',';
            out += pme::format_real(m.v[1]);
            out += ',';
            out += pme::format_real(m.v[2]);
        } else {
            out += pme::format_real(m.t);
        }
        out += '\n';
    }
    pme::write_file_atomic(path, out);
}

void write_trace_csv(const std::filesystem::path& path, const pme::PATrace& trace) {
    std::string out = "iter,fit_error,penalty,total,eps\n";
    for (const pme::PAIterationRecord& r : trace.records) {
        out += std::to_string(r.iter) + ',' + pme::format_real(r.fit_error) + ',' +
               pme::format_real(r.penalty) + ',' + pme::format_real(r.total) + ',' +
               pme::format_real(r.eps) + '\n';
    }
    pme::write_file_atomic(path, out);
}

pme::InitStrategy resolve_init(pme::TemplateKind kind, bool use_isomap) {
    switch (kind) {
        case pme::TemplateKind::Interval: return pme::InitStrategy::Interval;
        case pme::TemplateKind::Circle:
            return use_isomap ? pme::InitStrategy::CircularIsomap : pme::InitStrategy::CircularRaw;
        case pme::TemplateKind::Sphere:
            return use_isomap ? pme::InitStrategy::SphericalIsomap : pme::InitStrategy::SphericalRaw;
    }
    return pme::InitStrategy::Interval;
}

struct FitFlags {
    std::string input;
    std::string template_name = "interval";
    double lambda = 1e-4;
    double eps_stop = 1e-5;
    std::size_t max_iter = 100;
    bool isomap = false;
    std::optional<std::size_t> knot_cap;
    std::uint64_t seed = 0;
    std::string out_prefix = "fit";
};

pme::PAConfig make_pa_config(const FitFlags& flags, pme::TemplateKind kind) {
    pme::PAConfig cfg;
    cfg.lambda = flags.lambda;
    cfg.eps_stop = flags.eps_stop;
    cfg.max_iter = flags.max_iter;
    cfg.init_strategy = resolve_init(kind, flags.isomap);
    cfg.knot_cap = flags.knot_cap;
    cfg.seed = flags.seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"principal manifold estimation"};
    app.require_subcommand(1);

    // --- gen ---
    auto* gen = app.add_subcommand("gen", "generate a synthetic point cloud");
    std::string gen_mechanism, gen_preset, gen_out = "cloud.csv", gen_latent_out;
    std::size_t gen_n = 100, gen_petals = 5;
    double gen_sigma2 = 0.0;
    std::uint64_t gen_seed = 0, gen_rot_seed = 0;
    bool gen_rotate = false, gen_fib = false;
    gen->add_option("--mechanism", gen_mechanism,
                    "half-circle|flower-boundary|flower-surface|moon-surface|sine-3d|helix-3d|"
                    "star-1d3d|moon-1d3d");
    gen->add_option("--preset", gen_preset, "named preset, e.g. flower-boundary-paper");
    gen->add_option("--n", gen_n, "sample size");
    gen->add_option("--sigma2", gen_sigma2, "noise variance per coordinate");
    gen->add_option("--petals", gen_petals, "petal count for flower mechanisms");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_flag("--rotate", gen_rotate, "apply a random 3x3 rotation (3-D mechanisms)");
    gen->add_option("--rotation-seed", gen_rot_seed, "seed of the random rotation");
    gen->add_flag("--fibonacci-latents", gen_fib,
                  "flower-surface: draw latents from the Fibonacci sphere");
    gen->add_option("-o,--out", gen_out, "output cloud CSV");
    gen->add_option("--latent-out", gen_latent_out, "optional latent parameter CSV");

    // --- fit ---
    auto* fit = app.add_subcommand("fit", "run the projection-adaptation fit");
    FitFlags ff;
    fit->add_option("-i,--input", ff.input, "input cloud CSV")->required();
    fit->add_option("--template", ff.template_name, "interval|circle|sphere")->required();
    fit->add_option("--lambda", ff.lambda, "penalty weight");
    fit->add_option("--eps-stop", ff.eps_stop, "relative-change stopping threshold");
    fit->add_option("--max-iter", ff.max_iter, "iteration cap");
    fit->add_flag("--isomap", ff.isomap, "initialize via ISOMAP (circle/sphere)");
    std::size_t fit_knot_cap = 0;
    fit->add_option("--knot-cap", fit_knot_cap, "reduced-basis knot count (0 = exact solve)");
    fit->add_option("--seed", ff.seed, "seed for knot subsampling");
    fit->add_option("-o,--out-prefix", ff.out_prefix,
                    "writes <prefix>.model.json, <prefix>.trace.csv, <prefix>.curve.csv");

    // --- sweep ---
    auto* sweep = app.add_subcommand("sweep", "fit across a lambda grid");
    FitFlags sf;
    double sw_lmin = 1e-9, sw_lmax = 1e-2;
    std::size_t sw_count = 8;
    bool sw_warm = false;
    sweep->add_option("-i,--input", sf.input, "input cloud CSV")->required();
    sweep->add_option("--template", sf.template_name, "interval|circle|sphere")->required();
    sweep->add_option("--lambda-min", sw_lmin, "grid lower end");
    sweep->add_option("--lambda-max", sw_lmax, "grid upper end");
    sweep->add_option("--lambda-count", sw_count, "grid size (log-spaced)");
    sweep->add_flag("--warm-start", sw_warm, "reuse previous lambda's final indices");
    sweep->add_option("--eps-stop", sf.eps_stop, "relative-change stopping threshold");
    sweep->add_option("--max-iter", sf.max_iter, "iteration cap");
    sweep->add_flag("--isomap", sf.isomap, "initialize via ISOMAP (circle/sphere)");
    sweep->add_option("--seed", sf.seed, "seed for knot subsampling");
    sweep->add_option("-o,--out", sf.out_prefix, "per-lambda metrics CSV")->required();

    // --- select ---
    auto* select = app.add_subcommand("select", "pick lambda by coefficient of variation");
    FitFlags lf;
    double se_lmin = 1e-9, se_lmax = 1e-2;
    std::size_t se_count = 8, se_nmc = 2000;
    std::uint64_t se_seed = 0;
    select->add_option("-i,--input", lf.input, "input cloud CSV")->required();
    select->add_option("--template", lf.template_name, "interval|circle|sphere")->required();
    select->add_option("--lambda-min", se_lmin, "grid lower end");
    select->add_option("--lambda-max", se_lmax, "grid upper end");
    select->add_option("--lambda-count", se_count, "grid size (log-spaced, >= 4)");
    select->add_option("--n-mc", se_nmc, "Monte-Carlo sample size for the moments");
    select->add_option("--seed", se_seed, "Monte-Carlo seed");
    select->add_option("--eps-stop", lf.eps_stop, "relative-change stopping threshold");
    select->add_option("--max-iter", lf.max_iter, "iteration cap");
    select->add_flag("--isomap", lf.isomap, "initialize via ISOMAP (circle/sphere)");
    select->add_option("-o,--out", lf.out_prefix, "lambda profile CSV")->required();

    // --- eval ---
    auto* eval = app.add_subcommand("eval", "compute metrics for a fitted model");
    std::string ev_model, ev_ref_model, ev_cloud;
    std::size_t ev_quad = 500;
    std::string ev_out;
    eval->add_option("--model", ev_model, "model JSON")->required();
    eval->add_option("--ref-model", ev_ref_model, "second model JSON to compare against");
    eval->add_option("--cloud", ev_cloud, "cloud CSV to compare against");
    eval->add_option("--n-quad", ev_quad, "quadrature node count");
    eval->add_option("-o,--out", ev_out, "write metric JSON here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (gen->parsed()) {
            pme::GeneratorSpec spec;
            if (!gen_preset.empty()) {
                spec = pme::preset(gen_preset, gen_seed);
                if (gen->count("--n")) spec.n = gen_n;
                if (gen->count("--sigma2")) spec.sigma2 = gen_sigma2;
                if (gen->count("--petals")) spec.petals = gen_petals;
            } else {
                if (gen_mechanism.empty())
                    throw pme::InvalidInput("gen: need --mechanism or --preset");
                spec.mechanism = parse_mechanism(gen_mechanism);
                spec.n = gen_n;
                spec.sigma2 = gen_sigma2;
                spec.petals = gen_petals;
                spec.seed = gen_seed;
            }
            spec.fibonacci_latents = gen_fib;
            if (gen_rotate) spec.rotation = pme::random_rotation(gen_rot_seed);
            const pme::GeneratedData data = pme::generate(spec);
            pme::write_cloud_csv(gen_out, data.cloud);
            if (!gen_latent_out.empty()) write_latents_csv(gen_latent_out, data.latents);
            return 0;
        }

        if (fit->parsed()) {
            if (fit_knot_cap > 0) ff.knot_cap = fit_knot_cap;
            const pme::PointCloud cloud = pme::read_cloud_csv(ff.input);
            const pme::TemplateKind kind = parse_template(ff.template_name);
            const pme::PAConfig cfg = make_pa_config(ff, kind);
            const pme::PAResult result = pme::pa_fit(cloud, kind, cfg);
            pme::write_model_json(ff.out_prefix + ".model.json", result.map);
            write_trace_csv(ff.out_prefix + ".trace.csv", result.trace);
            pme::write_cloud_csv(ff.out_prefix + ".curve.csv", pme::sample_map(result.map, 500));
            std::cout << nlohmann::json{{"converged", result.trace.converged},
                                        {"iterations", result.trace.iterations_used},
                                        {"fit_error", result.trace.records.back().fit_error}}
                             .dump()
                      << "\n";
            return 0;
        }

        if (sweep->parsed()) {
            const pme::PointCloud cloud = pme::read_cloud_csv(sf.input);
            const pme::TemplateKind kind = parse_template(sf.template_name);
            const pme::PAConfig cfg = make_pa_config(sf, kind);
            const std::vector<double> lambdas = log_grid(sw_lmin, sw_lmax, sw_count);
            const auto entries = pme::lambda_sweep(cloud, kind, cfg, lambdas, sw_warm);
            std::string csv = "lambda,converged,iterations,fit_error,penalty,total,error\n";
            for (const pme::SweepEntry& e : entries) {
                csv += pme::format_real(e.lambda);
                if (e.result) {
                    const pme::PAIterationRecord& last = e.result->trace.records.back();
                    csv += std::string(",") + (e.result->trace.converged ? "1" : "0") + ',' +
                           std::to_string(e.result->trace.iterations_used) + ',' +
                           pme::format_real(last.fit_error) + ',' +
                           pme::format_real(last.penalty) + ',' + pme::format_real(last.total) +
                           ",\n";
                } else {
                    csv += ",,,,," + e.error + "\n";
                }
            }
            pme::write_file_atomic(sf.out_prefix, csv);
            return 0;
        }

        if (select->parsed()) {
            if (se_count < 4)
                throw CLI::ValidationError("--lambda-count", "inflection rule needs >= 4");
            const pme::PointCloud cloud = pme::read_cloud_csv(lf.input);
            const pme::TemplateKind kind = parse_template(lf.template_name);
            const pme::PAConfig cfg = make_pa_config(lf, kind);
            const std::vector<double> lambdas = log_grid(se_lmin, se_lmax, se_count);
            const pme::LambdaProfile profile =
                pme::select_lambda(cloud, kind, cfg, lambdas, se_nmc, se_seed);
            std::string csv = "lambda,mean_phi,sd_phi,cv,eligible\n";
            for (std::size_t i = 0; i < lambdas.size(); ++i) {
                csv += pme::format_real(profile.lambdas[i]) + ',' +
                       pme::format_real(profile.mean_phi[i]) + ',' +
                       pme::format_real(profile.sd_phi[i]) + ',' +
                       pme::format_real(profile.cv[i]) + ',' +
                       ((profile.ok[i] && i <= profile.eligible_max_index) ? "1" : "0") + '\n';
            }
            pme::write_file_atomic(lf.out_prefix, csv);
            std::cout << nlohmann::json{{"lambda_star", profile.selected_lambda}}.dump() << "\n";
            return 0;
        }

        if (eval->parsed()) {
            const pme::SplineMap model = pme::read_model_json(ev_model);
            nlohmann::json out;
            if (!ev_ref_model.empty()) {
                const pme::SplineMap ref = pme::read_model_json(ev_ref_model);
                out["l2"] = pme::l2_map_distance(model, ref, ev_quad);
                out["hausdorff"] =
                    pme::hausdorff(pme::sample_map(model, ev_quad), pme::sample_map(ref, ev_quad));
            }
            if (!ev_cloud.empty()) {
                const pme::PointCloud cloud = pme::read_cloud_csv(ev_cloud);
                out["hausdorff_to_cloud"] =
                    pme::hausdorff(pme::sample_map(model, ev_quad), cloud);
                out["l2_to_mean"] =
                    pme::l2_map_distance(model, pme::cloud_mean(cloud), ev_quad);
                if (model.kind == pme::TemplateKind::Interval)
                    out["pca_line_distance"] = pme::distance_to_pca_line(model, cloud, ev_quad);
            }
            if (ev_ref_model.empty() && ev_cloud.empty())
                throw pme::InvalidInput("eval: need --ref-model and/or --cloud");
            const std::string text = out.dump(2) + "\n";
            if (ev_out.empty())
                std::cout << text;
            else
                pme::write_file_atomic(ev_out, text);
            return 0;
        }
    } catch (const pme::NotPositiveDefinite& e) {
        std::cerr << "numerical failure (NotPositiveDefinite): " << e.what() << "\n";
        return kExitNumerical;
    } catch (const pme::RankDeficientDesign& e) {
        std::cerr << "numerical failure (RankDeficientDesign): " << e.what() << "\n";
        return kExitNumerical;
    } catch (const pme::NonFiniteLoss& e) {
        std::cerr << "numerical failure (NonFiniteLoss): " << e.what() << "\n";
        return kExitNumerical;
    } catch (const pme::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
