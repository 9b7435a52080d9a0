// Command-line pipeline for the interferometer phase-measurement simulator:
// synthetic fringe-scan campaigns, shared-phase fitting, parity reduction,
// calibration fits, stray-phase correction and slope extraction.

#include "hmw/error.hpp"
#include "hmw/io.hpp"
#include "hmw/kernels.hpp"
#include "hmw/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;

namespace {

std::string default_out_root() {
    const char* env = std::getenv("HMW_OUT_ROOT");
    return env ? env : ".";
}

hmw::Scenario load_scenario_or_baseline(const std::string& path) {
    if (path.empty()) return hmw::make_baseline_scenario();
    return hmw::parse_scenario(path);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hmwsim: separated-arm interferometer phase-measurement toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand

    std::string scenario_path, manifest_path, out_dir, data_path, reduced_path;
    std::string oracle_mode = "exact";
    std::string kernel = "auto";
    std::uint64_t seed = 0;
    double cut_amps = 12.0;
    int configs = 6;
    int workers = 0;
    int n_series = 8;
    bool no_correction = false;

    app.add_option("--scenario", scenario_path, "scenario file (JSON)");
    app.add_option("--manifest", manifest_path, "campaign manifest (JSON)");
    app.add_option("--seed", seed, "seed override");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--cut-amps", cut_amps, "|I| cut for the slope fits")->capture_default_str();
    app.add_option("--configs", configs, "field configurations per scan (4 or 6)")
        ->check(CLI::IsMember({4, 6}))
        ->capture_default_str();
    app.add_flag("--no-correction", no_correction, "skip the stray-phase correction");
    app.add_option("--oracle", oracle_mode, "per-config truth source: exact|model")
        ->check(CLI::IsMember({"exact", "model"}))
        ->capture_default_str();
    app.add_option("--workers", workers, "worker threads (0 = auto)")->capture_default_str();
    app.add_option("--kernel", kernel, "numeric kernel: auto|scalar|avx2")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}))
        ->capture_default_str();

    auto* sim = app.add_subcommand("simulate", "synthesize campaign scans to disk");
    auto* fit = app.add_subcommand("fit", "fit stored scans (shared diffraction phase)");
    auto* red = app.add_subcommand("reduce", "reduce fits to the six per-point quantities");
    auto* ext = app.add_subcommand("extract-hmw", "parity-combine, correct and fit the slope");
    auto* val = app.add_subcommand("validate", "oracle-vs-model sweep report");
    auto* calz = app.add_subcommand("calibrate-zeeman", "global Zeeman fit (synthetic or --data)");
    calz->add_option("--data", data_path, "Zeeman data CSV (series,i,ic,vb,...)");
    calz->add_option("--series", n_series, "synthetic series count")->capture_default_str();
    auto* cals = app.add_subcommand("calibrate-stark", "single-capacitor velocity/Stark fit");
    auto* fvis = app.add_subcommand("fit-visibility", "fit V_E(V) polynomial coefficients");
    fvis->add_option("--reduced", reduced_path, "aggregated reduced-points CSV");
    auto* plot = app.add_subcommand("plot-data", "emit x/y tables for the figure analogs");
    std::string figure;
    plot->add_option("figure", figure, "fig4..fig18 (no fig11)")->required();

    CLI11_PARSE(app, argc, argv);

    if (!hmw::kernels::select_kernel(kernel)) {
        std::cerr << "kernel '" << kernel << "' unavailable, using "
                  << hmw::kernels::active_kernel() << "\n";
    }

    hmw::PipelineOptions opt;
    opt.workers = workers;
    opt.cut_amps = cut_amps;
    opt.no_correction = no_correction;
    opt.oracle_mode = oracle_mode;
    opt.seed_override = seed;

    try {
        if (sim->parsed() || fit->parsed() || red->parsed() || ext->parsed()) {
            hmw::CampaignManifest manifest;
            if (sim->parsed()) {
                if (manifest_path.empty()) hmw::fail_schema("simulate: --manifest is required");
                manifest = hmw::parse_manifest(manifest_path);
                if (app.count("--configs") > 0) {
                    for (auto& pt : manifest.points) pt.n_configs = configs;
                }
            }
            opt.out_dir = !out_dir.empty()
                              ? out_dir
                              : (!manifest.out_dir.empty()
                                     ? manifest.out_dir
                                     : (fs::path(default_out_root()) / "hmw_run").string());

            if (sim->parsed()) {
                hmw::run_simulate(manifest, opt);
                std::cout << "simulate: wrote scans under " << opt.out_dir << "/scans\n";
            } else if (fit->parsed()) {
                hmw::run_fit(opt);
                std::cout << "fit: wrote " << opt.out_dir << "/fits/fits.jsonl\n";
            } else if (red->parsed()) {
                hmw::run_reduce(opt);
                std::cout << "reduce: wrote " << opt.out_dir << "/reduced/points.csv\n";
            } else {
                const auto sc = load_scenario_or_baseline(scenario_path);
                const auto res = hmw::run_extract(sc, opt);
                std::cout << "extract-hmw [" << res.inside.cut_tag
                          << "]: alpha = " << res.inside.alpha.value << " +- "
                          << res.inside.alpha.sigma << " rad/VA, beta = " << res.inside.beta.value
                          << " +- " << res.inside.beta.sigma << " rad (n=" << res.inside.n_points
                          << ")\n";
                if (res.has_outside) {
                    std::cout << "extract-hmw [" << res.outside.cut_tag
                              << "]: alpha = " << res.outside.alpha.value << " +- "
                              << res.outside.alpha.sigma << " rad/VA\n";
                }
            }
        } else if (val->parsed()) {
            const auto sc = load_scenario_or_baseline(scenario_path);
            opt.out_dir = out_dir.empty() ? default_out_root() : out_dir;
            const auto rep = hmw::run_validate(sc, opt);
            std::cout << "validate: max |phi_model - phi_oracle| = " << rep.max_phase_dev
                      << " rad, max |V_model - V_oracle| = " << rep.max_vis_dev
                      << " (per-config: " << rep.max_cfg_phase_dev << " rad, "
                      << rep.max_cfg_vis_dev << "); grid shifts " << rep.grid_modulus_shift
                      << "/" << rep.grid_argument_shift << "\n";
            if (!rep.pass) {
                std::cerr << "validate: model-oracle agreement outside tolerance\n";
                return 1;
            }
        } else if (calz->parsed()) {
            const auto sc = load_scenario_or_baseline(scenario_path);
            opt.out_dir = out_dir.empty() ? default_out_root() : out_dir;
            const auto fitres = hmw::run_calibrate_zeeman(sc, data_path, n_series, seed, opt);
            std::cout << "calibrate-zeeman: J0 = " << fitres.calibration.j0 << " +- "
                      << fitres.sigma.j0 << " rad, A_J1 = " << fitres.calibration.a_j1 << " +- "
                      << fitres.sigma.a_j1 << " rad/A, A_J1C = " << fitres.calibration.a_j1c
                      << " +- " << fitres.sigma.a_j1c << " rad/A (chi2/dof = "
                      << fitres.chi2 / fitres.dof << ")\n";
        } else if (cals->parsed()) {
            const auto sc = load_scenario_or_baseline(scenario_path);
            opt.out_dir = out_dir.empty() ? default_out_root() : out_dir;
            const auto run = hmw::run_calibrate_stark(sc, seed, opt);
            std::cout << "calibrate-stark: S_par = " << run.upper.speed_ratio.value << " +- "
                      << run.upper.speed_ratio.sigma
                      << ", phi_u/V^2 = " << run.upper.phi_per_v2.value << " +- "
                      << run.upper.phi_per_v2.sigma
                      << " rad/V^2, phi_l/V^2 = " << run.lower.phi_per_v2.value << " +- "
                      << run.lower.phi_per_v2.sigma << " rad/V^2\n";
        } else if (fvis->parsed()) {
            const auto sc = load_scenario_or_baseline(scenario_path);
            opt.out_dir = out_dir.empty() ? default_out_root() : out_dir;
            const auto fitres = hmw::run_fit_visibility(sc, reduced_path, opt);
            std::cout << "fit-visibility:";
            for (int i = 0; i < 4; ++i) {
                std::cout << " k_V" << (i + 1) << " = " << fitres.k[i].value << " +- "
                          << fitres.k[i].sigma << ";";
            }
            std::cout << "\n";
        } else if (plot->parsed()) {
            const auto sc = load_scenario_or_baseline(scenario_path);
            opt.out_dir = out_dir.empty() ? default_out_root() : out_dir;
            hmw::run_plot_data(figure, sc, opt);
            std::cout << "plot-data: wrote " << opt.out_dir << "/plot_" << figure << ".csv\n";
        }
    } catch (const hmw::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
