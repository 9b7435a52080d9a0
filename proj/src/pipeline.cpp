#include "hmw/pipeline.hpp"

#include "hmw/error.hpp"
#include "hmw/oracle.hpp"
#include "hmw/rng.hpp"
#include "hmw/signal_model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace hmw {

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 4;
    const unsigned nw = std::min<std::size_t>(
        n, workers > 0 ? static_cast<unsigned>(std::min(workers, 64)) : std::min(hw, 16u));
    if (nw <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nw; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace {

struct StageGuard {
    // removes the partial outputs of a failed stage
    std::vector<std::string> created;
    bool committed = false;
    ~StageGuard() {
        if (committed) return;
        for (const auto& p : created) {
            std::error_code ec;
            fs::remove_all(p, ec);
        }
    }
};

std::string point_dir(const CampaignPoint& pt) {
    std::ostringstream name;
    name << pt.series << "_" << pt.v_volts << "V_" << pt.i_amps << "A";
    std::string s = name.str();
    for (char& c : s) {
        if (c == '.') c = 'p';
        if (c == '-') c = 'm';
    }
    return s;
}

} // namespace

void run_simulate(const CampaignManifest& manifest, const PipelineOptions& opt) {
    const std::string out = opt.out_dir;
    if (out.empty()) fail_io("simulate: no output directory");
    const std::uint64_t master = opt.seed_override ? opt.seed_override : manifest.master_seed;

    Scenario base = parse_scenario(manifest.scenario_path);
    StageGuard guard;
    const std::string scans_dir = (fs::path(out) / "scans").string();
    guard.created.push_back(scans_dir);

    std::ostringstream index;
    index << "# hmw-scan-index v1\n";
    index << "series,v_volts,i_amps,n_configs,scan,seed,path\n";

    for (std::size_t pi = 0; pi < manifest.points.size(); ++pi) {
        const auto& pt = manifest.points[pi];
        const Scenario sc = pt.scenario_path.empty() ? base : parse_scenario(pt.scenario_path);
        const auto configs = make_config_cycle(pt.v_volts, pt.i_amps, pt.n_configs, sc.compensator);
        const auto truth = config_truth(configs, sc, opt.oracle_mode == "model");

        const std::string dir = (fs::path(scans_dir) / point_dir(pt)).string();
        SynthesisOptions sopt;
        sopt.n_configs = pt.n_configs;
        parallel_for(pt.n_scans, opt.workers, [&](std::size_t k) {
            const std::uint64_t seed = derive_seed(master, pi, k);
            FringeScan scan =
                synthesize_scan_with_truth(sc, pt.v_volts, pt.i_amps, seed, sopt, configs, truth);
            scan.series = pt.series;
            std::ostringstream file;
            file << "scan_" << k << ".txt";
            write_scan((fs::path(dir) / file.str()).string(), scan);
        });
        for (int k = 0; k < pt.n_scans; ++k) {
            index << pt.series << "," << g17(pt.v_volts) << "," << g17(pt.i_amps) << ","
                  << pt.n_configs << "," << k << "," << derive_seed(master, pi, k) << ","
                  << (fs::path(dir) / ("scan_" + std::to_string(k) + ".txt")).string() << "\n";
        }
    }
    atomic_write_text((fs::path(scans_dir) / "index.csv").string(), index.str());
    guard.committed = true;
}

namespace {

struct IndexRow {
    std::string series;
    double v_volts = 0.0;
    double i_amps = 0.0;
    std::string path;
};

std::vector<IndexRow> read_index(const std::string& out_dir) {
    const std::string path = (fs::path(out_dir) / "scans" / "index.csv").string();
    std::istringstream in(read_text(path));
    std::vector<IndexRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("series,", 0) == 0) continue;
        std::istringstream row(line);
        IndexRow r;
        std::string tok;
        std::getline(row, r.series, ',');
        std::getline(row, tok, ',');
        r.v_volts = std::strtod(tok.c_str(), nullptr);
        std::getline(row, tok, ',');
        r.i_amps = std::strtod(tok.c_str(), nullptr);
        std::getline(row, tok, ',');  // n_configs
        std::getline(row, tok, ',');  // scan
        std::getline(row, tok, ',');  // seed
        std::getline(row, r.path);
        rows.push_back(r);
    }
    if (rows.empty()) fail_io("empty scan index: " + path);
    return rows;
}

} // namespace

void run_fit(const PipelineOptions& opt) {
    const auto rows = read_index(opt.out_dir);
    std::vector<std::string> records(rows.size());
    parallel_for(rows.size(), opt.workers, [&](std::size_t i) {
        FringeScan scan = read_scan(rows[i].path);
        scan.series = rows[i].series;
        ScanFit fit = fit_scan(scan);
        records[i] = format_scan_fit(fit);
    });
    std::ostringstream out;
    for (const auto& r : records) out << r << "\n";
    StageGuard guard;
    const std::string fits = (fs::path(opt.out_dir) / "fits" / "fits.jsonl").string();
    guard.created.push_back((fs::path(opt.out_dir) / "fits").string());
    atomic_write_text(fits, out.str());
    guard.committed = true;
}

void run_reduce(const PipelineOptions& opt) {
    const std::string fits_path = (fs::path(opt.out_dir) / "fits" / "fits.jsonl").string();
    std::istringstream in(read_text(fits_path));
    std::string line;
    std::vector<ReducedPoint> per_scan;
    std::map<std::string, std::vector<ReducedPoint>> groups;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const ScanFit fit = parse_scan_fit(line);
        ReducedPoint r = reduce(fit);
        per_scan.push_back(r);
        std::ostringstream key;
        key << r.series << "|" << g17(r.v_volts) << "|" << g17(r.i_amps);
        groups[key.str()].push_back(r);
    }
    std::vector<ReducedPoint> aggregated;
    for (auto& [key, pts] : groups) aggregated.push_back(aggregate(pts));

    StageGuard guard;
    guard.created.push_back((fs::path(opt.out_dir) / "reduced").string());
    atomic_write_text((fs::path(opt.out_dir) / "reduced" / "points_scan.csv").string(),
                      format_reduced_csv(per_scan));
    atomic_write_text((fs::path(opt.out_dir) / "reduced" / "points.csv").string(),
                      format_reduced_csv(aggregated));
    guard.committed = true;
}

HmwExtraction run_extract(const Scenario& calibration, const PipelineOptions& opt) {
    const std::string path = (fs::path(opt.out_dir) / "reduced" / "points.csv").string();
    const auto points = parse_reduced_csv(read_text(path));

    // pair up (V, +|I|) with (V, -|I|)
    std::map<std::pair<double, double>, const ReducedPoint*> by_vi;
    for (const auto& p : points) by_vi[{p.v_volts, p.i_amps}] = &p;

    std::vector<SlopePoint> inside, outside;
    for (const auto& p : points) {
        if (p.i_amps <= 0.0) continue;
        const auto it = by_vi.find({p.v_volts, -p.i_amps});
        if (it == by_vi.end()) continue;
        const ReducedPoint& plus = p;
        const ReducedPoint& minus = *it->second;

        auto add_point = [&](double v_signed, const Measured& phieb_p, const Measured& phieb_m) {
            Measured db = parity_db(phieb_p, phieb_m);
            if (!opt.no_correction) {
                const auto corr = stray_correction(v_signed, p.i_amps, calibration);
                db.value += corr.value;
            }
            SlopePoint sp;
            sp.vi = v_signed * p.i_amps;
            sp.y = db;
            sp.abs_i = p.i_amps;
            (p.i_amps <= opt.cut_amps ? inside : outside).push_back(sp);
        };
        add_point(p.v_volts, plus.phieb, minus.phieb);
        if (plus.has_minus_v && minus.has_minus_v) {
            add_point(-p.v_volts, plus.phieb_m, minus.phieb_m);
        }
    }
    if (inside.size() < 3) {
        throw std::invalid_argument("extract-hmw: fewer than 3 usable (V, +/-I) pairs inside the cut");
    }

    HmwExtraction out;
    out.points_inside = inside;
    std::ostringstream tag_in;
    tag_in << "|I|<=" << opt.cut_amps;
    out.inside = extract_slope(inside, tag_in.str());
    if (outside.size() >= 3) {
        std::ostringstream tag_out;
        tag_out << "|I|>" << opt.cut_amps;
        out.outside = extract_slope(outside, tag_out.str());
        out.has_outside = true;
    }

    std::ostringstream csv;
    csv << "# hmw-result v1; alpha in rad/(V A), beta in rad\n";
    csv << "cut,alpha,alpha_sigma,beta,beta_sigma,chi2,n_points\n";
    auto emit = [&](const HMWResult& r) {
        csv << r.cut_tag << "," << g17(r.alpha.value) << "," << g17(r.alpha.sigma) << ","
            << g17(r.beta.value) << "," << g17(r.beta.sigma) << "," << g17(r.chi2) << ","
            << r.n_points << "\n";
    };
    emit(out.inside);
    if (out.has_outside) emit(out.outside);
    atomic_write_text((fs::path(opt.out_dir) / "hmw_result.csv").string(), csv.str());
    return out;
}

ValidationReport run_validate(const Scenario& sc, const PipelineOptions& opt) {
    ValidationReport rep;
    std::vector<std::vector<double>> rows;

    std::vector<FieldConfiguration> conv_cfgs = {
        {0.0, 0.0, 0.0, ConfigLabel::zero_zero},
        {800.0, 12.0, sc.compensator.current_for(12.0), ConfigLabel::v_i},
        {-800.0, -12.0, sc.compensator.current_for(-12.0), ConfigLabel::v_i},
    };
    const auto conv = oracle_convergence_check(conv_cfgs, sc);
    rep.grid_modulus_shift = conv.max_modulus_shift;
    rep.grid_argument_shift = conv.max_argument_shift;

    for (double v = 200.0; v <= 800.0 + 1e-9; v += 200.0) {
        for (double i = 2.0; i <= opt.cut_amps + 1e-9; i += 2.0) {
            for (const double sv : {1.0, -1.0}) {
                for (const double si : {1.0, -1.0}) {
                    const double V = sv * v, I = si * i;
                    const auto model = predict_reduced(V, I, sc);
                    const auto oracle = brute_force_reduced(V, I, sc);
                    const double dphi = std::fabs(model.phieb.value - oracle.phieb.value);
                    const double dvis = std::fabs(model.veb.value - oracle.veb.value);
                    rep.max_phase_dev = std::max(rep.max_phase_dev, dphi);
                    rep.max_vis_dev = std::max(rep.max_vis_dev, dvis);

                    FieldConfiguration cfg{V, I, sc.compensator.current_for(I),
                                           ConfigLabel::v_i};
                    const auto pm = predict(cfg, sc);
                    const auto po = oracle_relative(cfg, sc);
                    const double dcphi = std::fabs(std::remainder(pm.phase_rel - po.phase, 2 * M_PI));
                    const double dcvis = std::fabs(pm.v_rel - po.v_rel);
                    rep.max_cfg_phase_dev = std::max(rep.max_cfg_phase_dev, dcphi);
                    rep.max_cfg_vis_dev = std::max(rep.max_cfg_vis_dev, dcvis);
                    rows.push_back({V, I, model.phieb.value, oracle.phieb.value, dphi,
                                    model.veb.value, oracle.veb.value, dvis});
                }
            }
        }
    }
    rep.pass = rep.max_phase_dev < 1e-3 && rep.max_vis_dev < 0.01 &&
               rep.max_cfg_phase_dev < 1e-3 && rep.max_cfg_vis_dev < 0.01;

    if (!opt.out_dir.empty()) {
        atomic_write_text(
            (fs::path(opt.out_dir) / "validate.csv").string(),
            format_table_csv("hmw-validate",
                             {"v_volts", "i_amps", "phieb_model", "phieb_oracle", "phieb_dev",
                              "veb_model", "veb_oracle", "veb_dev"},
                             rows));
    }
    return rep;
}

void run_plot_data(const std::string& figure, const Scenario& sc, const PipelineOptions& opt) {
    std::vector<std::vector<double>> rows;
    std::vector<std::string> cols;
    const bool use_model = opt.oracle_mode == "model";

    auto oracle_rel = [&](double V, double I) {
        FieldConfiguration cfg{V, I, sc.compensator.current_for(I),
                               V == 0.0 ? (I == 0.0 ? ConfigLabel::zero_zero : ConfigLabel::zero_i)
                                        : (I == 0.0 ? ConfigLabel::v_zero : ConfigLabel::v_i)};
        if (V < 0.0) cfg.label = I == 0.0 ? ConfigLabel::mv_zero : ConfigLabel::mv_i;
        FieldConfiguration zero;
        const auto a = brute_force_signal(cfg, sc);
        const auto a0 = brute_force_signal(zero, sc);
        return std::polar(a.modulus, a.argument) / std::polar(a0.modulus, a0.argument);
    };

    if (figure == "fig4") {
        cols = {"v2_volts2", "vis_rel", "phase_rad"};
        const auto data = synthesize_stark_dataset(sc, CapacitorArm::upper, 24, sc.seed, 0.0, 0.0);
        for (const auto& p : data) rows.push_back({p.v2, p.vis.value, p.phase.value});
    } else if (figure == "fig5") {
        cols = {"v2_volts2", "phie_rad"};
        for (double v = 50.0; v <= 800.0 + 1e-9; v += 50.0) {
            const auto r = predict_reduced(v, 10.0, sc);
            rows.push_back({v * v, r.phie.value});
        }
    } else if (figure == "fig6") {
        cols = {"v_volts", "half_diff_rad"};
        for (double v = 100.0; v <= 800.0 + 1e-9; v += 100.0) {
            const auto r = predict_reduced(v, 10.0, sc);
            rows.push_back({v, 0.5 * (r.phie.value - r.phie_m.value)});
        }
    } else if (figure == "fig7") {
        cols = {"v_volts", "ve_rel"};
        for (double v = -800.0; v <= 800.0 + 1e-9; v += 50.0) {
            if (v == 0.0) continue;
            const auto r = predict_reduced(v, 10.0, sc);
            rows.push_back({v, r.ve.value});
        }
    } else if (figure == "fig8") {
        cols = {"ic_amps", "vb_rel", "phib_rad"};
        for (double ic = 0.0; ic <= 5.0 + 1e-9; ic += 0.25) {
            const auto z = model_b_only(0.0, ic, sc.chi, sc.zeeman);
            rows.push_back({ic, std::abs(z), std::arg(z)});
        }
    } else if (figure == "fig9") {
        cols = {"i_amps", "re_vb", "im_vb"};
        for (double i = 0.0; i <= 15.0 + 1e-9; i += 0.25) {
            const auto z = model_b_only(i, 0.0, sc.chi, sc.zeeman);
            rows.push_back({i, z.real(), z.imag()});
        }
    } else if (figure == "fig10") {
        cols = {"i_amps", "re_vb", "im_vb"};
        for (double i = -25.0; i <= 25.0 + 1e-9; i += 0.25) {
            std::complex<double> z;
            if (use_model) {
                z = model_b_only(i, sc.compensator.current_for(i), sc.chi, sc.zeeman);
            } else {
                z = oracle_rel(0.0, i);
            }
            rows.push_back({i, z.real(), z.imag()});
        }
    } else if (figure == "fig12") {
        cols = {"vi_va", "phieb_rad", "phi_hmw_rad"};
        for (double v : {500.0, 650.0, 800.0}) {
            for (double i = -12.0; i <= 12.0 + 1e-9; i += 3.0) {
                if (i == 0.0) continue;
                const auto r = use_model ? predict_reduced(v, i, sc) : brute_force_reduced(v, i, sc);
                rows.push_back({v * i, r.phieb.value, hmw_phase(v, i, sc.hmw_per_va)});
                rows.push_back({-v * i, r.phieb_m.value, hmw_phase(-v, i, sc.hmw_per_va)});
            }
        }
    } else if (figure == "fig13") {
        cols = {"i_amps", "de_veb"};
        for (double i = -25.0; i <= 25.0 + 1e-9; i += 0.5) {
            if (std::fabs(i) < 0.25) continue;
            rows.push_back({i, predict_parity_combination(ParityPrediction::de_vis, 800.0, i, sc)});
        }
    } else if (figure == "fig14") {
        cols = {"v_volts", "de_veb"};
        for (double v = 100.0; v <= 800.0 + 1e-9; v += 50.0) {
            rows.push_back({v, predict_parity_combination(ParityPrediction::de_vis, v, 19.0, sc)});
        }
    } else if (figure == "fig15") {
        cols = {"i_amps", "v_volts", "mb_de_phieb_rad"};
        for (double v : {400.0, 600.0, 800.0}) {
            for (double i = 2.0; i <= 23.0 + 1e-9; i += 1.0) {
                const double anomalous = sc.anomalous.a * v + sc.anomalous.b * v * v * v;
                rows.push_back({i, v,
                                anomalous + predict_parity_combination(
                                                ParityPrediction::mb_de_phase, v, i, sc)});
            }
        }
    } else if (figure == "fig16") {
        cols = {"v_volts", "mb_de_phieb_rad"};
        for (double v = 100.0; v <= 800.0 + 1e-9; v += 50.0) {
            const double anomalous = sc.anomalous.a * v + sc.anomalous.b * v * v * v;
            rows.push_back({v, anomalous + predict_parity_combination(
                                               ParityPrediction::mb_de_phase, v, 10.0, sc)});
        }
    } else if (figure == "fig17") {
        cols = {"vi_va", "db_me_phieb_rad"};
        for (double v : {500.0, 800.0}) {
            for (double i = 2.0; i <= 23.0 + 1e-9; i += 1.5) {
                rows.push_back(
                    {v * i, predict_parity_combination(ParityPrediction::db_me_phase, v, i, sc)});
            }
        }
    } else if (figure == "fig18") {
        cols = {"i_amps", "me_phieb_rad"};
        for (double i = 2.0; i <= 23.0 + 1e-9; i += 0.5) {
            rows.push_back({i, predict_parity_combination(ParityPrediction::me_phase, 800.0, i, sc)});
        }
    } else {
        fail_schema("plot-data: unknown figure '" + figure + "' (fig4..fig18, no fig11)");
    }

    const std::string out = opt.out_dir.empty() ? "." : opt.out_dir;
    atomic_write_text((fs::path(out) / ("plot_" + figure + ".csv")).string(),
                      format_table_csv("hmw-plot-" + figure, cols, rows));
}

GlobalZeemanFit run_calibrate_zeeman(const Scenario& sc, const std::string& data_csv_path,
                                     int n_series, std::uint64_t seed,
                                     const PipelineOptions& opt) {
    std::vector<ZeemanDataPoint> data;
    if (!data_csv_path.empty()) {
        data = parse_zeeman_csv(read_text(data_csv_path));
    } else {
        data = synthesize_zeeman_dataset(sc, n_series, seed ? seed : sc.seed);
    }
    ZeemanCalibration init{-0.5, 0.2, -0.4, -5e-3, -1e-4, 0.05, 1.3};
    auto fit = global_zeeman_fit(data, init);
    if (!opt.out_dir.empty()) {
        std::ostringstream csv;
        csv << "# hmw-zeeman-fit v1; units: rad, A\n";
        csv << "param,value,sigma\n";
        auto row = [&](const char* n, double v, double s) {
            csv << n << "," << g17(v) << "," << g17(s) << "\n";
        };
        row("j0_rad", fit.calibration.j0, fit.sigma.j0);
        row("i0_amp", fit.calibration.i0, fit.sigma.i0);
        row("a_j1_rad_per_amp", fit.calibration.a_j1, fit.sigma.a_j1);
        row("a_j2_rad_per_amp2", fit.calibration.a_j2, fit.sigma.a_j2);
        row("a_j3_rad_per_amp3", fit.calibration.a_j3, fit.sigma.a_j3);
        row("i0c_amp", fit.calibration.i0c, fit.sigma.i0c);
        row("a_j1c_rad_per_amp", fit.calibration.a_j1c, fit.sigma.a_j1c);
        for (std::size_t s = 0; s < fit.chi_per_series.size(); ++s) {
            row(("chi_series_" + std::to_string(s)).c_str(), fit.chi_per_series[s].value,
                fit.chi_per_series[s].sigma);
        }
        atomic_write_text((fs::path(opt.out_dir) / "zeeman_fit.csv").string(), csv.str());
        atomic_write_text((fs::path(opt.out_dir) / "zeeman_data.csv").string(),
                          format_zeeman_csv(data));
    }
    return fit;
}

StarkCalibrationRun run_calibrate_stark(const Scenario& sc, std::uint64_t seed,
                                        const PipelineOptions& opt) {
    StarkCalibrationRun run;
    const auto up = synthesize_stark_dataset(sc, CapacitorArm::upper, 24, seed ? seed : sc.seed);
    const auto lo =
        synthesize_stark_dataset(sc, CapacitorArm::lower, 24, (seed ? seed : sc.seed) + 1);
    run.upper = fit_stark_calibration(up, sc.beam.mean_velocity);
    run.lower = fit_stark_calibration(lo, sc.beam.mean_velocity);
    if (!opt.out_dir.empty()) {
        std::ostringstream csv;
        csv << "# hmw-stark-fit v1; phi per V^2 in rad/V^2\n";
        csv << "arm,speed_ratio,speed_ratio_sigma,phi_per_v2,phi_per_v2_sigma,chi2\n";
        csv << "upper," << g17(run.upper.speed_ratio.value) << "," << g17(run.upper.speed_ratio.sigma)
            << "," << g17(run.upper.phi_per_v2.value) << "," << g17(run.upper.phi_per_v2.sigma)
            << "," << g17(run.upper.chi2) << "\n";
        csv << "lower," << g17(run.lower.speed_ratio.value) << "," << g17(run.lower.speed_ratio.sigma)
            << "," << g17(run.lower.phi_per_v2.value) << "," << g17(run.lower.phi_per_v2.sigma)
            << "," << g17(run.lower.chi2) << "\n";
        atomic_write_text((fs::path(opt.out_dir) / "stark_fit.csv").string(), csv.str());
    }
    return run;
}

VisibilityPolynomialFit run_fit_visibility(const Scenario& sc, const std::string& reduced_csv_path,
                                           const PipelineOptions& opt) {
    std::vector<double> volts;
    std::vector<Measured> ve;
    if (!reduced_csv_path.empty()) {
        for (const auto& p : parse_reduced_csv(read_text(reduced_csv_path))) {
            volts.push_back(p.v_volts);
            ve.push_back(p.ve);
            if (p.has_minus_v) {
                volts.push_back(-p.v_volts);
                ve.push_back(p.ve_m);
            }
        }
    } else {
        for (double v = -800.0; v <= 800.0 + 1e-9; v += 100.0) {
            if (v == 0.0) continue;
            FieldConfiguration cfg{v, 0.0, 0.0, v > 0 ? ConfigLabel::v_zero : ConfigLabel::mv_zero};
            const auto rel = oracle_relative(cfg, sc);
            volts.push_back(v);
            ve.push_back({rel.v_rel, 0.002});
        }
    }
    auto fit = fit_visibility_polynomial(volts, ve);
    if (!opt.out_dir.empty()) {
        std::ostringstream csv;
        csv << "# hmw-visibility-fit v1; k_Vi in V^-i\n";
        csv << "i,k,k_sigma\n";
        for (int i = 0; i < 4; ++i) {
            csv << (i + 1) << "," << g17(fit.k[i].value) << "," << g17(fit.k[i].sigma) << "\n";
        }
        atomic_write_text((fs::path(opt.out_dir) / "visibility_fit.csv").string(), csv.str());
    }
    return fit;
}

} // namespace hmw
