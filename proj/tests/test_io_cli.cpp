#include "hmw/error.hpp"
#include "hmw/fit.hpp"
#include "hmw/io.hpp"
#include "hmw/pipeline.hpp"
#include "hmw/scan.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace hmw;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("hmw_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

} // namespace

TEST_CASE("scenario parsing") {
    SUBCASE("minimal file gets documented defaults") {
        const auto sc = parse_scenario_text(R"({"couplings": {"hmw_rad_per_va": -1.0e-6}})");
        CHECK(sc.hmw_per_va == doctest::Approx(-1.0e-6));
        CHECK(sc.zeeman.j0 == doctest::Approx(-0.61));
        CHECK(sc.beam.mean_velocity == doctest::Approx(1065.0));
        CHECK(sc.beam.y.size() == 201);
        CHECK(sc.compensator.cap_amp == doctest::Approx(5.0));
    }
    SUBCASE("unknown keys are rejected with the field path") {
        try {
            parse_scenario_text(R"({"couplings": {"hmw_rad_per_va": -1e-6, "bogus": 1}})");
            FAIL("expected a schema error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::schema);
            CHECK(std::string(e.what()).find("bogus") != std::string::npos);
        }
    }
    SUBCASE("physically invalid values are rejected by name") {
        try {
            parse_scenario_text(R"({"populations": {"chi": 1.5}})");
            FAIL("expected a schema error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("chi") != std::string::npos);
        }
        CHECK_THROWS_AS(parse_scenario_text(R"({"beam": {"base_visibility": 1.4}})"), Error);
    }
    SUBCASE("malformed JSON is a schema error") {
        CHECK_THROWS_AS(parse_scenario_text("{not json"), Error);
    }
    SUBCASE("shipped baseline file matches the built-in defaults") {
        const auto sc = parse_scenario(std::string(HMW_SOURCE_DIR) + "/data/scenario_baseline.json");
        const auto ref = make_baseline_scenario();
        CHECK(sc.zeeman.j0 == ref.zeeman.j0);
        CHECK(sc.zeeman.a_j1 == ref.zeeman.a_j1);
        CHECK(sc.zeeman.a_j2 == ref.zeeman.a_j2);
        CHECK(sc.stark.phi_upper_per_v2 == ref.stark.phi_upper_per_v2);
        CHECK(sc.hmw_per_va == ref.hmw_per_va);
        CHECK(sc.ac_per_v == ref.ac_per_v);
        CHECK(sc.beam.mean_rate == ref.beam.mean_rate);
    }
}

TEST_CASE("manifest parsing") {
    TempDir tmp;
    const auto scen_path = (tmp.path / "s.json").string();
    atomic_write_text(scen_path, "{}");
    SUBCASE("valid manifest") {
        const std::string text = R"({
            "scenario": "s.json",
            "master_seed": 7,
            "points": [
                {"v_volts": 800, "i_amps": 12, "n_scans": 3, "n_configs": 6, "series": "a"},
                {"v_volts": 800, "i_amps": -12, "n_scans": 3, "n_configs": 6, "series": "a"}
            ]
        })";
        const auto m = parse_manifest_text(text, "<test>", tmp.path.string());
        CHECK(m.points.size() == 2);
        CHECK(m.master_seed == 7);
        CHECK(m.points[1].i_amps == -12.0);
    }
    SUBCASE("missing scenario file rejected") {
        const std::string text = R"({"scenario": "missing.json",
            "points": [{"v_volts": 800, "i_amps": 12, "n_scans": 1}]})";
        CHECK_THROWS_AS(parse_manifest_text(text, "<test>", tmp.path.string()), Error);
    }
    SUBCASE("bad configuration count rejected") {
        const std::string text = R"({"scenario": "s.json",
            "points": [{"v_volts": 800, "i_amps": 12, "n_scans": 1, "n_configs": 5}]})";
        CHECK_THROWS_AS(parse_manifest_text(text, "<test>", tmp.path.string()), Error);
    }
}

TEST_CASE("scan files round trip bit-exactly") {
    const auto sc = make_baseline_scenario();
    const auto scan = synthesize_scan(sc, 800.0, 12.0, 4242);
    const std::string text = format_scan(scan);
    const auto back = parse_scan(text);
    REQUIRE(back.bins.size() == scan.bins.size());
    REQUIRE(back.configs.size() == scan.configs.size());
    for (std::size_t i = 0; i < scan.bins.size(); ++i) {
        CHECK(back.bins[i].t == scan.bins[i].t);          // bit-exact through %.17g
        CHECK(back.bins[i].x3phi == scan.bins[i].x3phi);
        CHECK(back.bins[i].config == scan.bins[i].config);
        CHECK(back.bins[i].counts == scan.bins[i].counts);
    }
    CHECK(back.seed == scan.seed);
    CHECK(back.v_volts == scan.v_volts);

    // persist -> load -> fit equals in-memory fit
    const auto fit_mem = fit_scan(scan);
    const auto fit_disk = fit_scan(back);
    for (std::size_t c = 0; c < fit_mem.configs.size(); ++c) {
        CHECK(fit_disk.configs[c].phase == fit_mem.configs[c].phase);
        CHECK(fit_disk.configs[c].visibility == fit_mem.configs[c].visibility);
    }
}

TEST_CASE("scan fit records round trip") {
    const auto sc = make_baseline_scenario();
    auto scan = synthesize_scan(sc, 650.0, 9.0, 11);
    scan.series = "s1";
    const auto fit = fit_scan(scan);
    const auto line = format_scan_fit(fit);
    const auto back = parse_scan_fit(line);
    CHECK(back.series == "s1");
    CHECK(back.configs.size() == fit.configs.size());
    CHECK(back.configs[2].phase == fit.configs[2].phase);
    CHECK(back.covariance(0, 0) == fit.covariance(0, 0));
    const auto r1 = reduce(fit);
    const auto r2 = reduce(back);
    CHECK(r1.phieb.value == r2.phieb.value);
    CHECK(r1.phieb.sigma == r2.phieb.sigma);
}

TEST_CASE("reduced csv round trip") {
    ReducedPoint p;
    p.series = "a";
    p.v_volts = 800.0;
    p.i_amps = -12.0;
    p.n_scans = 100;
    p.ve = {0.9123456789012345, 0.002};
    p.phieb = {-1.234e-2, 3e-3};
    p.has_minus_v = true;
    p.phieb_m = {1.2e-2, 3e-3};
    const auto text = format_reduced_csv({p});
    const auto back = parse_reduced_csv(text);
    REQUIRE(back.size() == 1);
    CHECK(back[0].ve.value == p.ve.value);
    CHECK(back[0].phieb.sigma == p.phieb.sigma);
    CHECK(back[0].phieb_m.value == p.phieb_m.value);
    CHECK(back[0].has_minus_v);
    CHECK(back[0].i_amps == -12.0);
}

TEST_CASE("atomic write replaces content completely") {
    TempDir tmp;
    const auto p = (tmp.path / "x.txt").string();
    atomic_write_text(p, "first");
    atomic_write_text(p, "second");
    CHECK(read_text(p) == "second");
    CHECK_THROWS_AS(read_text((tmp.path / "missing").string()), Error);
}

TEST_CASE("pipeline end to end on a small campaign") {
    TempDir tmp;
    // quiet scenario keeps this test fast and deterministic
    const std::string scen = R"({
        "noise": {"poisson": true, "phase_jitter_rad": 0.12},
        "couplings": {"hmw_rad_per_va": -1.28e-6, "ac_rad_per_v": -5.978e-5}
    })";
    const auto scen_path = (tmp.path / "scen.json").string();
    atomic_write_text(scen_path, scen);
    CampaignManifest manifest;
    manifest.scenario_path = scen_path;
    manifest.master_seed = 99;
    for (double i : {9.0, -9.0, 12.0, -12.0}) {
        CampaignPoint pt;
        pt.v_volts = 800.0;
        pt.i_amps = i;
        pt.n_scans = 6;
        pt.n_configs = 6;
        pt.series = "t";
        manifest.points.push_back(pt);
    }
    PipelineOptions opt;
    opt.out_dir = (tmp.path / "run").string();
    opt.workers = 4;

    run_simulate(manifest, opt);
    CHECK(fs::exists(fs::path(opt.out_dir) / "scans" / "index.csv"));
    run_fit(opt);
    CHECK(fs::exists(fs::path(opt.out_dir) / "fits" / "fits.jsonl"));
    run_reduce(opt);
    const auto pts = parse_reduced_csv(read_text((fs::path(opt.out_dir) / "reduced" / "points.csv").string()));
    CHECK(pts.size() == 4);
    for (const auto& p : pts) CHECK(p.n_scans == 6);

    const auto sc = parse_scenario(scen_path);
    const auto res = run_extract(sc, opt);
    CHECK(res.inside.n_points == 4);
    CHECK(fs::exists(fs::path(opt.out_dir) / "hmw_result.csv"));
    // very loose: 6 scans per point cannot pin alpha tightly
    CHECK(std::fabs(res.inside.alpha.value - sc.hmw_per_va) < 6.0 * res.inside.alpha.sigma);

    SUBCASE("idempotent rerun byte-identical") {
        const auto index1 = read_text((fs::path(opt.out_dir) / "scans" / "index.csv").string());
        const auto fits1 = read_text((fs::path(opt.out_dir) / "fits" / "fits.jsonl").string());
        run_simulate(manifest, opt);
        run_fit(opt);
        CHECK(read_text((fs::path(opt.out_dir) / "scans" / "index.csv").string()) == index1);
        CHECK(read_text((fs::path(opt.out_dir) / "fits" / "fits.jsonl").string()) == fits1);
    }
}

TEST_CASE("plot data tables") {
    TempDir tmp;
    PipelineOptions opt;
    opt.out_dir = tmp.path.string();
    const auto sc = make_baseline_scenario();
    for (const char* fig : {"fig8", "fig9", "fig13", "fig18"}) {
        run_plot_data(fig, sc, opt);
        CHECK(fs::exists(tmp.path / (std::string("plot_") + fig + ".csv")));
    }
    CHECK_THROWS_AS(run_plot_data("fig11", sc, opt), Error);

    // fig10 oracle table: zero crossing near 18 A and a revival near -0.70 at 23 A
    run_plot_data("fig10", sc, opt);
    const auto text = read_text((tmp.path / "plot_fig10.csv").string());
    std::istringstream in(text);
    std::string line;
    double re23 = 0.0, zero_cross = 0.0, prev_i = 0.0, prev_re = 1.0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'i') continue;
        double i, re, im;
        std::sscanf(line.c_str(), "%lf,%lf,%lf", &i, &re, &im);
        if (i > 10.0 && prev_re > 0.0 && re <= 0.0 && zero_cross == 0.0) {
            zero_cross = 0.5 * (i + prev_i);
        }
        if (std::fabs(i - 23.0) < 0.01) re23 = re;
        if (i > 10.0) {
            prev_re = re;
            prev_i = i;
        }
    }
    CHECK(zero_cross == doctest::Approx(18.0).epsilon(0.056));
    CHECK(re23 == doctest::Approx(-0.70).epsilon(0.072));
}

TEST_CASE("validate sweep stays within tolerance") {
    PipelineOptions opt;
    opt.cut_amps = 8.0;  // subsample for test speed; the acceptance suite runs the full grid
    const auto rep = run_validate(make_baseline_scenario(), opt);
    CHECK(rep.pass);
    CHECK(rep.max_phase_dev < 1e-3);
    CHECK(rep.max_vis_dev < 0.01);
}
