#include "hmw/io.hpp"

#include "hmw/error.hpp"

#include <nlohmann/json.hpp>

#include <cinttypes>
#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>

using nlohmann::json;
namespace fs = std::filesystem;

namespace hmw {

std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

[[noreturn]] void schema_error(const std::string& origin, const std::string& where,
                               const std::string& what) {
    fail_schema(origin + ": " + where + ": " + what);
}

void require_keys(const json& obj, const std::string& origin, const std::string& where,
                  std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed) {
            if (it.key() == k) ok = true;
        }
        if (!ok) schema_error(origin, where, "unknown key '" + it.key() + "'");
    }
}

double num(const json& obj, const std::string& origin, const std::string& where, const char* key,
           double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) schema_error(origin, where + "." + key, "expected a number");
    return v.get<double>();
}

bool flag(const json& obj, const std::string& origin, const std::string& where, const char* key,
          bool fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) schema_error(origin, where + "." + key, "expected a boolean");
    return v.get<bool>();
}

json parse_json(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail_schema(origin + ": " + e.what());
    }
}

} // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
    const json root = parse_json(text, origin);
    if (!root.is_object()) schema_error(origin, "$", "scenario must be a JSON object");
    require_keys(root, origin, "$",
                 {"format_version", "zeeman", "stark", "beam", "dispersions", "couplings",
                  "populations", "drift", "noise", "anomalous", "compensator", "scan", "seed"});
    if (root.contains("format_version") && root.at("format_version").get<int>() != 1) {
        schema_error(origin, "format_version", "unsupported version");
    }

    Scenario sc = make_baseline_scenario();

    if (root.contains("zeeman")) {
        const auto& z = root.at("zeeman");
        require_keys(z, origin, "zeeman",
                     {"j0_rad", "i0_amp", "a_j1_rad_per_amp", "a_j2_rad_per_amp2",
                      "a_j3_rad_per_amp3", "i0c_amp", "a_j1c_rad_per_amp"});
        sc.zeeman.j0 = num(z, origin, "zeeman", "j0_rad", sc.zeeman.j0);
        sc.zeeman.i0 = num(z, origin, "zeeman", "i0_amp", sc.zeeman.i0);
        sc.zeeman.a_j1 = num(z, origin, "zeeman", "a_j1_rad_per_amp", sc.zeeman.a_j1);
        sc.zeeman.a_j2 = num(z, origin, "zeeman", "a_j2_rad_per_amp2", sc.zeeman.a_j2);
        sc.zeeman.a_j3 = num(z, origin, "zeeman", "a_j3_rad_per_amp3", sc.zeeman.a_j3);
        sc.zeeman.i0c = num(z, origin, "zeeman", "i0c_amp", sc.zeeman.i0c);
        sc.zeeman.a_j1c = num(z, origin, "zeeman", "a_j1c_rad_per_amp", sc.zeeman.a_j1c);
    }
    if (root.contains("stark")) {
        const auto& s = root.at("stark");
        require_keys(s, origin, "stark",
                     {"phi_upper_rad_per_v2", "phi_lower_rad_per_v2", "residual_rad_per_v2",
                      "l_eff_m", "h_upper_m", "h_lower_m", "contact_upper_v", "contact_lower_v"});
        sc.stark.phi_upper_per_v2 =
            num(s, origin, "stark", "phi_upper_rad_per_v2", sc.stark.phi_upper_per_v2);
        sc.stark.phi_lower_per_v2 =
            num(s, origin, "stark", "phi_lower_rad_per_v2", sc.stark.phi_lower_per_v2);
        sc.stark.residual_per_v2 =
            num(s, origin, "stark", "residual_rad_per_v2", sc.stark.residual_per_v2);
        sc.stark.l_eff_m = num(s, origin, "stark", "l_eff_m", sc.stark.l_eff_m);
        sc.stark.h_upper_m = num(s, origin, "stark", "h_upper_m", sc.stark.h_upper_m);
        sc.stark.h_lower_m = num(s, origin, "stark", "h_lower_m", sc.stark.h_lower_m);
        sc.stark.contact_upper_v = num(s, origin, "stark", "contact_upper_v", sc.stark.contact_upper_v);
        sc.stark.contact_lower_v = num(s, origin, "stark", "contact_lower_v", sc.stark.contact_lower_v);
    }
    std::size_t y_samples = sc.beam.y.size();
    if (root.contains("beam")) {
        const auto& b = root.at("beam");
        require_keys(b, origin, "beam",
                     {"mean_velocity_m_per_s", "parallel_speed_ratio", "mean_rate_counts_per_s",
                      "base_visibility", "y_samples"});
        sc.beam.mean_velocity = num(b, origin, "beam", "mean_velocity_m_per_s", sc.beam.mean_velocity);
        sc.beam.speed_ratio = num(b, origin, "beam", "parallel_speed_ratio", sc.beam.speed_ratio);
        sc.beam.mean_rate = num(b, origin, "beam", "mean_rate_counts_per_s", sc.beam.mean_rate);
        sc.beam.base_visibility = num(b, origin, "beam", "base_visibility", sc.beam.base_visibility);
        y_samples = static_cast<std::size_t>(
            num(b, origin, "beam", "y_samples", static_cast<double>(y_samples)));
        if (y_samples < 3) schema_error(origin, "beam.y_samples", "too few samples");
        sc.beam.build_y_grid(y_samples);
    }
    double d_span = 1.0, g_span = 0.8, c_span = 0.0, z_span = 0.1;
    if (root.contains("dispersions")) {
        const auto& d = root.at("dispersions");
        require_keys(d, origin, "dispersions",
                     {"diffraction_span_rad", "stark_geom_span_rad_at_800v",
                      "contact_span_rad_per_v", "zeeman_span"});
        d_span = num(d, origin, "dispersions", "diffraction_span_rad", d_span);
        g_span = num(d, origin, "dispersions", "stark_geom_span_rad_at_800v", g_span);
        c_span = num(d, origin, "dispersions", "contact_span_rad_per_v", c_span);
        z_span = num(d, origin, "dispersions", "zeeman_span", z_span);
    }
    sc.profiles = DispersionProfiles::ramps(sc.beam.y, d_span, g_span, c_span, z_span);
    if (root.contains("couplings")) {
        const auto& c = root.at("couplings");
        require_keys(c, origin, "couplings", {"hmw_rad_per_va", "ac_rad_per_v"});
        sc.hmw_per_va = num(c, origin, "couplings", "hmw_rad_per_va", sc.hmw_per_va);
        sc.ac_per_v = num(c, origin, "couplings", "ac_rad_per_v", sc.ac_per_v);
    }
    if (root.contains("populations")) {
        const auto& p = root.at("populations");
        require_keys(p, origin, "populations", {"chi"});
        sc.chi = num(p, origin, "populations", "chi", sc.chi);
    }
    if (root.contains("drift")) {
        const auto& d = root.at("drift");
        require_keys(d, origin, "drift",
                     {"linear_rad_per_s", "sine_amplitude_rad", "sine_period_s"});
        sc.drift.linear_rate = num(d, origin, "drift", "linear_rad_per_s", sc.drift.linear_rate);
        sc.drift.sine_amplitude = num(d, origin, "drift", "sine_amplitude_rad", sc.drift.sine_amplitude);
        sc.drift.sine_period = num(d, origin, "drift", "sine_period_s", sc.drift.sine_period);
    }
    if (root.contains("noise")) {
        const auto& n = root.at("noise");
        require_keys(n, origin, "noise", {"poisson", "phase_jitter_rad"});
        sc.noise.poisson = flag(n, origin, "noise", "poisson", sc.noise.poisson);
        sc.noise.phase_jitter = num(n, origin, "noise", "phase_jitter_rad", sc.noise.phase_jitter);
    }
    if (root.contains("anomalous")) {
        const auto& a = root.at("anomalous");
        require_keys(a, origin, "anomalous", {"a_rad_per_v", "b_rad_per_v3"});
        sc.anomalous.a = num(a, origin, "anomalous", "a_rad_per_v", sc.anomalous.a);
        sc.anomalous.b = num(a, origin, "anomalous", "b_rad_per_v3", sc.anomalous.b);
    }
    if (root.contains("compensator")) {
        const auto& c = root.at("compensator");
        require_keys(c, origin, "compensator", {"ratio_divisor", "cap_amp"});
        sc.compensator.ratio_divisor = num(c, origin, "compensator", "ratio_divisor",
                                           sc.compensator.ratio_divisor);
        sc.compensator.cap_amp = num(c, origin, "compensator", "cap_amp", sc.compensator.cap_amp);
    }
    if (root.contains("scan")) {
        const auto& s = root.at("scan");
        require_keys(s, origin, "scan", {"bin_seconds", "fringes"});
        sc.scan.bin_seconds = num(s, origin, "scan", "bin_seconds", sc.scan.bin_seconds);
        sc.scan.fringes = num(s, origin, "scan", "fringes", sc.scan.fringes);
    }
    if (root.contains("seed")) {
        if (!root.at("seed").is_number_unsigned() && !root.at("seed").is_number_integer()) {
            schema_error(origin, "seed", "expected an integer");
        }
        sc.seed = root.at("seed").get<std::uint64_t>();
    }

    sc.validate();
    return sc;
}

Scenario parse_scenario(const std::string& path) {
    return parse_scenario_text(read_text(path), path);
}

CampaignManifest parse_manifest_text(const std::string& text, const std::string& origin,
                                     const std::string& base_dir) {
    const json root = parse_json(text, origin);
    if (!root.is_object()) schema_error(origin, "$", "manifest must be a JSON object");
    require_keys(root, origin, "$",
                 {"format_version", "scenario", "out_dir", "master_seed", "points"});
    if (root.contains("format_version") && root.at("format_version").get<int>() != 1) {
        schema_error(origin, "format_version", "unsupported version");
    }
    CampaignManifest m;
    if (!root.contains("scenario")) schema_error(origin, "scenario", "missing scenario path");
    m.scenario_path = root.at("scenario").get<std::string>();
    if (!fs::path(m.scenario_path).is_absolute() && !base_dir.empty()) {
        m.scenario_path = (fs::path(base_dir) / m.scenario_path).string();
    }
    if (root.contains("out_dir")) m.out_dir = root.at("out_dir").get<std::string>();
    if (root.contains("master_seed")) m.master_seed = root.at("master_seed").get<std::uint64_t>();
    if (!root.contains("points") || !root.at("points").is_array() || root.at("points").empty()) {
        schema_error(origin, "points", "need a non-empty array of campaign points");
    }
    int idx = 0;
    for (const auto& p : root.at("points")) {
        const std::string where = "points[" + std::to_string(idx++) + "]";
        require_keys(p, origin, where,
                     {"v_volts", "i_amps", "n_scans", "n_configs", "series", "scenario"});
        CampaignPoint pt;
        pt.v_volts = num(p, origin, where, "v_volts", 0.0);
        pt.i_amps = num(p, origin, where, "i_amps", 0.0);
        pt.n_scans = static_cast<int>(num(p, origin, where, "n_scans", 0.0));
        pt.n_configs = static_cast<int>(num(p, origin, where, "n_configs", 6.0));
        if (p.contains("series")) pt.series = p.at("series").get<std::string>();
        if (pt.series.empty()) pt.series = "p" + std::to_string(idx - 1);
        if (p.contains("scenario")) {
            pt.scenario_path = p.at("scenario").get<std::string>();
            if (!fs::path(pt.scenario_path).is_absolute() && !base_dir.empty()) {
                pt.scenario_path = (fs::path(base_dir) / pt.scenario_path).string();
            }
            if (!fs::exists(pt.scenario_path)) {
                schema_error(origin, where + ".scenario", "scenario file not found");
            }
        }
        if (!(pt.v_volts > 0.0)) schema_error(origin, where + ".v_volts", "must be > 0");
        if (pt.i_amps == 0.0) schema_error(origin, where + ".i_amps", "must be nonzero");
        if (pt.n_scans < 1) schema_error(origin, where + ".n_scans", "must be >= 1");
        if (pt.n_configs != 4 && pt.n_configs != 6) {
            schema_error(origin, where + ".n_configs", "must be 4 or 6");
        }
        m.points.push_back(pt);
    }
    if (!fs::exists(m.scenario_path)) schema_error(origin, "scenario", "scenario file not found");
    return m;
}

CampaignManifest parse_manifest(const std::string& path) {
    return parse_manifest_text(read_text(path), path, fs::path(path).parent_path().string());
}

void atomic_write_text(const std::string& path, const std::string& content) {
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    const std::string tmp = path + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail_io("cannot open for writing: " + tmp);
        out << content;
        if (!out.good()) fail_io("short write: " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail_io("cannot rename into place: " + path);
    }
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_scan(const FringeScan& scan) {
    std::ostringstream out;
    out << "# hmw-scan v1\n";
    out << "# series=" << scan.series << " v_volts=" << g17(scan.v_volts)
        << " i_amps=" << g17(scan.i_amps) << " seed=" << scan.seed
        << " bin_seconds=" << g17(scan.bin_seconds) << " duration=" << g17(scan.duration)
        << " n_configs=" << scan.configs.size() << "\n";
    for (std::size_t i = 0; i < scan.configs.size(); ++i) {
        const auto& c = scan.configs[i];
        out << "# config " << i << " " << to_string(c.label) << " " << g17(c.v_volts) << " "
            << g17(c.i_amps) << " " << g17(c.i_comp_amps) << "\n";
    }
    out << "# columns: t_s x3phi_rad config counts\n";
    for (const auto& b : scan.bins) {
        out << g17(b.t) << " " << g17(b.x3phi) << " " << b.config << " " << g17(b.counts) << "\n";
    }
    return out.str();
}

FringeScan parse_scan(const std::string& text, const std::string& origin) {
    FringeScan scan;
    std::istringstream in(text);
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# hmw-scan v1", 0) == 0) {
                header_seen = true;
            } else if (line.rfind("# series=", 0) == 0) {
                std::istringstream h(line.substr(2));
                std::string tok;
                while (h >> tok) {
                    const auto eq = tok.find('=');
                    if (eq == std::string::npos) continue;
                    const std::string key = tok.substr(0, eq);
                    const std::string val = tok.substr(eq + 1);
                    if (key == "series") scan.series = val;
                    else if (key == "v_volts") scan.v_volts = std::strtod(val.c_str(), nullptr);
                    else if (key == "i_amps") scan.i_amps = std::strtod(val.c_str(), nullptr);
                    else if (key == "seed") scan.seed = std::strtoull(val.c_str(), nullptr, 10);
                    else if (key == "bin_seconds") scan.bin_seconds = std::strtod(val.c_str(), nullptr);
                    else if (key == "duration") scan.duration = std::strtod(val.c_str(), nullptr);
                }
            } else if (line.rfind("# config ", 0) == 0) {
                std::istringstream h(line.substr(9));
                std::size_t idx;
                std::string label;
                double v, i, ic;
                if (!(h >> idx >> label >> v >> i >> ic)) {
                    fail_schema(origin + ": bad config header line");
                }
                if (scan.configs.size() != idx) fail_schema(origin + ": config indices out of order");
                scan.configs.push_back({v, i, ic, config_label_from_string(label)});
            }
            continue;
        }
        std::istringstream row(line);
        ScanBin bin;
        if (!(row >> bin.t >> bin.x3phi >> bin.config >> bin.counts)) {
            fail_schema(origin + ": bad scan record: " + line);
        }
        scan.bins.push_back(bin);
    }
    if (!header_seen) fail_schema(origin + ": missing hmw-scan header");
    if (scan.configs.empty() || scan.bins.empty()) fail_schema(origin + ": empty scan file");
    return scan;
}

void write_scan(const std::string& path, const FringeScan& scan) {
    atomic_write_text(path, format_scan(scan));
}

FringeScan read_scan(const std::string& path) { return parse_scan(read_text(path), path); }

std::string format_scan_fit(const ScanFit& fit) {
    json j;
    j["series"] = fit.series;
    j["v_volts"] = fit.v_volts;
    j["i_amps"] = fit.i_amps;
    j["seed"] = fit.seed;
    j["drift_rate"] = fit.drift_rate;
    j["sigma_drift"] = fit.sigma_drift;
    j["chi2"] = fit.chi2;
    j["dof"] = fit.dof;
    j["iterations"] = fit.iterations;
    j["jitter"] = fit.jitter_estimate;
    json cfgs = json::array();
    for (std::size_t i = 0; i < fit.configs.size(); ++i) {
        const auto& c = fit.configs[i];
        const auto& f = fit.field_configs[i];
        cfgs.push_back({{"label", to_string(f.label)},
                        {"v_volts", f.v_volts},
                        {"i_amps", f.i_amps},
                        {"ic_amps", f.i_comp_amps},
                        {"rate", c.rate},
                        {"vis", c.visibility},
                        {"phase", c.phase},
                        {"sigma_rate", c.sigma_rate},
                        {"sigma_vis", c.sigma_visibility},
                        {"sigma_phase", c.sigma_phase}});
    }
    j["configs"] = cfgs;
    json cov = json::array();
    for (int r = 0; r < fit.covariance.rows(); ++r) {
        for (int c = 0; c < fit.covariance.cols(); ++c) cov.push_back(fit.covariance(r, c));
    }
    j["cov"] = cov;
    return j.dump();
}

ScanFit parse_scan_fit(const std::string& line) {
    const json j = parse_json(line, "<scan-fit>");
    ScanFit fit;
    fit.series = j.at("series").get<std::string>();
    fit.v_volts = j.at("v_volts").get<double>();
    fit.i_amps = j.at("i_amps").get<double>();
    fit.seed = j.at("seed").get<std::uint64_t>();
    fit.drift_rate = j.at("drift_rate").get<double>();
    fit.sigma_drift = j.at("sigma_drift").get<double>();
    fit.chi2 = j.at("chi2").get<double>();
    fit.dof = j.at("dof").get<int>();
    fit.iterations = j.at("iterations").get<int>();
    fit.jitter_estimate = j.at("jitter").get<double>();
    for (const auto& c : j.at("configs")) {
        ConfigFit cf;
        cf.rate = c.at("rate").get<double>();
        cf.visibility = c.at("vis").get<double>();
        cf.phase = c.at("phase").get<double>();
        cf.sigma_rate = c.at("sigma_rate").get<double>();
        cf.sigma_visibility = c.at("sigma_vis").get<double>();
        cf.sigma_phase = c.at("sigma_phase").get<double>();
        fit.configs.push_back(cf);
        FieldConfiguration f;
        f.v_volts = c.at("v_volts").get<double>();
        f.i_amps = c.at("i_amps").get<double>();
        f.i_comp_amps = c.at("ic_amps").get<double>();
        f.label = config_label_from_string(c.at("label").get<std::string>());
        fit.field_configs.push_back(f);
    }
    const auto& cov = j.at("cov");
    const int np = 1 + 3 * static_cast<int>(fit.configs.size());
    if (static_cast<int>(cov.size()) != np * np) fail_schema("scan fit covariance size mismatch");
    fit.covariance.resize(np, np);
    int k = 0;
    for (int r = 0; r < np; ++r) {
        for (int c = 0; c < np; ++c) fit.covariance(r, c) = cov.at(k++).get<double>();
    }
    return fit;
}

namespace {

void append_measured(std::ostringstream& out, const Measured& m) {
    out << "," << g17(m.value) << "," << g17(m.sigma);
}

Measured read_measured(std::istringstream& in) {
    std::string a, b;
    std::getline(in, a, ',');
    std::getline(in, b, ',');
    return {std::strtod(a.c_str(), nullptr), std::strtod(b.c_str(), nullptr)};
}

} // namespace

std::string format_reduced_csv(const std::vector<ReducedPoint>& points) {
    std::ostringstream out;
    out << "# hmw-reduced v1; units: volts, amperes, rad; visibilities dimensionless\n";
    out << "series,v_volts,i_amps,n_scans,outlier,ve,ve_sigma,phie,phie_sigma,vb,vb_sigma,"
           "phib,phib_sigma,veb,veb_sigma,phieb,phieb_sigma,has_minus_v,ve_m,ve_m_sigma,"
           "phie_m,phie_m_sigma,veb_m,veb_m_sigma,phieb_m,phieb_m_sigma,chi\n";
    for (const auto& p : points) {
        out << p.series << "," << g17(p.v_volts) << "," << g17(p.i_amps) << "," << p.n_scans
            << "," << (p.outlier ? 1 : 0);
        append_measured(out, p.ve);
        append_measured(out, p.phie);
        append_measured(out, p.vb);
        append_measured(out, p.phib);
        append_measured(out, p.veb);
        append_measured(out, p.phieb);
        out << "," << (p.has_minus_v ? 1 : 0);
        append_measured(out, p.ve_m);
        append_measured(out, p.phie_m);
        append_measured(out, p.veb_m);
        append_measured(out, p.phieb_m);
        out << "," << g17(p.chi_estimate) << "\n";
    }
    return out.str();
}

std::vector<ReducedPoint> parse_reduced_csv(const std::string& text) {
    std::vector<ReducedPoint> points;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("series,", 0) == 0) continue;
        std::istringstream row(line);
        ReducedPoint p;
        std::string tok;
        std::getline(row, p.series, ',');
        std::getline(row, tok, ',');
        p.v_volts = std::strtod(tok.c_str(), nullptr);
        std::getline(row, tok, ',');
        p.i_amps = std::strtod(tok.c_str(), nullptr);
        std::getline(row, tok, ',');
        p.n_scans = static_cast<int>(std::strtol(tok.c_str(), nullptr, 10));
        std::getline(row, tok, ',');
        p.outlier = tok == "1";
        p.ve = read_measured(row);
        p.phie = read_measured(row);
        p.vb = read_measured(row);
        p.phib = read_measured(row);
        p.veb = read_measured(row);
        p.phieb = read_measured(row);
        std::getline(row, tok, ',');
        p.has_minus_v = tok == "1";
        p.ve_m = read_measured(row);
        p.phie_m = read_measured(row);
        p.veb_m = read_measured(row);
        p.phieb_m = read_measured(row);
        std::getline(row, tok, ',');
        p.chi_estimate = std::strtod(tok.c_str(), nullptr);
        points.push_back(p);
    }
    return points;
}

std::string format_zeeman_csv(const std::vector<ZeemanDataPoint>& data) {
    std::ostringstream out;
    out << "# hmw-zeeman-data v1; units: amperes, rad\n";
    out << "series,i_amps,ic_amps,vb,vb_sigma,phib,phib_sigma\n";
    for (const auto& d : data) {
        out << d.series << "," << g17(d.i_amps) << "," << g17(d.i_comp_amps);
        append_measured(out, d.vb);
        append_measured(out, d.phib);
        out << "\n";
    }
    return out.str();
}

std::vector<ZeemanDataPoint> parse_zeeman_csv(const std::string& text) {
    std::vector<ZeemanDataPoint> data;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("series,", 0) == 0) continue;
        std::istringstream row(line);
        ZeemanDataPoint d;
        std::string tok;
        std::getline(row, tok, ',');
        d.series = static_cast<int>(std::strtol(tok.c_str(), nullptr, 10));
        std::getline(row, tok, ',');
        d.i_amps = std::strtod(tok.c_str(), nullptr);
        std::getline(row, tok, ',');
        d.i_comp_amps = std::strtod(tok.c_str(), nullptr);
        d.vb = read_measured(row);
        d.phib = read_measured(row);
        data.push_back(d);
    }
    return data;
}

std::string format_table_csv(const std::string& name, const std::vector<std::string>& columns,
                             const std::vector<std::vector<double>>& rows) {
    std::ostringstream out;
    out << "# " << name << " v1\n";
    for (std::size_t i = 0; i < columns.size(); ++i) {
        out << columns[i] << (i + 1 < columns.size() ? "," : "\n");
    }
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << g17(row[i]) << (i + 1 < row.size() ? "," : "");
        }
        out << "\n";
    }
    return out.str();
}

} // namespace hmw
