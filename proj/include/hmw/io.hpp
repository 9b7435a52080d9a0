#pragma once

#include "hmw/analysis.hpp"
#include "hmw/fit.hpp"
#include "hmw/reduced.hpp"
#include "hmw/scan.hpp"
#include "hmw/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hmw {

// Scenario files: JSON, format_version 1, unknown keys rejected, every section
// optional with paper-baseline defaults (schema documented in the README).
Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& text, const std::string& origin = "<inline>");

struct CampaignPoint {
    double v_volts = 0.0;
    double i_amps = 0.0;
    int n_scans = 0;
    int n_configs = 6;
    std::string series;
    std::string scenario_path;  // optional per-point override
};

struct CampaignManifest {
    std::string scenario_path;
    std::string out_dir;
    std::uint64_t master_seed = 1;
    std::vector<CampaignPoint> points;
};

CampaignManifest parse_manifest(const std::string& path);
CampaignManifest parse_manifest_text(const std::string& text, const std::string& origin,
                                     const std::string& base_dir);

// Atomic write: temp file in the target directory, then rename.
void atomic_write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

// Scan persistence: line records, one per counting bin, full double precision.
std::string format_scan(const FringeScan& scan);
FringeScan parse_scan(const std::string& text, const std::string& origin = "<scan>");
void write_scan(const std::string& path, const FringeScan& scan);
FringeScan read_scan(const std::string& path);

// Per-scan fits as JSON lines (parameters plus the covariance needed downstream).
std::string format_scan_fit(const ScanFit& fit);
ScanFit parse_scan_fit(const std::string& line);

// Reduced points as a CSV table (units documented in the header line).
std::string format_reduced_csv(const std::vector<ReducedPoint>& points);
std::vector<ReducedPoint> parse_reduced_csv(const std::string& text);

// Zeeman calibration data rows.
std::string format_zeeman_csv(const std::vector<ZeemanDataPoint>& data);
std::vector<ZeemanDataPoint> parse_zeeman_csv(const std::string& text);

// Generic numeric table with a commented header (plot-data output).
std::string format_table_csv(const std::string& name, const std::vector<std::string>& columns,
                             const std::vector<std::vector<double>>& rows);

std::string g17(double x);

} // namespace hmw
