#pragma once

#include "hmw/analysis.hpp"
#include "hmw/io.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hmw {

struct PipelineOptions {
    std::string out_dir;
    int workers = 0;                 // 0 -> hardware concurrency (capped)
    double cut_amps = 12.0;
    bool no_correction = false;
    std::string oracle_mode = "exact";  // "exact" | "model"
    std::uint64_t seed_override = 0;    // 0 -> manifest master seed
};

// Bounded worker-pool map over [0, n).
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// simulate: scans to disk under <out>/scans plus an index table.
void run_simulate(const CampaignManifest& manifest, const PipelineOptions& opt);

// fit: scan files -> per-scan fits (<out>/fits/fits.jsonl).
void run_fit(const PipelineOptions& opt);

// reduce: fits -> per-scan and aggregated reduced points under <out>/reduced.
void run_reduce(const PipelineOptions& opt);

struct HmwExtraction {
    HMWResult inside;   // |I| <= cut
    HMWResult outside;  // |I| > cut (only when such points exist)
    bool has_outside = false;
    std::vector<SlopePoint> points_inside;
};

// extract-hmw on aggregated reduced points; writes <out>/hmw_result.csv.
HmwExtraction run_extract(const Scenario& calibration, const PipelineOptions& opt);

struct ValidationReport {
    double max_phase_dev = 0.0;      // rad, reduced phi_EB model vs oracle
    double max_vis_dev = 0.0;        // reduced V_EB model vs oracle
    double max_cfg_phase_dev = 0.0;  // per-configuration phase
    double max_cfg_vis_dev = 0.0;    // per-configuration relative visibility
    double grid_modulus_shift = 0.0;
    double grid_argument_shift = 0.0;
    bool pass = false;
};

// validate: oracle-vs-model sweep over |V| <= 800, |I| <= cut; writes a report table.
ValidationReport run_validate(const Scenario& sc, const PipelineOptions& opt);

// plot-data: x/y(/sigma) tables for the paper-figure analogs (fig4..fig18).
void run_plot_data(const std::string& figure, const Scenario& sc, const PipelineOptions& opt);

// calibrate-zeeman / calibrate-stark / fit-visibility helpers used by the CLI.
GlobalZeemanFit run_calibrate_zeeman(const Scenario& sc, const std::string& data_csv_path,
                                     int n_series, std::uint64_t seed, const PipelineOptions& opt);
struct StarkCalibrationRun {
    StarkCalibrationFit upper;
    StarkCalibrationFit lower;
};
StarkCalibrationRun run_calibrate_stark(const Scenario& sc, std::uint64_t seed,
                                        const PipelineOptions& opt);
VisibilityPolynomialFit run_fit_visibility(const Scenario& sc, const std::string& reduced_csv_path,
                                           const PipelineOptions& opt);

} // namespace hmw
