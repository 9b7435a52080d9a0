#pragma once

#include "hmw/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hmw {

struct ScanBin {
    double t = 0.0;       // s, bin center
    double x3phi = 0.0;   // rad, Michelson-mapped reference phase
    int config = 0;       // index into FringeScan::configs
    double counts = 0.0;  // integer-valued when Poisson noise is on
};

struct FringeScan {
    std::vector<ScanBin> bins;
    std::vector<FieldConfiguration> configs;
    double bin_seconds = 0.1;
    double duration = 0.0;
    double v_volts = 0.0;
    double i_amps = 0.0;
    std::uint64_t seed = 0;
    std::string series;
};

struct ScheduleInfo {
    std::vector<int> cycle;   // config index per bin position within one cycle
    int cycle_bins = 0;
    bool adjusted = false;    // scheduler had to perturb the cycle length
    double ratio = 0.0;       // config-cycle period / fringe period
};

// Cyclic configuration schedule. The cycle length is perturbed away from low-order
// rational multiples of the fringe period; every configuration gets >= 15% of bins.
ScheduleInfo schedule(int n_configs, double duration_s, double bin_seconds, double fringes);

struct SynthesisOptions {
    int n_configs = 6;
    double duration_s = 20.0;
    bool noiseless = false;          // disables Poisson counting noise and phase jitter
    bool use_model = false;          // per-config truth from signal-model instead of the oracle
};

// Per-configuration truth used by the synthesizer: absolute visibility and phase.
struct ConfigTruth {
    double vis = 0.0;
    double phase = 0.0;
};
std::vector<ConfigTruth> config_truth(const std::vector<FieldConfiguration>& configs,
                                      const Scenario& sc, bool use_model);

FringeScan synthesize_scan(const Scenario& sc, double v_volts, double i_amps, std::uint64_t seed,
                           const SynthesisOptions& opt = {});

// Synthesis against precomputed per-config truth (caches the oracle across scans).
FringeScan synthesize_scan_with_truth(const Scenario& sc, double v_volts, double i_amps,
                                      std::uint64_t seed, const SynthesisOptions& opt,
                                      const std::vector<FieldConfiguration>& configs,
                                      const std::vector<ConfigTruth>& truth);

} // namespace hmw
