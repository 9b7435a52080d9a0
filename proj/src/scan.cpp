#include "hmw/scan.hpp"

#include "hmw/oracle.hpp"
#include "hmw/rng.hpp"
#include "hmw/signal_model.hpp"

#include <cmath>
#include <stdexcept>

namespace hmw {

namespace {

// Rejects ratios within tol/q^2 of any p/q with q <= 8.
bool near_low_order_rational(double ratio, double tol = 0.02) {
    for (int q = 1; q <= 8; ++q) {
        const double p = std::round(ratio * q);
        if (std::fabs(ratio - p / q) < tol / (q * q)) return true;
    }
    return false;
}

} // namespace

ScheduleInfo schedule(int n_configs, double duration_s, double bin_seconds, double fringes) {
    if (n_configs != 4 && n_configs != 6) {
        throw std::invalid_argument("schedule: configuration count must be 4 or 6");
    }
    if (!(bin_seconds > 0.0) || !(duration_s > 0.0) || !(fringes > 0.0)) {
        throw std::invalid_argument("schedule: durations must be positive");
    }
    const int total_bins = static_cast<int>(std::floor(duration_s / bin_seconds + 0.5));
    const double fringe_period = duration_s / fringes;

    int dwell = std::max(1, static_cast<int>(std::lround(0.5 / bin_seconds)));
    int base_cycle = dwell * n_configs;
    if (base_cycle > total_bins) {
        throw std::invalid_argument("schedule: scan too short to cover one configuration cycle");
    }

    ScheduleInfo info;
    int extra = 0;
    for (;; ++extra) {
        const int cycle_bins = base_cycle + extra;
        if (cycle_bins > total_bins) {
            throw std::invalid_argument("schedule: cannot find an incommensurate cycle length");
        }
        const double ratio = cycle_bins * bin_seconds / fringe_period;
        if (!near_low_order_rational(ratio)) {
            info.cycle_bins = cycle_bins;
            info.ratio = ratio;
            info.adjusted = extra > 0;
            break;
        }
    }

    // dwell runs per config; the extra bins extend the trailing slots one each
    info.cycle.assign(info.cycle_bins, 0);
    int pos = 0;
    for (int c = 0; c < n_configs; ++c) {
        int len = dwell + (c >= n_configs - extra ? 1 : 0);
        for (int k = 0; k < len && pos < info.cycle_bins; ++k) info.cycle[pos++] = c;
    }
    while (pos < info.cycle_bins) info.cycle[pos++] = n_configs - 1;

    // every configuration must keep a usable share of the cycle
    std::vector<int> share(n_configs, 0);
    for (int c : info.cycle) ++share[c];
    for (int c = 0; c < n_configs; ++c) {
        if (share[c] * 1.0 / info.cycle_bins < 0.15) {
            throw std::invalid_argument("schedule: configuration share fell below 15%");
        }
    }
    return info;
}

std::vector<ConfigTruth> config_truth(const std::vector<FieldConfiguration>& configs,
                                      const Scenario& sc, bool use_model) {
    std::vector<ConfigTruth> truth(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        if (use_model) {
            const auto p = predict(configs[i], sc);
            truth[i] = {sc.beam.base_visibility * p.vis_factor, p.phase};
        } else {
            const auto a = brute_force_signal(configs[i], sc);
            truth[i] = {sc.beam.base_visibility * a.modulus, a.argument};
        }
        // anomalous V-odd phase, present only when the coil current is on
        if (configs[i].i_amps != 0.0) {
            const double V = configs[i].v_volts;
            truth[i].phase += sc.anomalous.a * V + sc.anomalous.b * V * V * V;
        }
    }
    return truth;
}

FringeScan synthesize_scan_with_truth(const Scenario& sc, double v_volts, double i_amps,
                                      std::uint64_t seed, const SynthesisOptions& opt,
                                      const std::vector<FieldConfiguration>& configs,
                                      const std::vector<ConfigTruth>& truth) {
    const auto sched = schedule(opt.n_configs, opt.duration_s, sc.scan.bin_seconds,
                                sc.scan.fringes);
    const int total_bins = static_cast<int>(std::floor(opt.duration_s / sc.scan.bin_seconds + 0.5));

    FringeScan scan;
    scan.configs = configs;
    scan.bin_seconds = sc.scan.bin_seconds;
    scan.duration = opt.duration_s;
    scan.v_volts = v_volts;
    scan.i_amps = i_amps;
    scan.seed = seed;
    scan.bins.resize(total_bins);

    Rng rng(seed);
    const double sweep_rate = 2.0 * M_PI * sc.scan.fringes / opt.duration_s;
    const double drift_phase0 = rng.uniform() * 2.0 * M_PI;
    const double rate = sc.beam.mean_rate;

    for (int b = 0; b < total_bins; ++b) {
        ScanBin& bin = scan.bins[b];
        bin.t = (b + 0.5) * sc.scan.bin_seconds;
        bin.x3phi = sweep_rate * bin.t;
        bin.config = sched.cycle[b % sched.cycle_bins];

        double phase = bin.x3phi + sc.drift.linear_rate * bin.t;
        if (sc.drift.sine_amplitude != 0.0) {
            phase += sc.drift.sine_amplitude *
                     std::sin(2.0 * M_PI * bin.t / sc.drift.sine_period + drift_phase0);
        }
        if (!opt.noiseless && sc.noise.phase_jitter > 0.0) {
            phase += rng.normal(0.0, sc.noise.phase_jitter);
        }

        const auto& ct = truth[bin.config];
        const double mean = rate * sc.scan.bin_seconds * (1.0 + ct.vis * std::cos(phase + ct.phase));
        if (mean < 0.0) {
            throw std::invalid_argument("synthesize_scan: negative mean rate (over-modulated)");
        }
        if (opt.noiseless || !sc.noise.poisson) {
            bin.counts = mean;
        } else {
            bin.counts = static_cast<double>(rng.poisson(mean));
        }
    }
    return scan;
}

FringeScan synthesize_scan(const Scenario& sc, double v_volts, double i_amps, std::uint64_t seed,
                           const SynthesisOptions& opt) {
    sc.validate();
    const auto configs = make_config_cycle(v_volts, i_amps, opt.n_configs, sc.compensator);
    const auto truth = config_truth(configs, sc, opt.use_model);
    return synthesize_scan_with_truth(sc, v_volts, i_amps, seed, opt, configs, truth);
}

} // namespace hmw
