#pragma once

#include "hmw/reduced.hpp"
#include "hmw/scan.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace hmw {

struct ConfigFit {
    double rate = 0.0;        // counts/s
    double visibility = 0.0;  // in [-1, 1], canonicalized to >= 0 with the phase
    double phase = 0.0;       // rad
    double sigma_rate = 0.0;
    double sigma_visibility = 0.0;
    double sigma_phase = 0.0;
};

// One interleaved scan fitted with a shared diffraction-phase parameterization
// (known reference phase plus a common linear drift term).
struct ScanFit {
    double drift_rate = 0.0;  // rad/s
    double sigma_drift = 0.0;
    std::vector<ConfigFit> configs;
    std::vector<FieldConfiguration> field_configs;
    // parameter order: [drift, (rate, vis, phase) per config]
    Eigen::MatrixXd covariance;
    double chi2 = 0.0;
    int dof = 0;
    int iterations = 0;
    double jitter_estimate = 0.0;  // rad/bin excess phase noise from residuals
    double v_volts = 0.0;
    double i_amps = 0.0;
    std::uint64_t seed = 0;
    std::string series;
};

struct FitOptions {
    int max_iterations = 300;
    double gradient_tol_rel = 1e-8;
    bool estimate_jitter = true;
};

ScanFit fit_scan(const FringeScan& scan, const FitOptions& opt = {});

// The six reduced quantities (and the -V twins when present) with uncertainties
// propagated from the full fit covariance.
ReducedPoint reduce(const ScanFit& fit);

// Inverse-variance weighted aggregation of reduced points at the same (V, I);
// points more than 5 sigma from the weighted mean are flagged and excluded.
ReducedPoint aggregate(const std::vector<ReducedPoint>& points);

} // namespace hmw
