#pragma once

#include "hmw/phases.hpp"
#include "hmw/reduced.hpp"
#include "hmw/types.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace hmw {

// Values of one quantity on the four sign quadrants of (V, I).
struct SignQuad {
    Measured pp;  // (+V, +I)
    Measured mp;  // (-V, +I)
    Measured pm;  // (+V, -I)
    Measured mm;  // (-V, -I)
};

// Parity operators: mean and half-difference under reversal of V (E) or I (B).
Measured parity_me(const Measured& plus_v, const Measured& minus_v);
Measured parity_de(const Measured& plus_v, const Measured& minus_v);
Measured parity_mb(const Measured& plus_i, const Measured& minus_i);
Measured parity_db(const Measured& plus_i, const Measured& minus_i);

struct ParityCombination {
    Measured mb_me, mb_de, db_me, db_de;  // double operators on the quadrant values
    Measured me_p, de_p;                  // single-V operators at +I
    Measured db_p;                        // half-difference over I at +V
    double abs_v = 0.0, abs_i = 0.0;
};
ParityCombination parity(const SignQuad& quad, double abs_v, double abs_i);

// AC-corrected joint visibility V'_EB = V_EB / (1 - Delta_E V_E).
Measured corrected_visibility(const Measured& veb, const Measured& delta_e_ve);

// Stray-phase correction N--/D0 evaluated from calibrations; the diffraction-Zeeman
// correlations are substituted by rescaled Stark-Zeeman ones (both linear in y).
struct StrayCorrection {
    double value = 0.0;       // rad, added to Delta_B phi_EB
    bool d0_collapsed = false;
    bool large = false;       // |value| > 10 mrad
};
StrayCorrection stray_correction(double v_volts, double i_amps, const Scenario& calibration);

struct SlopePoint {
    double vi = 0.0;  // V*I product (V A)
    Measured y;       // rad
    double abs_i = 0.0;
};

struct HMWResult {
    Measured alpha;  // rad/(V A)
    Measured beta;   // rad
    double cov_alpha_beta = 0.0;
    double chi2 = 0.0;
    int n_points = 0;
    std::string cut_tag;  // "|I|<=cut" or "|I|>cut"
    std::vector<double> residuals;
};

HMWResult extract_slope(const std::vector<SlopePoint>& points, const std::string& cut_tag);

// --- calibration fits -------------------------------------------------------

struct StarkScanPoint {
    double v2 = 0.0;  // V^2
    Measured vis;     // relative visibility
    Measured phase;   // rad
};

struct StarkCalibrationFit {
    Measured speed_ratio;
    Measured phi_per_v2;  // rad/V^2, signed
    double chi2 = 0.0;
    int iterations = 0;
};

StarkCalibrationFit fit_stark_calibration(const std::vector<StarkScanPoint>& data,
                                          double mean_velocity);

struct VisibilityPolynomialFit {
    std::array<Measured, 4> k;  // k_V1..k_V4 in V^-1..V^-4
    double chi2 = 0.0;
};

// Least-squares fit of V_E(V) = 1 - sum k_Vi V^i.
VisibilityPolynomialFit fit_visibility_polynomial(const std::vector<double>& v_volts,
                                                  const std::vector<Measured>& ve);

struct ZeemanDataPoint {
    int series = 0;
    double i_amps = 0.0;
    double i_comp_amps = 0.0;
    Measured vb;    // |relative visibility|... real part per the complex model
    Measured phib;  // rad
};

struct GlobalZeemanFit {
    ZeemanCalibration calibration;
    ZeemanCalibration sigma;              // parameter uncertainties, same layout
    std::vector<Measured> chi_per_series;
    double chi2 = 0.0;
    int dof = 0;
    int iterations = 0;
};

// Simultaneous fit of all series sharing (J0, I0, A_J1, A_J2, A_J3, I0C, A_J1C),
// one population-unbalance parameter per series.
GlobalZeemanFit global_zeeman_fit(const std::vector<ZeemanDataPoint>& data,
                                  const ZeemanCalibration& init);

// Synthetic calibration datasets (model + Gaussian noise) for round-trip tests.
std::vector<ZeemanDataPoint> synthesize_zeeman_dataset(const Scenario& sc, int n_series,
                                                       std::uint64_t seed,
                                                       double sigma_v = 0.002,
                                                       double sigma_phi = 0.003);
std::vector<StarkScanPoint> synthesize_stark_dataset(const Scenario& sc, CapacitorArm arm,
                                                     int n_points, std::uint64_t seed,
                                                     double sigma_v = 0.002,
                                                     double sigma_phi = 0.003);

} // namespace hmw
