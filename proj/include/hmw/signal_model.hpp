#pragma once

#include "hmw/phases.hpp"
#include "hmw/reduced.hpp"
#include "hmw/types.hpp"

#include <array>
#include <complex>

namespace hmw {

// First-order stray-phase decomposition of the summed fringe amplitude.
// Indices on the split terms give the sign parity under voltage reversal,
// then current reversal.
struct DNTerms {
    struct PerPair {
        double d0 = 0.0;
        double d_main = 0.0;  // (1 - <(dphi_d + dphi_S)^2>/2) cos(phi_Z)
        double dz = 0.0, nz = 0.0;
        double d_pp = 0.0, d_mp = 0.0, d_pm = 0.0, d_mm = 0.0;
        double n_pp = 0.0, n_mp = 0.0, n_pm = 0.0, n_mm = 0.0;
        double phi_z = 0.0;
        double phi_ac = 0.0;
    };
    std::array<PerPair, 4> pair{};  // indexed by pair_index(m)

    // sums over the four pairs
    double d0 = 0.0;
    double d_main = 0.0;
    double dz = 0.0, nz = 0.0;
    double d_pp = 0.0, d_mp = 0.0, d_pm = 0.0, d_mm = 0.0;
    double n_pp = 0.0, n_mp = 0.0, n_pm = 0.0, n_mm = 0.0;
    double d = 0.0, n = 0.0;     // full numerator/denominator
    double d_ac_b0 = 0.0;        // AC visibility term, -sum phi_AC sin(phi_Z)
    double d0_b0 = 0.0;          // 1 + cos J0 + 2 cos(J0/2)
    double theta = 0.0;          // first-order stray phase N/D0
    double theta_exact = 0.0;    // atan2(N, D), exported as a trust diagnostic
    bool d0_collapsed = false;   // |D0| < 0.05: first-order analysis unreliable
};

struct ModelPrediction {
    double vis_factor = 0.0;  // V_m / V_0 for this configuration
    double phase = 0.0;       // fitted fringe phase phi_m (rad)
    double v_rel = 0.0;       // visibility relative to the (0,0) configuration
    double phase_rel = 0.0;   // phase relative to the (0,0) configuration
    double theta = 0.0;
    double theta_exact = 0.0;
    bool d0_collapsed = false;
    bool valid = true;  // first-order trust indicator
};

DNTerms dn_terms(const FieldConfiguration& cfg, const Scenario& scenario);

ModelPrediction predict(const FieldConfiguration& cfg, const Scenario& scenario);

// Closed-form first-order reduced quantities at one (V, I) point.
ReducedPoint predict_reduced(double v_volts, double i_amps, const Scenario& scenario);

enum class ParityPrediction {
    mb_de_phase,  // mean over I, half-difference over V of phi_EB (contact only)
    db_me_phase,  // half-difference over I, mean over V of phi_EB (contact only)
    me_phase,     // mean over V of phi_EB
    db_phase,     // half-difference over I of phi_EB: HMW phase minus N--/D0
    de_vis,       // half-difference over V of the AC-corrected visibility
    mb_de_vis,    // zero unless contact potentials are present
    db_me_vis,    // zero unless contact potentials are present
    db_de_vis,    // sum D--/D0
    mb_me_vis,    // 1 + sum D++/D0
};

double predict_parity_combination(ParityPrediction which, double v_volts, double i_amps,
                                  const Scenario& scenario);

// Complex relative visibility of a field-off-voltage configuration (0, I) with
// population unbalance chi; the calibration-fit model (no spatial dispersion).
std::complex<double> model_b_only(double i_amps, double i_comp_amps, double chi,
                                  const ZeemanCalibration& cal);

} // namespace hmw
