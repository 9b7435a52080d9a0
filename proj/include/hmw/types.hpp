#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace hmw {

// The interleaved field configurations of a fringe scan, in cycle order.
enum class ConfigLabel : int {
    zero_zero = 0,  // (0,0)
    v_zero    = 1,  // (V,0)
    v_i       = 2,  // (V,I)
    zero_i    = 3,  // (0,I)
    mv_i      = 4,  // (-V,I)
    mv_zero   = 5,  // (-V,0)
};

const char* to_string(ConfigLabel label);
ConfigLabel config_label_from_string(const std::string& s);

struct CompensatorPolicy {
    // I_C = min(|I| / ratio_divisor, cap_amp); zero when the HMW coil is off.
    double ratio_divisor = 3.0;
    double cap_amp = 5.0;
    double current_for(double i_amps) const;
};

struct FieldConfiguration {
    double v_volts = 0.0;       // capacitor mean voltage, signed
    double i_amps = 0.0;        // HMW coil current, signed
    double i_comp_amps = 0.0;   // compensator current, >= 0
    ConfigLabel label = ConfigLabel::zero_zero;

    void validate() const;  // label/sign-pattern consistency, I_C = 0 when I = 0
};

// Builds the 4- or 6-configuration cycle for one (V, I) point.
std::vector<FieldConfiguration> make_config_cycle(double v_volts, double i_amps, int n_configs,
                                                  const CompensatorPolicy& comp);

struct ZeemanCalibration {
    double j0 = 0.0;      // rad, zero-current laboratory-field phase
    double i0 = 0.0;      // A
    double a_j1 = 0.0;    // rad/A
    double a_j2 = 0.0;    // rad/A^2
    double a_j3 = 0.0;    // rad/A^3
    double i0c = 0.0;     // A
    double a_j1c = 0.0;   // rad/A

    // J_{0,I+C}: offset such that J1(I=0, I_C=0) = J0 exactly.
    double j0_offset() const;
};

struct StarkCalibration {
    double phi_upper_per_v2 = 0.0;   // rad/V^2 at mean velocity (upper capacitor arm)
    double phi_lower_per_v2 = 0.0;   // rad/V^2 (lower arm, opposite sign)
    double residual_per_v2 = 0.0;    // rad/V^2, net phase with both capacitors on (tuned ratio)
    double l_eff_m = 0.0;            // m
    double h_upper_m = 0.0;          // m
    double h_lower_m = 0.0;          // m
    double contact_upper_v = 0.0;    // volts
    double contact_lower_v = 0.0;    // volts
};

struct BeamModel {
    double mean_velocity = 0.0;     // m/s
    double speed_ratio = 0.0;       // S_parallel, dimensionless
    double mean_rate = 0.0;         // counts/s
    double base_visibility = 0.0;   // V0 in (0, 1]
    // Beam-height samples (normalized coordinate in [-1, 1]) with weights P(y)
    // folded with the quadrature rule; weights sum to 1.
    std::vector<double> y;
    std::vector<double> y_weight;

    void build_y_grid(std::size_t n = 201);
};

// Sampled dispersion profiles on the beam y-grid, zero mean under P(y).
//   diffraction: rad; stark_geom: rad/V^2 (dispersion = g(y) V^2);
//   stark_contact: rad/V (dispersion = c(y) V);
//   zeeman: dimensionless (pair dispersion = (m/2) z(y) J1_hmw).
struct DispersionProfiles {
    std::vector<double> diffraction;
    std::vector<double> stark_geom;
    std::vector<double> stark_contact;
    std::vector<double> zeeman;

    static DispersionProfiles ramps(const std::vector<double>& y, double d_span_rad,
                                    double g_span_rad_at_800v, double c_span_rad_per_v,
                                    double z_span);
};

struct DriftModel {
    double linear_rate = 0.0;      // rad/s
    double sine_amplitude = 0.0;   // rad
    double sine_period = 300.0;    // s
};

struct NoiseModel {
    bool poisson = true;
    double phase_jitter = 0.0;  // rad per counting bin
};

struct AnomalousPhase {
    // Injected V-odd phase a V + b V^3, present only when the coil current is on.
    double a = 0.0;  // rad/V
    double b = 0.0;  // rad/V^3
};

struct ScanShape {
    double bin_seconds = 0.1;
    double fringes = 4.0;  // fringes swept per scan
};

struct Scenario {
    ZeemanCalibration zeeman;
    StarkCalibration stark;
    BeamModel beam;
    DispersionProfiles profiles;
    double hmw_per_va = 0.0;  // rad/(V A)
    double ac_per_v = 0.0;    // rad/V for the (2,+2) sublevel (lab-field projection folded in)
    double chi = 0.0;         // hyperfine population unbalance
    DriftModel drift;
    NoiseModel noise;
    AnomalousPhase anomalous;
    CompensatorPolicy compensator;
    ScanShape scan;
    std::uint64_t seed = 1;

    void validate() const;
};

// Paper-scale baseline: Eq.-(12)-style Zeeman calibration, measured Stark slopes,
// ramp dispersion defaults, supersonic beam at 1065 m/s.
Scenario make_baseline_scenario();

// Canonical pair labels m in {-1, 0, +1, +2}; index 0..3.
inline constexpr std::array<int, 4> kPairLabels{-1, 0, 1, 2};
int pair_index(int pair_m);  // throws on invalid label

struct PairWeights {
    // plus = weight of the F=2 member (and of (2,+2) for the stretched pair),
    // minus = weight of the partner carrying the opposite phase.
    std::array<double, 4> plus{};
    std::array<double, 4> minus{};
    double total() const;
};

struct PhaseMoments {
    // second moments <dphi_a dphi_b>, a,b in {d, S, Z} (rad^2)
    double dd = 0.0, dS = 0.0, dZ = 0.0, SS = 0.0, SZ = 0.0, ZZ = 0.0;
    // third moments (rad^3)
    double dpS3 = 0.0;  // <(dphi_d + dphi_S)^3>
    double Z3 = 0.0;    // <dphi_Z^3>
    double dZZ = 0.0;   // <dphi_d dphi_Z^2>
    double SZZ = 0.0;   // <dphi_S dphi_Z^2>
    double SSZ = 0.0;   // <dphi_S^2 dphi_Z>
    double ddZ = 0.0;   // <dphi_d^2 dphi_Z>
    double dSZ = 0.0;   // <dphi_d dphi_S dphi_Z>
};

} // namespace hmw
