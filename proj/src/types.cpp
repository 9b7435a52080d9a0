#include "hmw/types.hpp"

#include "hmw/error.hpp"
#include "hmw/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hmw {

const char* to_string(ConfigLabel label) {
    switch (label) {
        case ConfigLabel::zero_zero: return "(0,0)";
        case ConfigLabel::v_zero: return "(V,0)";
        case ConfigLabel::v_i: return "(V,I)";
        case ConfigLabel::zero_i: return "(0,I)";
        case ConfigLabel::mv_i: return "(-V,I)";
        case ConfigLabel::mv_zero: return "(-V,0)";
    }
    return "?";
}

ConfigLabel config_label_from_string(const std::string& s) {
    for (int i = 0; i < 6; ++i) {
        const auto label = static_cast<ConfigLabel>(i);
        if (s == to_string(label)) return label;
    }
    fail_schema("unknown configuration label: " + s);
}

double CompensatorPolicy::current_for(double i_amps) const {
    if (i_amps == 0.0) return 0.0;
    return std::min(std::fabs(i_amps) / ratio_divisor, cap_amp);
}

void FieldConfiguration::validate() const {
    const bool want_v = label == ConfigLabel::v_zero || label == ConfigLabel::v_i ||
                        label == ConfigLabel::mv_i || label == ConfigLabel::mv_zero;
    const bool want_i = label == ConfigLabel::v_i || label == ConfigLabel::zero_i ||
                        label == ConfigLabel::mv_i;
    if (want_v == (v_volts == 0.0)) {
        throw std::invalid_argument(std::string("configuration voltage inconsistent with label ") +
                                    to_string(label));
    }
    if (want_i == (i_amps == 0.0)) {
        throw std::invalid_argument(std::string("configuration current inconsistent with label ") +
                                    to_string(label));
    }
    if (i_comp_amps < 0.0) throw std::invalid_argument("compensator current must be >= 0");
    if (i_amps == 0.0 && i_comp_amps != 0.0) {
        throw std::invalid_argument("compensator current must be 0 when the coil is off");
    }
}

std::vector<FieldConfiguration> make_config_cycle(double v_volts, double i_amps, int n_configs,
                                                  const CompensatorPolicy& comp) {
    if (n_configs != 4 && n_configs != 6) {
        throw std::invalid_argument("configuration count must be 4 or 6");
    }
    if (v_volts <= 0.0) throw std::invalid_argument("scan voltage must be > 0 (sign via labels)");
    if (i_amps == 0.0) throw std::invalid_argument("scan current must be nonzero");
    const double ic = comp.current_for(i_amps);
    std::vector<FieldConfiguration> cycle{
        {0.0, 0.0, 0.0, ConfigLabel::zero_zero},
        {v_volts, 0.0, 0.0, ConfigLabel::v_zero},
        {v_volts, i_amps, ic, ConfigLabel::v_i},
        {0.0, i_amps, ic, ConfigLabel::zero_i},
    };
    if (n_configs == 6) {
        cycle.push_back({-v_volts, i_amps, ic, ConfigLabel::mv_i});
        cycle.push_back({-v_volts, 0.0, 0.0, ConfigLabel::mv_zero});
    }
    for (const auto& cfg : cycle) cfg.validate();
    return cycle;
}

double ZeemanCalibration::j0_offset() const {
    return j0 - a_j1 * std::fabs(i0) - a_j1c * std::fabs(i0c);
}

void BeamModel::build_y_grid(std::size_t n) {
    if (n % 2 == 0) ++n;
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    y_weight = simpson_weights(n);
}

DispersionProfiles DispersionProfiles::ramps(const std::vector<double>& y, double d_span_rad,
                                             double g_span_rad_at_800v, double c_span_rad_per_v,
                                             double z_span) {
    DispersionProfiles p;
    const std::size_t n = y.size();
    p.diffraction.resize(n);
    p.stark_geom.resize(n);
    p.stark_contact.resize(n);
    p.zeeman.resize(n);
    const double g_span = g_span_rad_at_800v / (800.0 * 800.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double half = 0.5 * y[i];  // ramp spanning [-span/2, +span/2]
        p.diffraction[i] = d_span_rad * half;
        p.stark_geom[i] = g_span * half;
        p.stark_contact[i] = c_span_rad_per_v * half;
        p.zeeman[i] = z_span * half;
    }
    return p;
}

void Scenario::validate() const {
    if (!(std::fabs(chi) < 1.0)) fail_schema("population unbalance chi must satisfy |chi| < 1");
    if (!(beam.base_visibility > 0.0 && beam.base_visibility <= 1.0)) {
        fail_schema("base visibility must be in (0, 1]");
    }
    if (!(beam.speed_ratio > 1.0)) fail_schema("parallel speed ratio must be > 1");
    if (!(beam.mean_velocity > 0.0)) fail_schema("mean velocity must be > 0");
    if (!(beam.mean_rate > 0.0)) fail_schema("mean count rate must be > 0");
    if (!std::isfinite(hmw_per_va) || !std::isfinite(ac_per_v)) {
        fail_schema("couplings must be finite");
    }
    if (beam.y.size() != beam.y_weight.size() || beam.y.empty()) {
        fail_schema("beam y-grid not built");
    }
    const std::size_t n = beam.y.size();
    if (profiles.diffraction.size() != n || profiles.stark_geom.size() != n ||
        profiles.stark_contact.size() != n || profiles.zeeman.size() != n) {
        fail_schema("dispersion profiles must be sampled on the beam y-grid");
    }
    if (noise.phase_jitter < 0.0) fail_schema("phase jitter must be >= 0");
    if (!(scan.bin_seconds > 0.0)) fail_schema("bin width must be > 0");
    if (!(scan.fringes > 0.0)) fail_schema("fringe count must be > 0");
}

Scenario make_baseline_scenario() {
    Scenario s;
    s.zeeman = {-0.61, 0.31, -0.430, -662e-5, -180e-6, 22e-3, 1.43};
    s.stark.phi_upper_per_v2 = -4.830e-3;
    s.stark.phi_lower_per_v2 = 4.760e-3;
    s.stark.residual_per_v2 = 7.8e-8;  // ~0.05 rad at 800 V
    s.stark.l_eff_m = 0.048;
    s.stark.h_upper_m = 1.101e-3;
    s.stark.h_lower_m = 1.109e-3;

    s.beam.mean_velocity = 1065.0;
    s.beam.speed_ratio = 9.25;
    s.beam.mean_rate = 6.0e4;
    s.beam.base_visibility = 0.70;
    s.beam.build_y_grid(201);

    s.profiles = DispersionProfiles::ramps(s.beam.y, 1.0, 0.8, 0.0, 0.1);

    s.hmw_per_va = -1.28e-6;
    s.ac_per_v = -5.978e-5;  // 2 mu_B E0 L_eff / (hbar c^2) per volt, with y.u0 = -0.7
    s.chi = 0.0;

    s.drift = {2.0e-4, 0.03, 300.0};
    s.noise = {true, 0.12};
    s.anomalous = {0.0, 0.0};
    s.compensator = {3.0, 5.0};
    s.scan = {0.1, 4.0};
    s.seed = 20120601;
    return s;
}

int pair_index(int pair_m) {
    switch (pair_m) {
        case -1: return 0;
        case 0: return 1;
        case 1: return 2;
        case 2: return 3;
    }
    throw std::invalid_argument("pair label must be one of {-1, 0, +1, +2}");
}

double PairWeights::total() const {
    double t = 0.0;
    for (int i = 0; i < 4; ++i) t += plus[i] + minus[i];
    return t;
}

} // namespace hmw
