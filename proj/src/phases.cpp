#include "hmw/phases.hpp"

#include "hmw/error.hpp"
#include "hmw/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace hmw {

JCoefficients j_coefficients(double i_amps, double i_comp_amps, const ZeemanCalibration& cal) {
    const double ia = std::fabs(i_amps);
    JCoefficients j;
    j.j1 = cal.a_j1 * std::fabs(ia - cal.i0) + cal.a_j1c * std::fabs(i_comp_amps - cal.i0c) +
           cal.j0_offset();
    j.j2 = cal.a_j2 * i_amps * i_amps;
    j.j3 = cal.a_j3 * ia * ia * ia;
    return j;
}

double hmw_coil_linear_j1(double i_amps, const ZeemanCalibration& cal) {
    const double ia = std::fabs(i_amps);
    return cal.a_j1 * (std::fabs(ia - cal.i0) - std::fabs(cal.i0));
}

double zeeman_phase(int pair_m, double j1, double j2, double j3) {
    const double m = static_cast<double>(pair_m);
    pair_index(pair_m);  // validates the label
    return 0.5 * m * j1 + 0.25 * (4.0 - m * m) * j2 + (m * (m * m - 4.0) / 16.0) * j3;
}

double stark_phase(double v_volts, CapacitorArm arm, double velocity, const StarkCalibration& cal) {
    if (!(velocity > 0.0)) throw std::invalid_argument("stark_phase: velocity must be > 0");
    const double k = arm == CapacitorArm::upper ? cal.phi_upper_per_v2 : cal.phi_lower_per_v2;
    const double vc = arm == CapacitorArm::upper ? cal.contact_upper_v : cal.contact_lower_v;
    const double veff = v_volts + vc;
    return k * veff * veff;  // caller scales by vm/velocity
}

double ac_phase(int pair_m, double v_volts, double ac_per_v) {
    const double m = static_cast<double>(pair_m);
    pair_index(pair_m);
    return 0.5 * m * ac_per_v * v_volts;
}

double hmw_phase(double v_volts, double i_amps, double hmw_per_va) {
    return hmw_per_va * v_volts * i_amps;
}

PairWeights pair_weights(double chi) {
    if (!(std::fabs(chi) < 1.0)) throw std::invalid_argument("pair_weights: |chi| must be < 1");
    // 8 sublevels: five F=2 members weigh (1+chi), three F=1 members (1-chi).
    const double norm = 5.0 * (1.0 + chi) + 3.0 * (1.0 - chi);
    const double w2 = (1.0 + chi) / norm;
    const double w1 = (1.0 - chi) / norm;
    PairWeights w;
    for (int m : {-1, 0, 1}) {
        w.plus[pair_index(m)] = w2;
        w.minus[pair_index(m)] = w1;
    }
    w.plus[pair_index(2)] = w2;   // (2,+2)
    w.minus[pair_index(2)] = w2;  // (2,-2)
    return w;
}

namespace {

void check_zero_mean(const BeamModel& beam, const std::vector<double>& profile, const char* name) {
    double mean = 0.0;
    for (std::size_t i = 0; i < profile.size(); ++i) mean += beam.y_weight[i] * profile[i];
    if (std::fabs(mean) > 1e-12) {
        throw std::invalid_argument(std::string("dispersion profile not zero-mean: ") + name);
    }
}

} // namespace

PhaseMoments moments(const BeamModel& beam, const DispersionProfiles& profiles, double v_volts,
                     double j1_hmw, int pair_m) {
    const std::size_t n = beam.y.size();
    if (profiles.diffraction.size() != n || profiles.stark_geom.size() != n ||
        profiles.stark_contact.size() != n || profiles.zeeman.size() != n) {
        throw std::invalid_argument("moments: profiles not sampled on the beam y-grid");
    }
    check_zero_mean(beam, profiles.diffraction, "diffraction");
    check_zero_mean(beam, profiles.stark_geom, "stark_geom");
    check_zero_mean(beam, profiles.stark_contact, "stark_contact");
    check_zero_mean(beam, profiles.zeeman, "zeeman");

    const double m = static_cast<double>(pair_m);
    pair_index(pair_m);
    const double v2 = v_volts * v_volts;
    std::vector<double> s(n), z(n), ds(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = profiles.stark_geom[i] * v2 + profiles.stark_contact[i] * v_volts;
        z[i] = 0.5 * m * profiles.zeeman[i] * j1_hmw;
        ds[i] = profiles.diffraction[i] + s[i];
    }
    const double* w = beam.y_weight.data();
    const double* d = profiles.diffraction.data();

    PhaseMoments mom;
    mom.dd = kernels::wdot2(w, d, d, n);
    mom.dS = kernels::wdot2(w, d, s.data(), n);
    mom.dZ = kernels::wdot2(w, d, z.data(), n);
    mom.SS = kernels::wdot2(w, s.data(), s.data(), n);
    mom.SZ = kernels::wdot2(w, s.data(), z.data(), n);
    mom.ZZ = kernels::wdot2(w, z.data(), z.data(), n);
    mom.dpS3 = kernels::wdot3(w, ds.data(), ds.data(), ds.data(), n);
    mom.Z3 = kernels::wdot3(w, z.data(), z.data(), z.data(), n);
    mom.dZZ = kernels::wdot3(w, d, z.data(), z.data(), n);
    mom.SZZ = kernels::wdot3(w, s.data(), z.data(), z.data(), n);
    mom.SSZ = kernels::wdot3(w, s.data(), s.data(), z.data(), n);
    mom.ddZ = kernels::wdot3(w, d, d, z.data(), n);
    mom.dSZ = kernels::wdot3(w, d, s.data(), z.data(), n);
    return mom;
}

std::complex<double> velocity_visibility_grid(double phase_at_vm, int power,
                                              const VelocityGrid& grid, double vm) {
    if (power != 1 && power != 2) throw std::invalid_argument("velocity power must be 1 or 2");
    const std::size_t n = grid.v.size();
    std::vector<double> phase(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = vm / grid.v[i];
        phase[i] = phase_at_vm * (power == 1 ? r : r * r);
    }
    const auto acc = kernels::phasor_sum(grid.w.data(), phase.data(), n);
    return {acc.re, acc.im};
}

std::complex<double> velocity_visibility(double phase_at_vm, int power, const BeamModel& beam) {
    if (!(beam.speed_ratio > 1.0)) throw std::invalid_argument("speed ratio must be > 1");
    const auto grid = supersonic_velocity_grid(beam.mean_velocity, beam.speed_ratio, 101);
    return velocity_visibility_grid(phase_at_vm, power, grid, beam.mean_velocity);
}

std::complex<double> velocity_visibility_checked(double phase_at_vm, int power,
                                                 const BeamModel& beam) {
    const auto g1 = supersonic_velocity_grid(beam.mean_velocity, beam.speed_ratio, 101);
    const auto g2 = supersonic_velocity_grid(beam.mean_velocity, beam.speed_ratio, 201);
    const auto a = velocity_visibility_grid(phase_at_vm, power, g1, beam.mean_velocity);
    const auto b = velocity_visibility_grid(phase_at_vm, power, g2, beam.mean_velocity);
    if (std::abs(a - b) > 1e-9) {
        fail_oracle("velocity average not converged: grid doubling moved the result by " +
                    std::to_string(std::abs(a - b)));
    }
    return b;
}

PairPhaseSet pair_phase_set(double i_amps, double i_comp_amps, const ZeemanCalibration& cal) {
    PairPhaseSet set;
    set.j = j_coefficients(i_amps, i_comp_amps, cal);
    const double sign = i_amps < 0.0 ? -1.0 : 1.0;
    set.j1_hmw = sign * hmw_coil_linear_j1(i_amps, cal);
    for (int m : kPairLabels) {
        const int idx = pair_index(m);
        // current reversal negates the field-odd (J1, J3) parts of every member
        set.phi_z[idx] = zeeman_phase(m, sign * set.j.j1, set.j.j2, sign * set.j.j3);
        set.dz_scale[idx] = 0.5 * static_cast<double>(m) * set.j1_hmw;
    }
    return set;
}

} // namespace hmw
