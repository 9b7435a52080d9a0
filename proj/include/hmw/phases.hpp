#pragma once

#include "hmw/grid.hpp"
#include "hmw/types.hpp"

#include <complex>

namespace hmw {

struct JCoefficients {
    double j1 = 0.0;  // rad
    double j2 = 0.0;  // rad
    double j3 = 0.0;  // rad
};

// Field-expansion phase coefficients at coil current I and compensator current I_C.
// Magnitudes only: |I| is used internally so the coefficients are exactly even in I;
// the member sign flip under current reversal is applied where pair phases are
// assembled (see pair_phase_set).
JCoefficients j_coefficients(double i_amps, double i_comp_amps, const ZeemanCalibration& cal);

// Linear Zeeman term produced by the HMW coil alone (compensator and laboratory
// field excluded); vanishes at I = 0. Scales the z(y) dispersion profile.
double hmw_coil_linear_j1(double i_amps, const ZeemanCalibration& cal);

// Zeeman phase of the F=2 member of a pair; the partner carries the exact negation.
// phi_Z(m) = (m/2) J1 + ((4-m^2)/4) J2 + (m(m^2-4)/16) J3; strictly linear at m=2.
double zeeman_phase(int pair_m, double j1, double j2, double j3);

enum class CapacitorArm { upper, lower };

// Stark phase of one capacitor at voltage V and atom velocity v (1/v scaling).
double stark_phase(double v_volts, CapacitorArm arm, double velocity, const StarkCalibration& cal);

// Aharonov-Casher phase of pair m: (m/2) * coupling * V; odd in V, independent of I.
double ac_phase(int pair_m, double v_volts, double ac_per_v);

// He-McKellar-Wilkens phase, odd in V and in I.
double hmw_phase(double v_volts, double i_amps, double hmw_per_va);

// Sublevel populations for unbalance chi: F=2 members weigh (1+chi), F=1 members
// (1-chi), normalized over all 8 sublevels.
PairWeights pair_weights(double chi);

// Dispersion moments for pair m at voltage V, with dphi_S = g(y) V^2 + c(y) V and
// dphi_Z = (m/2) z(y) j1_hmw. Profiles must be zero-mean under P(y) (1e-12).
PhaseMoments moments(const BeamModel& beam, const DispersionProfiles& profiles, double v_volts,
                     double j1_hmw, int pair_m);

// <exp(i phase (vm/v)^p)> under the supersonic velocity distribution, p in {1, 2}.
std::complex<double> velocity_visibility(double phase_at_vm, int power, const BeamModel& beam);
// Same, with a grid-doubling convergence check (throws ErrorCode::oracle_convergence
// if doubling moves the result by more than 1e-9).
std::complex<double> velocity_visibility_checked(double phase_at_vm, int power,
                                                 const BeamModel& beam);
std::complex<double> velocity_visibility_grid(double phase_at_vm, int power,
                                              const VelocityGrid& grid, double vm);

// Zeeman phases of the four F=2 pair members for a signed coil current:
// coefficients evaluated at |I|, with the odd (J1, J3) parts negated for I < 0.
struct PairPhaseSet {
    std::array<double, 4> phi_z{};       // mean phase per pair (F=2 member)
    std::array<double, 4> dz_scale{};    // dphi_Z(y) = dz_scale * z(y)
    JCoefficients j;                     // coefficients at |I|
    double j1_hmw = 0.0;                 // signed HMW-coil linear term
};
PairPhaseSet pair_phase_set(double i_amps, double i_comp_amps, const ZeemanCalibration& cal);

} // namespace hmw
