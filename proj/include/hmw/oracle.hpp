#pragma once

#include "hmw/grid.hpp"
#include "hmw/reduced.hpp"
#include "hmw/types.hpp"

#include <complex>

namespace hmw {

struct ComplexFringeAmplitude {
    double modulus = 0.0;   // in [0, 1]
    double argument = 0.0;  // rad
    std::complex<double> value() const;
    static ComplexFringeAmplitude from(std::complex<double> z);
};

// Exact fringe amplitude: all 8 sublevels summed over the y-grid and the
// velocity grid with no series expansion. Ground truth for signal-model.
ComplexFringeAmplitude brute_force_signal(const FieldConfiguration& cfg, const Scenario& sc);

// Same, on caller-supplied grids (the velocity grid is reused across configs).
ComplexFringeAmplitude brute_force_signal_grid(const FieldConfiguration& cfg, const Scenario& sc,
                                               const VelocityGrid& vgrid,
                                               const std::vector<double>& y,
                                               const std::vector<double>& y_weight);

// Relative visibility and phase of cfg against the zero-field configuration.
struct OracleRelative {
    double v_rel = 0.0;
    double phase = 0.0;
    std::complex<double> ratio;
};
OracleRelative oracle_relative(const FieldConfiguration& cfg, const Scenario& sc);

// The six reduced quantities computed exactly from oracle signals, with the
// (-V) twins filled in.
ReducedPoint brute_force_reduced(double v_volts, double i_amps, const Scenario& sc);

// Doubles both grids and reports the worst modulus/argument shift over the
// given configurations; throws ErrorCode::oracle_convergence past tolerance.
struct ConvergenceReport {
    double max_modulus_shift = 0.0;
    double max_argument_shift = 0.0;
};
ConvergenceReport oracle_convergence_check(const std::vector<FieldConfiguration>& cfgs,
                                           const Scenario& sc, double tol = 1e-6);

// Amplitude of a single pair (two sublevels, equal weights), used by the
// tutorial-limit checks.
std::complex<double> pair_amplitude(int pair_m, const FieldConfiguration& cfg, const Scenario& sc);

} // namespace hmw
