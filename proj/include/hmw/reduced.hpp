#pragma once

#include <cmath>
#include <limits>
#include <string>

namespace hmw {

struct Measured {
    double value = 0.0;
    double sigma = 0.0;
};

// The six reduced quantities of one (V, I) point, with the (-V) twins when the
// scan had six configurations.
struct ReducedPoint {
    double v_volts = 0.0;
    double i_amps = 0.0;
    std::string series;

    Measured ve, phie;      // electric field only
    Measured vb, phib;      // magnetic field only
    Measured veb, phieb;    // joint-field quantities

    bool has_minus_v = false;
    Measured ve_m, phie_m, veb_m, phieb_m;

    double chi_estimate = std::numeric_limits<double>::quiet_NaN();
    bool outlier = false;
    int n_scans = 1;
};

} // namespace hmw
