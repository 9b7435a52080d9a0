#include "hmw/phases.hpp"
#include "hmw/types.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <complex>
#include <vector>

using namespace hmw;

namespace {

ZeemanCalibration paper_cal() { return make_baseline_scenario().zeeman; }

// Series-expansion oracle: coefficients of sqrt(1 + m x + x^2) built by exact
// polynomial arithmetic of the binomial series, independent of zeeman_phase.
std::array<double, 4> breit_rabi_coefficients(int m) {
    // u = m x + x^2; sqrt(1+u) = sum binom(1/2,k) u^k
    std::array<double, 4> coeff{};  // coefficients of x^0..x^3
    std::array<double, 4> upow{1.0, 0.0, 0.0, 0.0};
    double binom = 1.0;  // binom(1/2, 0)
    for (int k = 0; k <= 3; ++k) {
        if (k > 0) {
            binom *= (0.5 - (k - 1)) / k;
            // multiply upow by (m x + x^2)
            std::array<double, 4> next{};
            for (int p = 0; p + 1 <= 3; ++p) next[p + 1] += upow[p] * m;
            for (int p = 0; p + 2 <= 3; ++p) next[p + 2] += upow[p];
            upow = next;
        }
        for (int p = 0; p <= 3; ++p) coeff[p] += binom * upow[p];
    }
    return coeff;
}

} // namespace

TEST_CASE("j coefficients at the calibration values") {
    const auto cal = paper_cal();
    SUBCASE("zero current reduces to the laboratory value") {
        const auto j = j_coefficients(0.0, 0.0, cal);
        CHECK(j.j1 == doctest::Approx(-0.61).epsilon(1e-12));
        CHECK(j.j2 == 0.0);
        CHECK(j.j3 == 0.0);
    }
    SUBCASE("quadratic and cubic terms at 10 A") {
        const auto j = j_coefficients(10.0, 0.0, cal);
        CHECK(j.j2 == doctest::Approx(-0.662).epsilon(1e-12));
        CHECK(j.j3 == doctest::Approx(-0.180).epsilon(1e-12));
    }
    SUBCASE("compensator term vanishes exactly at its offset current") {
        // |I_C - I0C| = 0, so J1 = J0 - A_J1C |I0C| with no compensator contribution
        const auto a = j_coefficients(0.0, cal.i0c, cal);
        CHECK(a.j1 == doctest::Approx(cal.j0 - cal.a_j1c * cal.i0c).epsilon(1e-12));
        const auto b = j_coefficients(0.0, 0.0, cal);
        CHECK(b.j1 - a.j1 == doctest::Approx(cal.a_j1c * cal.i0c).epsilon(1e-9));
    }
    SUBCASE("coefficients are even in the coil current") {
        const auto a = j_coefficients(7.3, 2.0, cal);
        const auto b = j_coefficients(-7.3, 2.0, cal);
        CHECK(a.j1 == b.j1);
        CHECK(a.j2 == b.j2);
        CHECK(a.j3 == b.j3);
    }
}

TEST_CASE("zeeman phase map") {
    CHECK(zeeman_phase(2, -0.61, 0.0, 0.0) == doctest::Approx(-0.61).epsilon(1e-15));
    // stretched pair stays strictly linear for any J2, J3
    CHECK(zeeman_phase(2, -0.61, 5.0, -3.0) == doctest::Approx(-0.61).epsilon(1e-15));
    // the m=0 pair carries the quadratic term
    CHECK(zeeman_phase(0, 1.23, -0.662, 9.0) == doctest::Approx(-0.662).epsilon(1e-12));
    // m -> -m flips the linear and cubic parts, keeps the quadratic part
    const double j1 = -0.7, j2 = -0.3, j3 = -0.05;
    const double p = zeeman_phase(1, j1, j2, j3);
    const double q = zeeman_phase(-1, j1, j2, j3);
    CHECK(p + q == doctest::Approx(2.0 * zeeman_phase(1, 0.0, j2, 0.0)).epsilon(1e-12));
    CHECK(p - q == doctest::Approx(2.0 * zeeman_phase(1, j1, 0.0, j3)).epsilon(1e-12));
    CHECK_THROWS(zeeman_phase(3, 1.0, 0.0, 0.0));
    CHECK_THROWS(zeeman_phase(-2, 1.0, 0.0, 0.0));
}

TEST_CASE("zeeman coefficient ratios match the Breit-Rabi expansion") {
    // per-order coefficients of the implemented map, extracted linearly
    auto linear = [](int m) { return zeeman_phase(m, 1.0, 0.0, 0.0); };
    auto quad = [](int m) { return zeeman_phase(m, 0.0, 1.0, 0.0); };
    auto cubic = [](int m) { return zeeman_phase(m, 0.0, 0.0, 1.0); };
    const auto ref2 = breit_rabi_coefficients(2);
    for (int m : {-1, 0, 1}) {
        const auto ref = breit_rabi_coefficients(m);
        CHECK(linear(m) / linear(2) == doctest::Approx(ref[1] / ref2[1]).epsilon(1e-12));
        // quadratic/cubic ratios taken against the m=0 / m=1 carriers
        const auto ref0 = breit_rabi_coefficients(0);
        if (quad(0) != 0.0) {
            CHECK(quad(m) / quad(0) == doctest::Approx(ref[2] / ref0[2]).epsilon(1e-12));
        }
        const auto ref1 = breit_rabi_coefficients(1);
        if (m != 0) {
            CHECK(cubic(m) / cubic(1) == doctest::Approx(ref[3] / ref1[3]).epsilon(1e-12));
        }
    }
    // and the stretched state really is linear in the expansion too
    CHECK(ref2[2] == doctest::Approx(0.0));
    CHECK(ref2[3] == doctest::Approx(0.0));
}

TEST_CASE("stark phase") {
    const auto sc = make_baseline_scenario();
    const double vm = sc.beam.mean_velocity;
    // -4.830e-3 rad/V^2 * 800^2 at mean velocity
    const double p800 = stark_phase(800.0, CapacitorArm::upper, vm, sc.stark) * (vm / vm);
    CHECK(p800 == doctest::Approx(-3091.2).epsilon(1e-12));
    // contact-only term at V = 0
    StarkCalibration cal = sc.stark;
    cal.contact_upper_v = 5e-3;
    const double c0 = stark_phase(0.0, CapacitorArm::upper, vm, cal);
    CHECK(c0 == doctest::Approx(cal.phi_upper_per_v2 * 25e-6).epsilon(1e-12));
    CHECK(std::fabs(c0) < 1e-6);
    // 1/v scaling handled by the caller through vm/v
    CHECK(stark_phase(400.0, CapacitorArm::lower, 2.0 * vm, sc.stark) ==
          doctest::Approx(stark_phase(400.0, CapacitorArm::lower, vm, sc.stark)));
    CHECK_THROWS(stark_phase(400.0, CapacitorArm::upper, 0.0, sc.stark));
}

TEST_CASE("aharonov-casher phase") {
    const auto sc = make_baseline_scenario();
    const double p = ac_phase(2, 800.0, sc.ac_per_v);
    CHECK(p == doctest::Approx(-0.0478).epsilon(2e-3));
    CHECK(std::fabs(p) < 0.070);  // bounded by the stated experimental maximum
    CHECK(ac_phase(0, 800.0, sc.ac_per_v) == 0.0);
    CHECK(ac_phase(2, -800.0, sc.ac_per_v) == doctest::Approx(-p).epsilon(1e-15));
    CHECK(ac_phase(1, 500.0, sc.ac_per_v) == doctest::Approx(0.5 * ac_phase(2, 500.0, sc.ac_per_v)));
}

TEST_CASE("hmw phase parity table") {
    const double a = -1.28e-6;
    CHECK(hmw_phase(800.0, 25.0, a) == doctest::Approx(-0.0256).epsilon(1e-12));
    CHECK(hmw_phase(800.0, 0.0, a) == 0.0);
    CHECK(hmw_phase(-800.0, -25.0, a) == doctest::Approx(hmw_phase(800.0, 25.0, a)));
    CHECK(hmw_phase(-800.0, 25.0, a) == doctest::Approx(-hmw_phase(800.0, 25.0, a)));
}

TEST_CASE("pair weights") {
    SUBCASE("balanced population") {
        const auto w = pair_weights(0.0);
        for (int i = 0; i < 4; ++i) {
            CHECK(w.plus[i] == doctest::Approx(0.125).epsilon(1e-15));
            CHECK(w.minus[i] == doctest::Approx(0.125).epsilon(1e-15));
        }
        CHECK(w.total() == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("unbalanced population favors F=2") {
        const auto w = pair_weights(0.077);
        CHECK(w.plus[pair_index(0)] > w.minus[pair_index(0)]);
        CHECK(w.plus[pair_index(2)] == w.minus[pair_index(2)]);  // stretched pair stays balanced
        CHECK(w.total() == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK_THROWS(pair_weights(1.0));
    CHECK_THROWS(pair_weights(-1.5));
}

TEST_CASE("quarter-sum identity at the laboratory field") {
    const double j0 = -0.61;
    double sum = 0.0;
    for (int m : kPairLabels) sum += std::cos(zeeman_phase(m, j0, 0.0, 0.0));
    const double expected = (1.0 + std::cos(j0) + 2.0 * std::cos(0.5 * j0)) / 4.0;
    CHECK(sum / 4.0 == doctest::Approx(expected).epsilon(1e-14));
    CHECK(sum / 4.0 == doctest::Approx(0.932).epsilon(1.1e-3));
}

TEST_CASE("dispersion moments") {
    auto sc = make_baseline_scenario();
    SUBCASE("zero profiles give zero moments") {
        sc.profiles = DispersionProfiles::ramps(sc.beam.y, 0.0, 0.0, 0.0, 0.0);
        const auto m = moments(sc.beam, sc.profiles, 800.0, -4.0, 2);
        CHECK(m.SS == 0.0);
        CHECK(m.dZ == 0.0);
        CHECK(m.dpS3 == 0.0);
    }
    SUBCASE("0.8 rad ramp at 800 V") {
        const auto m = moments(sc.beam, sc.profiles, 800.0, 0.0, 2);
        CHECK(0.5 * m.SS == doctest::Approx(0.0266667).epsilon(1e-5));
    }
    SUBCASE("identical profiles give equal cross and square moments") {
        auto p = sc.profiles;
        for (std::size_t i = 0; i < p.diffraction.size(); ++i) {
            p.diffraction[i] = p.stark_geom[i] * 800.0 * 800.0;
        }
        const auto m = moments(sc.beam, p, 800.0, 0.0, 2);
        CHECK(m.dS == doctest::Approx(m.SS).epsilon(1e-12));
    }
    SUBCASE("bilinearity in the zeeman profile amplitude") {
        auto p2 = sc.profiles;
        for (auto& z : p2.zeeman) z *= 3.0;
        const auto a = moments(sc.beam, sc.profiles, 800.0, -4.0, 1);
        const auto b = moments(sc.beam, p2, 800.0, -4.0, 1);
        CHECK(b.dZ == doctest::Approx(3.0 * a.dZ).epsilon(1e-12));
        CHECK(b.Z3 == doctest::Approx(27.0 * a.Z3).epsilon(1e-9));
        CHECK(b.SZZ == doctest::Approx(9.0 * a.SZZ).epsilon(1e-12));
    }
    SUBCASE("grid doubling leaves moments unchanged for polynomial profiles") {
        auto sc2 = make_baseline_scenario();
        sc2.beam.build_y_grid(401);
        sc2.profiles = DispersionProfiles::ramps(sc2.beam.y, 1.0, 0.8, 0.0, 0.1);
        const auto a = moments(sc.beam, sc.profiles, 800.0, -4.0, 1);
        const auto b = moments(sc2.beam, sc2.profiles, 800.0, -4.0, 1);
        CHECK(std::fabs(a.SZ - b.SZ) < 1e-10);
        CHECK(std::fabs(a.Z3 - b.Z3) < 1e-10);
        CHECK(std::fabs(a.dSZ - b.dSZ) < 1e-10);
    }
    SUBCASE("non-zero-mean profiles are rejected") {
        auto p = sc.profiles;
        for (auto& d : p.diffraction) d += 0.01;
        CHECK_THROWS(moments(sc.beam, p, 800.0, 0.0, 2));
    }
}

TEST_CASE("velocity visibility") {
    const auto sc = make_baseline_scenario();
    SUBCASE("zero phase") {
        const auto z = velocity_visibility(0.0, 1, sc.beam);
        CHECK(z.real() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::fabs(z.imag()) < 1e-14);
    }
    SUBCASE("frozen quadrature values (independent adaptive-quadrature oracle)") {
        const auto z1 = velocity_visibility_checked(10.0, 1, sc.beam);
        CHECK(std::abs(z1) == doctest::Approx(0.759494415078).epsilon(1e-7));
        CHECK(z1.real() == doctest::Approx(-0.690649098150).epsilon(1e-6));
        CHECK(z1.imag() == doctest::Approx(-0.315967703666).epsilon(1e-6));
        const auto z2 = velocity_visibility_checked(2.0, 2, sc.beam);
        CHECK(std::abs(z2) == doctest::Approx(0.955797488087).epsilon(1e-7));
        CHECK(std::arg(z2) == doctest::Approx(1.962295744064).epsilon(1e-6));
        // first-order dephasing estimate is close but not exact
        CHECK(std::abs(z1) == doctest::Approx(std::exp(-100.0 / (4.0 * 9.25 * 9.25))).epsilon(0.02));
    }
    SUBCASE("modulus is even in the phase") {
        const auto zp = velocity_visibility(7.0, 1, sc.beam);
        const auto zm = velocity_visibility(-7.0, 1, sc.beam);
        CHECK(std::abs(zp) == doctest::Approx(std::abs(zm)).epsilon(1e-14));
        CHECK(zp.real() == doctest::Approx(zm.real()).epsilon(1e-14));
        CHECK(zp.imag() == doctest::Approx(-zm.imag()).epsilon(1e-14));
    }
    SUBCASE("bad power rejected") { CHECK_THROWS(velocity_visibility(1.0, 3, sc.beam)); }
}

TEST_CASE("pair phase set obeys the member-flip convention") {
    const auto cal = paper_cal();
    const auto plus = pair_phase_set(9.0, 3.0, cal);
    const auto minus = pair_phase_set(-9.0, 3.0, cal);
    for (int m : {-1, 1}) {
        // reversing the current swaps the phases of the +m and -m pairs
        CHECK(minus.phi_z[pair_index(m)] ==
              doctest::Approx(plus.phi_z[pair_index(-m)]).epsilon(1e-13));
    }
    CHECK(minus.phi_z[pair_index(2)] == doctest::Approx(-plus.phi_z[pair_index(2)]).epsilon(1e-13));
    CHECK(minus.phi_z[pair_index(0)] == doctest::Approx(plus.phi_z[pair_index(0)]).epsilon(1e-13));
    CHECK(minus.dz_scale[pair_index(2)] ==
          doctest::Approx(-plus.dz_scale[pair_index(2)]).epsilon(1e-13));
}
