#include "hmw/kernels.hpp"
#include "hmw/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

using namespace hmw;

TEST_CASE("scalar phasor sum matches a plain loop") {
    Rng rng(7);
    std::vector<double> w(37), ph(37);
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = rng.uniform();
        ph[i] = (rng.uniform() - 0.5) * 20.0;
    }
    double re = 0, im = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        re += w[i] * std::cos(ph[i]);
        im += w[i] * std::sin(ph[i]);
    }
    const auto acc = kernels::phasor_sum_scalar(w.data(), ph.data(), w.size());
    CHECK(acc.re == doctest::Approx(re).epsilon(1e-15));
    CHECK(acc.im == doctest::Approx(im).epsilon(1e-15));
}

TEST_CASE("simd and scalar kernels agree") {
    if (std::string(kernels::active_kernel()) != "avx2" && !kernels::select_kernel("avx2")) {
        MESSAGE("avx2 kernel unavailable on this host; dispatch check only");
        CHECK(kernels::select_kernel("scalar"));
        kernels::select_kernel("auto");
        return;
    }
    Rng rng(11);
    for (int pass = 0; pass < 8; ++pass) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 600);
        std::vector<double> w(n), ph(n);
        const double scale = std::pow(10.0, pass % 5);  // arguments up to ~1e4 rad
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = rng.uniform();
            ph[i] = (rng.uniform() - 0.5) * 2.0 * scale;
        }
        kernels::select_kernel("scalar");
        const auto a = kernels::phasor_sum(w.data(), ph.data(), n);
        kernels::select_kernel("avx2");
        const auto b = kernels::phasor_sum(w.data(), ph.data(), n);
        const double tol = 1e-13 * static_cast<double>(n);
        CHECK(std::fabs(a.re - b.re) < tol);
        CHECK(std::fabs(a.im - b.im) < tol);
    }
    kernels::select_kernel("auto");
}

TEST_CASE("large arguments fall back without precision loss") {
    if (!kernels::select_kernel("avx2")) return;
    std::vector<double> w{1.0, 1.0, 1.0, 1.0, 1.0};
    std::vector<double> ph{1e6, -3e5, 2.0, 1e7, 0.5};  // beyond the fast-path range
    const auto b = kernels::phasor_sum(w.data(), ph.data(), w.size());
    kernels::select_kernel("scalar");
    const auto a = kernels::phasor_sum(w.data(), ph.data(), w.size());
    CHECK(std::fabs(a.re - b.re) < 1e-12);
    CHECK(std::fabs(a.im - b.im) < 1e-12);
    kernels::select_kernel("auto");
}

TEST_CASE("weighted product sums") {
    std::vector<double> w{0.25, 0.25, 0.5};
    std::vector<double> a{1.0, 2.0, -1.0};
    std::vector<double> b{2.0, 0.5, 4.0};
    std::vector<double> c{1.0, -1.0, 0.5};
    CHECK(kernels::wdot2(w.data(), a.data(), b.data(), 3) ==
          doctest::Approx(0.25 * 2.0 + 0.25 * 1.0 + 0.5 * -4.0));
    CHECK(kernels::wdot3(w.data(), a.data(), b.data(), c.data(), 3) ==
          doctest::Approx(0.25 * 2.0 - 0.25 * 1.0 - 0.5 * 2.0));
}
