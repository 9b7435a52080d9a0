#pragma once

#include <cstddef>
#include <string>

namespace hmw::kernels {

struct Phasor {
    double re = 0.0;
    double im = 0.0;
};

// Scalar reference kernel: sum of w[i] * exp(i * phase[i]).
Phasor phasor_sum_scalar(const double* w, const double* phase, std::size_t n);

#ifdef HMW_KERNELS_AVX2
Phasor phasor_sum_avx2(const double* w, const double* phase, std::size_t n);
#endif

// Runtime-dispatched variant. Selection: HMW_KERNEL env var ("scalar"/"avx2"),
// else AVX2 when the CPU supports it, else scalar.
Phasor phasor_sum(const double* w, const double* phase, std::size_t n);

// Name of the kernel the dispatcher currently resolves to.
const char* active_kernel();
// Force a kernel by name ("scalar", "avx2", "auto"); returns false if unavailable.
bool select_kernel(const std::string& name);

// Weighted product sums used by the moment integrals.
double wdot2(const double* w, const double* a, const double* b, std::size_t n);
double wdot3(const double* w, const double* a, const double* b, const double* c, std::size_t n);

} // namespace hmw::kernels
