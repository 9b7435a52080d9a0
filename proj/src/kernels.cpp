#include "hmw/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace hmw::kernels {

Phasor phasor_sum_scalar(const double* w, const double* phase, std::size_t n) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        re += w[i] * std::cos(phase[i]);
        im += w[i] * std::sin(phase[i]);
    }
    return {re, im};
}

double wdot2(const double* w, const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * a[i] * b[i];
    return s;
}

double wdot3(const double* w, const double* a, const double* b, const double* c, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * a[i] * b[i] * c[i];
    return s;
}

namespace {

using phasor_fn = Phasor (*)(const double*, const double*, std::size_t);

bool avx2_supported() {
#if defined(HMW_KERNELS_AVX2) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

phasor_fn resolve_default() {
    const char* env = std::getenv("HMW_KERNEL");
    std::string want = env ? env : "auto";
#ifdef HMW_KERNELS_AVX2
    if (want == "avx2" && avx2_supported()) return &phasor_sum_avx2;
    if (want == "auto" && avx2_supported()) return &phasor_sum_avx2;
#endif
    return &phasor_sum_scalar;
}

std::atomic<phasor_fn> g_fn{nullptr};

phasor_fn current() {
    phasor_fn f = g_fn.load(std::memory_order_relaxed);
    if (!f) {
        f = resolve_default();
        g_fn.store(f, std::memory_order_relaxed);
    }
    return f;
}

} // namespace

Phasor phasor_sum(const double* w, const double* phase, std::size_t n) {
    return current()(w, phase, n);
}

const char* active_kernel() {
#ifdef HMW_KERNELS_AVX2
    if (current() == &phasor_sum_avx2) return "avx2";
#endif
    return "scalar";
}

bool select_kernel(const std::string& name) {
    if (name == "scalar") {
        g_fn.store(&phasor_sum_scalar, std::memory_order_relaxed);
        return true;
    }
#ifdef HMW_KERNELS_AVX2
    if (name == "avx2") {
        if (!avx2_supported()) return false;
        g_fn.store(&phasor_sum_avx2, std::memory_order_relaxed);
        return true;
    }
#endif
    if (name == "auto") {
        g_fn.store(resolve_default(), std::memory_order_relaxed);
        return true;
    }
    return false;
}

} // namespace hmw::kernels
