#include "hmw/kernels.hpp"

#include <cmath>
#include <immintrin.h>

// AVX2 phasor accumulation with an in-lane sincos. Polynomial coefficients are
// the classic fdlibm kernels (|r| <= pi/4); 2-part Cody-Waite reduction is
// exact for the argument magnitudes produced by the phase models (|x| < 2^18).

namespace hmw::kernels {

namespace {

constexpr double kTwoOverPi = 6.36619772367581382433e-01;
constexpr double kPio2Hi = 1.57079632673412561417e+00;  // first 33 bits of pi/2
constexpr double kPio2Lo = 6.07710050650619224932e-11;  // pi/2 - kPio2Hi
constexpr double kMaxFastArg = 262144.0;                // 2^18

constexpr double S1 = -1.66666666666666324348e-01;
constexpr double S2 = 8.33333333332248946124e-03;
constexpr double S3 = -1.98412698298579493134e-04;
constexpr double S4 = 2.75573137070700676789e-06;
constexpr double S5 = -2.50507602534068634195e-08;
constexpr double S6 = 1.58969099521155010221e-10;

constexpr double C1 = 4.16666666666666019037e-02;
constexpr double C2 = -1.38888888888741095749e-03;
constexpr double C3 = 2.48015872894767294178e-05;
constexpr double C4 = -2.75573143513906633035e-07;
constexpr double C5 = 2.08757232129817482790e-09;
constexpr double C6 = -1.13596475577881948265e-11;

inline void sincos4(__m256d x, __m256d& s_out, __m256d& c_out) {
    const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kTwoOverPi)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(k, _mm256_set1_pd(kPio2Hi), x);
    r = _mm256_fnmadd_pd(k, _mm256_set1_pd(kPio2Lo), r);

    const __m256d r2 = _mm256_mul_pd(r, r);

    __m256d sp = _mm256_set1_pd(S6);
    sp = _mm256_fmadd_pd(sp, r2, _mm256_set1_pd(S5));
    sp = _mm256_fmadd_pd(sp, r2, _mm256_set1_pd(S4));
    sp = _mm256_fmadd_pd(sp, r2, _mm256_set1_pd(S3));
    sp = _mm256_fmadd_pd(sp, r2, _mm256_set1_pd(S2));
    sp = _mm256_fmadd_pd(sp, r2, _mm256_set1_pd(S1));
    const __m256d sin_r = _mm256_fmadd_pd(_mm256_mul_pd(r, r2), sp, r);

    __m256d cp = _mm256_set1_pd(C6);
    cp = _mm256_fmadd_pd(cp, r2, _mm256_set1_pd(C5));
    cp = _mm256_fmadd_pd(cp, r2, _mm256_set1_pd(C4));
    cp = _mm256_fmadd_pd(cp, r2, _mm256_set1_pd(C3));
    cp = _mm256_fmadd_pd(cp, r2, _mm256_set1_pd(C2));
    cp = _mm256_fmadd_pd(cp, r2, _mm256_set1_pd(C1));
    const __m256d cos_r = _mm256_fmadd_pd(
        _mm256_mul_pd(r2, r2), cp,
        _mm256_fnmadd_pd(r2, _mm256_set1_pd(0.5), _mm256_set1_pd(1.0)));

    // quadrant handling: q = k mod 4
    const __m128i k32 = _mm256_cvtpd_epi32(k);
    const __m256i k64 = _mm256_cvtepi32_epi64(k32);
    const __m256i one = _mm256_set1_epi64x(1);
    const __m256i two = _mm256_set1_epi64x(2);
    const __m256d swap =
        _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(k64, one), one));
    const __m256d sin_neg =
        _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(k64, two), two));
    const __m256i k1 = _mm256_add_epi64(k64, one);
    const __m256d cos_neg =
        _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(k1, two), two));

    __m256d s = _mm256_blendv_pd(sin_r, cos_r, swap);
    __m256d c = _mm256_blendv_pd(cos_r, sin_r, swap);
    const __m256d signbit = _mm256_set1_pd(-0.0);
    s = _mm256_xor_pd(s, _mm256_and_pd(sin_neg, signbit));
    c = _mm256_xor_pd(c, _mm256_and_pd(cos_neg, signbit));
    s_out = s;
    c_out = c;
}

} // namespace

Phasor phasor_sum_avx2(const double* w, const double* phase, std::size_t n) {
    __m256d re = _mm256_setzero_pd();
    __m256d im = _mm256_setzero_pd();
    const __m256d maxarg = _mm256_set1_pd(kMaxFastArg);

    std::size_t i = 0;
    double re_tail = 0.0, im_tail = 0.0;
    for (; i + 4 <= n; i += 4) {
        const __m256d x = _mm256_loadu_pd(phase + i);
        const __m256d ax = _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
        if (_mm256_movemask_pd(_mm256_cmp_pd(ax, maxarg, _CMP_GT_OQ))) {
            for (std::size_t j = i; j < i + 4; ++j) {
                re_tail += w[j] * std::cos(phase[j]);
                im_tail += w[j] * std::sin(phase[j]);
            }
            continue;
        }
        __m256d s, c;
        sincos4(x, s, c);
        const __m256d wv = _mm256_loadu_pd(w + i);
        re = _mm256_fmadd_pd(wv, c, re);
        im = _mm256_fmadd_pd(wv, s, im);
    }
    for (; i < n; ++i) {
        re_tail += w[i] * std::cos(phase[i]);
        im_tail += w[i] * std::sin(phase[i]);
    }

    alignas(32) double buf[4];
    Phasor out;
    _mm256_store_pd(buf, re);
    out.re = ((buf[0] + buf[1]) + (buf[2] + buf[3])) + re_tail;
    _mm256_store_pd(buf, im);
    out.im = ((buf[0] + buf[1]) + (buf[2] + buf[3])) + im_tail;
    return out;
}

} // namespace hmw::kernels
