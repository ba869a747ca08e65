#include "fpmlab/simd.hpp"

#include <atomic>
#include <cmath>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define FPMLAB_X86 1
#endif
#if defined(__aarch64__)
#include <arm_neon.h>
#define FPMLAB_NEON 1
#endif

namespace fpmlab::simd {

namespace {
std::atomic<int> g_level{-1};
}

Level detect() {
#if defined(FPMLAB_X86) && defined(__GNUC__)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return Level::Avx2;
#endif
#if defined(FPMLAB_NEON)
    return Level::Neon;
#endif
    return Level::Scalar;
}

Level active_level() {
    int lvl = g_level.load(std::memory_order_relaxed);
    if (lvl < 0) {
        lvl = int(detect());
        g_level.store(lvl, std::memory_order_relaxed);
    }
    return Level(lvl);
}

void set_level(Level lvl) { g_level.store(int(lvl), std::memory_order_relaxed); }

const char* level_name(Level lvl) {
    switch (lvl) {
        case Level::Avx2: return "avx2";
        case Level::Neon: return "neon";
        default: return "scalar";
    }
}

// ---------------------------------------------------------------- scalar ----

namespace {

void bump_eval_scalar(const double* t, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double ti = t[i];
        out[i] = ti < 1.0 ? std::exp(-1.0 / (1.0 - ti)) : 0.0;
    }
}

void flux_scalar(const double* vf, const double* dv, const double* rc,
                 const double* rr, double* flux, std::size_t n, double cq) {
    for (std::size_t i = 0; i < n; ++i) {
        const double q = std::sqrt(vf[i] * vf[i] + (cq * dv[i]) * (cq * dv[i]));
        flux[i] = 0.5 * vf[i] * (rc[i] + rr[i]) - 0.5 * q * (rr[i] - rc[i]);
    }
}

void multiplier_scalar(std::complex<double>* f, const double* m, std::size_t n) {
    auto* d = reinterpret_cast<double*>(f);
    for (std::size_t i = 0; i < n; ++i) {
        d[2 * i] *= m[i];
        d[2 * i + 1] *= m[i];
    }
}

void em_scalar(double* x, const double* v, const double* g, std::size_t n,
               double dt, double amp) {
    for (std::size_t i = 0; i < n; ++i)
        x[i] = std::fma(amp, g[i], std::fma(v[i], dt, x[i]));
}

double sum_scalar(const double* a, std::size_t n) {
    double acc[4] = {0, 0, 0, 0};
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        acc[0] += a[i];
        acc[1] += a[i + 1];
        acc[2] += a[i + 2];
        acc[3] += a[i + 3];
    }
    for (std::size_t i = n4; i < n; ++i) acc[i - n4] += a[i];
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double min_scalar(const double* a, std::size_t n) {
    double acc[4];
    acc[0] = acc[1] = acc[2] = acc[3] = a[0];
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        acc[0] = a[i] < acc[0] ? a[i] : acc[0];
        acc[1] = a[i + 1] < acc[1] ? a[i + 1] : acc[1];
        acc[2] = a[i + 2] < acc[2] ? a[i + 2] : acc[2];
        acc[3] = a[i + 3] < acc[3] ? a[i + 3] : acc[3];
    }
    for (std::size_t i = n4; i < n; ++i)
        acc[i - n4] = a[i] < acc[i - n4] ? a[i] : acc[i - n4];
    const double m01 = acc[0] < acc[1] ? acc[0] : acc[1];
    const double m23 = acc[2] < acc[3] ? acc[2] : acc[3];
    return m01 < m23 ? m01 : m23;
}

double max_abs_scalar(const double* a, std::size_t n) {
    double acc[4] = {0, 0, 0, 0};
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        const double v0 = std::fabs(a[i]), v1 = std::fabs(a[i + 1]);
        const double v2 = std::fabs(a[i + 2]), v3 = std::fabs(a[i + 3]);
        acc[0] = v0 > acc[0] ? v0 : acc[0];
        acc[1] = v1 > acc[1] ? v1 : acc[1];
        acc[2] = v2 > acc[2] ? v2 : acc[2];
        acc[3] = v3 > acc[3] ? v3 : acc[3];
    }
    for (std::size_t i = n4; i < n; ++i) {
        const double v = std::fabs(a[i]);
        acc[i - n4] = v > acc[i - n4] ? v : acc[i - n4];
    }
    const double m01 = acc[0] > acc[1] ? acc[0] : acc[1];
    const double m23 = acc[2] > acc[3] ? acc[2] : acc[3];
    return m01 > m23 ? m01 : m23;
}

} // namespace

// ------------------------------------------------------------------ AVX2 ----

#if defined(FPMLAB_X86) && defined(__GNUC__)
namespace {

__attribute__((target("avx2,fma")))
void bump_eval_avx2(const double* t, double* out, std::size_t n) {
    const __m256d one = _mm256_set1_pd(1.0);
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        const __m256d ti = _mm256_loadu_pd(t + i);
        const __m256d mask = _mm256_cmp_pd(ti, one, _CMP_LT_OQ);
        // arg = -1/(1-t); masked lanes get 0 after the blend
        const __m256d denom = _mm256_sub_pd(one, ti);
        const __m256d arg = _mm256_div_pd(_mm256_set1_pd(-1.0), denom);
        alignas(32) double av[4], mv[4];
        _mm256_store_pd(av, arg);
        _mm256_store_pd(mv, mask);
        // libm exp lane-wise: keeps the vector path bit-identical to scalar
        alignas(32) double ev[4];
        for (int k = 0; k < 4; ++k) ev[k] = mv[k] != 0.0 ? std::exp(av[k]) : 0.0;
        _mm256_storeu_pd(out + i, _mm256_load_pd(ev));
    }
    for (std::size_t i = n4; i < n; ++i)
        out[i] = t[i] < 1.0 ? std::exp(-1.0 / (1.0 - t[i])) : 0.0;
}

__attribute__((target("avx2,fma")))
void flux_avx2(const double* vf, const double* dv, const double* rc,
               const double* rr, double* flux, std::size_t n, double cq) {
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d cqv = _mm256_set1_pd(cq);
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        const __m256d v = _mm256_loadu_pd(vf + i);
        const __m256d w = _mm256_mul_pd(cqv, _mm256_loadu_pd(dv + i));
        const __m256d q = _mm256_sqrt_pd(
            _mm256_fmadd_pd(v, v, _mm256_mul_pd(w, w)));
        const __m256d c = _mm256_loadu_pd(rc + i);
        const __m256d r = _mm256_loadu_pd(rr + i);
        const __m256d adv = _mm256_mul_pd(_mm256_mul_pd(half, v), _mm256_add_pd(c, r));
        const __m256d dif = _mm256_mul_pd(_mm256_mul_pd(half, q), _mm256_sub_pd(r, c));
        _mm256_storeu_pd(flux + i, _mm256_sub_pd(adv, dif));
    }
    flux_scalar(vf + n4, dv + n4, rc + n4, rr + n4, flux + n4, n - n4, cq);
}

__attribute__((target("avx2,fma")))
void multiplier_avx2(std::complex<double>* f, const double* m, std::size_t n) {
    auto* d = reinterpret_cast<double*>(f);
    const std::size_t n2 = n & ~std::size_t(1);
    for (std::size_t i = 0; i < n2; i += 2) {
        // two complex values <-> four doubles; duplicate each multiplier
        const __m128d mm = _mm_loadu_pd(m + i);
        const __m256d md = _mm256_permute4x64_pd(
            _mm256_castpd128_pd256(mm), 0x50); // m0 m0 m1 m1
        const __m256d fd = _mm256_loadu_pd(d + 2 * i);
        _mm256_storeu_pd(d + 2 * i, _mm256_mul_pd(fd, md));
    }
    for (std::size_t i = n2; i < n; ++i) {
        d[2 * i] *= m[i];
        d[2 * i + 1] *= m[i];
    }
}

__attribute__((target("avx2,fma")))
void em_avx2(double* x, const double* v, const double* g, std::size_t n,
             double dt, double amp) {
    const __m256d dtv = _mm256_set1_pd(dt);
    const __m256d ampv = _mm256_set1_pd(amp);
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d xi = _mm256_loadu_pd(x + i);
        xi = _mm256_fmadd_pd(_mm256_loadu_pd(v + i), dtv, xi);
        xi = _mm256_fmadd_pd(ampv, _mm256_loadu_pd(g + i), xi);
        _mm256_storeu_pd(x + i, xi);
    }
    em_scalar(x + n4, v + n4, g + n4, n - n4, dt, amp);
}

__attribute__((target("avx2,fma")))
double sum_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4)
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    for (std::size_t i = n4; i < n; ++i) lane[i - n4] += a[i];
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

__attribute__((target("avx2,fma")))
double min_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_set1_pd(a[0]);
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4)
        acc = _mm256_min_pd(acc, _mm256_loadu_pd(a + i));
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    for (std::size_t i = n4; i < n; ++i)
        lane[i - n4] = a[i] < lane[i - n4] ? a[i] : lane[i - n4];
    const double m01 = lane[0] < lane[1] ? lane[0] : lane[1];
    const double m23 = lane[2] < lane[3] ? lane[2] : lane[3];
    return m01 < m23 ? m01 : m23;
}

__attribute__((target("avx2,fma")))
double max_abs_avx2(const double* a, std::size_t n) {
    const __m256d signmask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4)
        acc = _mm256_max_pd(acc, _mm256_andnot_pd(signmask, _mm256_loadu_pd(a + i)));
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    for (std::size_t i = n4; i < n; ++i) {
        const double v = std::fabs(a[i]);
        lane[i - n4] = v > lane[i - n4] ? v : lane[i - n4];
    }
    const double m01 = lane[0] > lane[1] ? lane[0] : lane[1];
    const double m23 = lane[2] > lane[3] ? lane[2] : lane[3];
    return m01 > m23 ? m01 : m23;
}

} // namespace
#endif // FPMLAB_X86

// ------------------------------------------------------------------ NEON ----

#if defined(FPMLAB_NEON)
namespace {

// only the trivially portable kernels get NEON variants (128-bit lanes);
// bump_eval stays scalar on aarch64
void flux_neon(const double* vf, const double* dv, const double* rc,
               const double* rr, double* flux, std::size_t n, double cq) {
    const float64x2_t half = vdupq_n_f64(0.5);
    const float64x2_t cqv = vdupq_n_f64(cq);
    const std::size_t n2 = n & ~std::size_t(1);
    for (std::size_t i = 0; i < n2; i += 2) {
        const float64x2_t v = vld1q_f64(vf + i);
        const float64x2_t w = vmulq_f64(cqv, vld1q_f64(dv + i));
        const float64x2_t q = vsqrtq_f64(vfmaq_f64(vmulq_f64(w, w), v, v));
        const float64x2_t c = vld1q_f64(rc + i);
        const float64x2_t r = vld1q_f64(rr + i);
        const float64x2_t adv = vmulq_f64(vmulq_f64(half, v), vaddq_f64(c, r));
        const float64x2_t dif = vmulq_f64(vmulq_f64(half, q), vsubq_f64(r, c));
        vst1q_f64(flux + i, vsubq_f64(adv, dif));
    }
    flux_scalar(vf + n2, dv + n2, rc + n2, rr + n2, flux + n2, n - n2, cq);
}

void em_neon(double* x, const double* v, const double* g, std::size_t n,
             double dt, double amp) {
    const float64x2_t dtv = vdupq_n_f64(dt);
    const float64x2_t ampv = vdupq_n_f64(amp);
    const std::size_t n2 = n & ~std::size_t(1);
    for (std::size_t i = 0; i < n2; i += 2) {
        float64x2_t xi = vld1q_f64(x + i);
        xi = vfmaq_f64(xi, vld1q_f64(v + i), dtv);
        xi = vfmaq_f64(xi, ampv, vld1q_f64(g + i));
        vst1q_f64(x + i, xi);
    }
    em_scalar(x + n2, v + n2, g + n2, n - n2, dt, amp);
}

} // namespace
#endif // FPMLAB_NEON

// -------------------------------------------------------------- dispatch ----

void bump_eval(const double* t, double* out, std::size_t n) {
#if defined(FPMLAB_X86) && defined(__GNUC__)
    if (active_level() == Level::Avx2) return bump_eval_avx2(t, out, n);
#endif
    bump_eval_scalar(t, out, n);
}

void flux_kernel(const double* vf, const double* dv, const double* rc,
                 const double* rr, double* flux, std::size_t n, double cq) {
#if defined(FPMLAB_X86) && defined(__GNUC__)
    if (active_level() == Level::Avx2) return flux_avx2(vf, dv, rc, rr, flux, n, cq);
#endif
#if defined(FPMLAB_NEON)
    if (active_level() == Level::Neon) return flux_neon(vf, dv, rc, rr, flux, n, cq);
#endif
    flux_scalar(vf, dv, rc, rr, flux, n, cq);
}

void multiplier_apply(std::complex<double>* f, const double* m, std::size_t n) {
#if defined(FPMLAB_X86) && defined(__GNUC__)
    if (active_level() == Level::Avx2) return multiplier_avx2(f, m, n);
#endif
    multiplier_scalar(f, m, n);
}

void em_update(double* x, const double* v, const double* g, std::size_t n,
               double dt, double amp) {
#if defined(FPMLAB_X86) && defined(__GNUC__)
    if (active_level() == Level::Avx2) return em_avx2(x, v, g, n, dt, amp);
#endif
#if defined(FPMLAB_NEON)
    if (active_level() == Level::Neon) return em_neon(x, v, g, n, dt, amp);
#endif
    em_scalar(x, v, g, n, dt, amp);
}

double reduce_sum(const double* a, std::size_t n) {
    if (n == 0) return 0.0;
#if defined(FPMLAB_X86) && defined(__GNUC__)
    if (active_level() == Level::Avx2) return sum_avx2(a, n);
#endif
    return sum_scalar(a, n);
}

double reduce_min(const double* a, std::size_t n) {
    if (n == 0) return 0.0;
#if defined(FPMLAB_X86) && defined(__GNUC__)
    if (active_level() == Level::Avx2) return min_avx2(a, n);
#endif
    return min_scalar(a, n);
}

double reduce_max_abs(const double* a, std::size_t n) {
    if (n == 0) return 0.0;
#if defined(FPMLAB_X86) && defined(__GNUC__)
    if (active_level() == Level::Avx2) return max_abs_avx2(a, n);
#endif
    return max_abs_scalar(a, n);
}

} // namespace fpmlab::simd
