#pragma once
#include <complex>
#include <cstddef>

namespace fpmlab::simd {

enum class Level { Scalar = 0, Avx2 = 1, Neon = 2 };

Level active_level();
// tests force the scalar path to check vector/scalar equivalence
void set_level(Level lvl);
Level detect();
const char* level_name(Level lvl);

// out[i] = exp(-1/(1-t[i])) for t[i] < 1, else 0   (t = squared radius / width^2)
void bump_eval(const double* t, double* out, std::size_t n);

// flux[i] = 0.5*vf[i]*(rc[i]+rr[i]) - 0.5*sqrt(vf[i]^2 + (cq*dv[i])^2)*(rr[i]-rc[i])
void flux_kernel(const double* vf, const double* dv, const double* rc,
                 const double* rr, double* flux, std::size_t n, double cq);

// f[i] *= m[i] (complex field times real multiplier)
void multiplier_apply(std::complex<double>* f, const double* m, std::size_t n);

// x[i] += v[i]*dt + amp*g[i]
void em_update(double* x, const double* v, const double* g, std::size_t n,
               double dt, double amp);

// blocked reductions; scalar and vector paths use the identical
// 4-accumulator association so results agree bit-for-bit
double reduce_sum(const double* a, std::size_t n);
double reduce_min(const double* a, std::size_t n);
double reduce_max_abs(const double* a, std::size_t n);

} // namespace fpmlab::simd
