#pragma once
#include <complex>
#include <vector>

#include "fpmlab/grid.hpp"

namespace fpmlab {

using cplx = std::complex<double>;

// Forward/backward 2-D DFTs (FFTW, complex-to-complex, FFTW_ESTIMATE only so
// results are independent of planner timing; plans cached per n behind a mutex,
// execution is thread-safe on caller-owned buffers).
std::vector<cplx> fft2(const Field& u);
std::vector<cplx> fft2(const Grid& g, const std::vector<cplx>& u);
// backward transform / n^2; imaginary parts discarded
Field ifft2_real(const Grid& g, const std::vector<cplx>& u);
std::vector<cplx> ifft2(const Grid& g, const std::vector<cplx>& u);

} // namespace fpmlab
