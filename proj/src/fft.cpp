#include "fpmlab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace fpmlab {

namespace {

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

std::mutex plan_mutex;
std::map<int, PlanPair>& plan_cache() {
    static std::map<int, PlanPair> cache;
    return cache;
}

PlanPair plans_for(int n) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto& cache = plan_cache();
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<cplx> scratch_in(std::size_t(n) * n), scratch_out(std::size_t(n) * n);
    auto* in = reinterpret_cast<fftw_complex*>(scratch_in.data());
    auto* out = reinterpret_cast<fftw_complex*>(scratch_out.data());
    PlanPair p;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    p.fwd = fftw_plan_dft_2d(n, n, in, out, FFTW_FORWARD, flags);
    p.bwd = fftw_plan_dft_2d(n, n, in, out, FFTW_BACKWARD, flags);
    cache[n] = p;
    return p;
}

} // namespace

std::vector<cplx> fft2(const Grid& g, const std::vector<cplx>& u) {
    auto p = plans_for(g.n);
    std::vector<cplx> out(u.size());
    fftw_execute_dft(p.fwd,
                     reinterpret_cast<fftw_complex*>(const_cast<cplx*>(u.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

std::vector<cplx> fft2(const Field& u) {
    std::vector<cplx> tmp(u.a.size());
    for (std::size_t i = 0; i < u.a.size(); ++i) tmp[i] = u.a[i];
    return fft2(u.grid, tmp);
}

std::vector<cplx> ifft2(const Grid& g, const std::vector<cplx>& u) {
    auto p = plans_for(g.n);
    std::vector<cplx> out(u.size());
    fftw_execute_dft(p.bwd,
                     reinterpret_cast<fftw_complex*>(const_cast<cplx*>(u.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
    const double inv = 1.0 / double(g.size());
    for (auto& v : out) v *= inv;
    return out;
}

Field ifft2_real(const Grid& g, const std::vector<cplx>& u) {
    auto full = ifft2(g, u);
    Field out(g);
    for (std::size_t i = 0; i < full.size(); ++i) out.a[i] = full[i].real();
    return out;
}

} // namespace fpmlab
