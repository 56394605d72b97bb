#pragma once

#include <fftw3.h>

#include <map>
#include <mutex>

#include "nnf/common.hpp"
#include "nnf/grid.hpp"

namespace nnf::fft {

namespace detail {

struct PlanPair {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
};

/// Per-size FFTW plans, created once and shared. Plans are made with
/// FFTW_ESTIMATE so planning is deterministic (FFTW_MEASURE picks
/// algorithms by timing, which would break bit-for-bit reproducibility
/// of runs). Plan creation is serialized; execution through the
/// new-array interface is thread-safe.
inline const PlanPair& plans_for(int n) {
    static std::mutex mtx;
    static std::map<int, PlanPair> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    const std::size_t np = std::size_t(n) * n * n;
    const std::size_t ns = std::size_t(n) * n * (n / 2 + 1);
    rbuf phys(np);
    cbuf spec(ns);
    PlanPair p;
    p.r2c = fftw_plan_dft_r2c_3d(n, n, n, phys.data(),
                                 reinterpret_cast<fftw_complex*>(spec.data()),
                                 FFTW_ESTIMATE);
    p.c2r = fftw_plan_dft_c2r_3d(n, n, n,
                                 reinterpret_cast<fftw_complex*>(spec.data()),
                                 phys.data(), FFTW_ESTIMATE);
    return cache.emplace(n, p).first->second;
}

/// Scratch buffer reused by the inverse transform (FFTW's multi-d c2r
/// destroys its input, so the caller's coefficients are copied first).
inline cbuf& scratch_for(std::size_t ns) {
    thread_local cbuf scratch;
    if (scratch.size() < ns) scratch.resize(ns);
    return scratch;
}

}  // namespace detail

/// Physical -> spectral. Output coefficients are Fourier-series
/// coefficients: u(x) = sum_k uhat(k) e^{i k.x}.
inline void forward(const Grid& g, const rbuf& phys, cbuf& spec) {
    spec.resize(g.num_spec());
    // new-array execute requires non-const in; r2c does not modify it.
    fftw_execute_dft_r2c(detail::plans_for(g.n).r2c, const_cast<real*>(phys.data()),
                         reinterpret_cast<fftw_complex*>(spec.data()));
    const real scale = 1.0 / double(g.num_phys());
    for (auto& c : spec) c *= scale;
}

/// Spectral -> physical. The input is left untouched.
inline void inverse(const Grid& g, const cbuf& spec, rbuf& phys) {
    phys.resize(g.num_phys());
    cbuf& tmp = detail::scratch_for(g.num_spec());
    std::copy(spec.begin(), spec.end(), tmp.begin());
    fftw_execute_dft_c2r(detail::plans_for(g.n).c2r,
                         reinterpret_cast<fftw_complex*>(tmp.data()), phys.data());
}

}  // namespace nnf::fft
