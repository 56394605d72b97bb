#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <cstdint>
#include <new>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace nnf {

using real = double;
using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

/// Allocator with 64-byte alignment so field buffers satisfy FFTW's SIMD
/// alignment requirements (plans are created and executed on buffers from
/// this allocator).
template <class T>
struct aligned_allocator {
    using value_type = T;
    static constexpr std::size_t alignment = 64;

    aligned_allocator() noexcept = default;
    template <class U>
    aligned_allocator(const aligned_allocator<U>&) noexcept {}

    T* allocate(std::size_t n) {
        std::size_t bytes = (n * sizeof(T) + alignment - 1) / alignment * alignment;
        void* p = std::aligned_alloc(alignment, bytes);
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) noexcept { std::free(p); }

    template <class U>
    bool operator==(const aligned_allocator<U>&) const noexcept { return true; }
};

using rbuf = std::vector<real, aligned_allocator<real>>;
using cbuf = std::vector<cplx, aligned_allocator<cplx>>;

namespace detail {

/// Thread cap from NNF_THREADS (default 1). Parsed once.
inline int max_threads() {
    static const int cached = [] {
        const char* env = std::getenv("NNF_THREADS");
        if (!env) return 1;
        int v = std::atoi(env);
        int hw = static_cast<int>(std::thread::hardware_concurrency());
        if (hw <= 0) hw = 1;
        if (v < 1) return 1;
        return v < hw ? v : hw;
    }();
    return cached;
}

/// Deterministic chunked parallel map. Only used for pointwise kernels with
/// no cross-element reductions, so results are independent of thread count.
template <class F>
void parallel_for(std::size_t count, F&& body) {
    const int nt = max_threads();
    if (nt <= 1 || count < 4096) {
        body(std::size_t{0}, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    const std::size_t chunk = (count + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
        std::size_t lo = t * chunk;
        std::size_t hi = lo + chunk < count ? lo + chunk : count;
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

/// Symmetric 3x3 matrix stored as (xx, yy, zz, xy, xz, yz).
struct SymMat3 {
    std::array<real, 6> v{};

    static SymMat3 diagonal(real a, real b, real c) { return SymMat3{{a, b, c, 0, 0, 0}}; }

    real xx() const { return v[0]; }
    real yy() const { return v[1]; }
    real zz() const { return v[2]; }
    real xy() const { return v[3]; }
    real xz() const { return v[4]; }
    real yz() const { return v[5]; }
};

/// Frobenius inner product A:B = sum_ij A_ij B_ij (off-diagonals twice).
inline real frob_inner(const SymMat3& a, const SymMat3& b) {
    return a.v[0] * b.v[0] + a.v[1] * b.v[1] + a.v[2] * b.v[2] +
           2.0 * (a.v[3] * b.v[3] + a.v[4] * b.v[4] + a.v[5] * b.v[5]);
}

inline real frob_norm2(const SymMat3& a) { return frob_inner(a, a); }

}  // namespace nnf
