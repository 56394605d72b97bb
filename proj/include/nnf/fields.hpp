#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "nnf/common.hpp"
#include "nnf/fft.hpp"
#include "nnf/grid.hpp"

namespace nnf {

/// Real vector/tensor field stored as conjugate-symmetric half-spectrum
/// coefficients, one buffer per component. `solenoidal` marks fields that
/// went through the Leray projector (or are divergence-free by
/// construction).
struct SpectralField {
    Grid grid;
    std::vector<cbuf> comp;
    bool solenoidal = false;

    SpectralField() = default;
    SpectralField(const Grid& g, int ncomp) : grid(g), comp(ncomp) {
        for (auto& c : comp) c.assign(g.num_spec(), cplx(0.0, 0.0));
    }
    int ncomp() const { return static_cast<int>(comp.size()); }
};

/// Physical-space companion of SpectralField.
struct PhysField {
    Grid grid;
    std::vector<rbuf> comp;

    PhysField() = default;
    PhysField(const Grid& g, int ncomp) : grid(g), comp(ncomp) {
        for (auto& c : comp) c.assign(g.num_phys(), 0.0);
    }
    int ncomp() const { return static_cast<int>(comp.size()); }
};

/// Symmetric strain-rate tensor Du = (grad u + grad u^T)/2 on the physical
/// grid. Components ordered (xx, yy, zz, xy, xz, yz); mag2 caches the
/// pointwise |Du|^2 (off-diagonal components counted twice).
struct StrainField {
    Grid grid;
    std::array<rbuf, 6> comp;
    rbuf mag2;

    StrainField() = default;
    explicit StrainField(const Grid& g) : grid(g) {
        for (auto& c : comp) c.assign(g.num_phys(), 0.0);
        mag2.assign(g.num_phys(), 0.0);
    }

    void refresh_mag2() {
        const std::size_t np = grid.num_phys();
        mag2.resize(np);
        detail::parallel_for(np, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t p = lo; p < hi; ++p) {
                const real d0 = comp[0][p], d1 = comp[1][p], d2 = comp[2][p];
                const real d3 = comp[3][p], d4 = comp[4][p], d5 = comp[5][p];
                mag2[p] = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * (d3 * d3 + d4 * d4 + d5 * d5);
            }
        });
    }
};

inline PhysField to_physical(const SpectralField& u) {
    PhysField out(u.grid, u.ncomp());
    for (int c = 0; c < u.ncomp(); ++c) fft::inverse(u.grid, u.comp[c], out.comp[c]);
    return out;
}

inline SpectralField to_spectral(const PhysField& u, bool solenoidal = false) {
    SpectralField out(u.grid, u.ncomp());
    for (int c = 0; c < u.ncomp(); ++c) fft::forward(u.grid, u.comp[c], out.comp[c]);
    out.solenoidal = solenoidal;
    return out;
}

namespace detail {

/// Applies f(jx, iy, iz, flat_index) over the half-spectrum.
template <class F>
void for_each_mode(const Grid& g, F&& f) {
    const int nh = g.half_n();
    std::size_t idx = 0;
    for (int iz = 0; iz < g.n; ++iz)
        for (int iy = 0; iy < g.n; ++iy)
            for (int jx = 0; jx < nh; ++jx, ++idx) f(jx, iy, iz, idx);
}

/// A:B at one grid point for symmetric 6-component tensor storage
/// (xx, yy, zz, xy, xz, yz); off-diagonals counted twice.
inline real frob6(const std::array<rbuf, 6>& a, const std::array<rbuf, 6>& b, std::size_t p) {
    return a[0][p] * b[0][p] + a[1][p] * b[1][p] + a[2][p] * b[2][p] +
           2.0 * (a[3][p] * b[3][p] + a[4][p] * b[4][p] + a[5][p] * b[5][p]);
}

/// d/dx_dir of one spectral component, in place.
inline void apply_deriv(const Grid& g, cbuf& c, int dir) {
    for_each_mode(g, [&](int jx, int iy, int iz, std::size_t idx) {
        int m = dir == 0 ? jx : g.wave_index(dir == 1 ? iy : iz);
        c[idx] *= cplx(0.0, g.deriv_wavenumber(m));
    });
}

}  // namespace detail

/// Full velocity gradient on the physical grid: comp[3*i + j] = d u_i / d x_j.
inline PhysField gradient(const SpectralField& u) {
    if (u.ncomp() != 3) throw std::invalid_argument("gradient expects a velocity field");
    PhysField out(u.grid, 3 * u.ncomp());
    cbuf work;
    for (int i = 0; i < u.ncomp(); ++i)
        for (int j = 0; j < 3; ++j) {
            work = u.comp[i];
            detail::apply_deriv(u.grid, work, j);
            fft::inverse(u.grid, work, out.comp[3 * i + j]);
        }
    return out;
}

/// Strain rate Du via spectral differentiation of a 3-component velocity.
inline StrainField sym_gradient(const SpectralField& u) {
    if (u.ncomp() != 3) throw std::invalid_argument("sym_gradient expects a velocity field");
    const Grid& g = u.grid;
    StrainField out(g);
    // (i, j) pairs for components (xx, yy, zz, xy, xz, yz)
    static constexpr int I[6] = {0, 1, 2, 0, 0, 1};
    static constexpr int J[6] = {0, 1, 2, 1, 2, 2};
    cbuf work(g.num_spec());
    for (int c = 0; c < 6; ++c) {
        const int i = I[c], j = J[c];
        detail::for_each_mode(g, [&](int jx, int iy, int iz, std::size_t idx) {
            const int mx = jx, my = g.wave_index(iy), mz = g.wave_index(iz);
            const real kj = g.deriv_wavenumber(j == 0 ? mx : (j == 1 ? my : mz));
            const real ki = g.deriv_wavenumber(i == 0 ? mx : (i == 1 ? my : mz));
            work[idx] = cplx(0.0, 0.5) * (kj * u.comp[i][idx] + ki * u.comp[j][idx]);
        });
        fft::inverse(g, work, out.comp[c]);
    }
    out.refresh_mag2();
    return out;
}

/// Leray projection P v = v - k (k.vhat)/|k|^2; removes the gradient part
/// and leaves the k=0 mode untouched. Output is flagged solenoidal.
inline SpectralField leray_project(const SpectralField& v) {
    if (v.ncomp() != 3) throw std::invalid_argument("leray_project expects a 3-component field");
    const Grid& g = v.grid;
    SpectralField out(g, 3);
    detail::for_each_mode(g, [&](int jx, int iy, int iz, std::size_t idx) {
        const real mx = jx, my = g.wave_index(iy), mz = g.wave_index(iz);
        const real m2 = mx * mx + my * my + mz * mz;
        const cplx vx = v.comp[0][idx], vy = v.comp[1][idx], vz = v.comp[2][idx];
        if (m2 == 0.0) {
            out.comp[0][idx] = vx;
            out.comp[1][idx] = vy;
            out.comp[2][idx] = vz;
            return;
        }
        const cplx kdotv = (mx * vx + my * vy + mz * vz) / m2;
        out.comp[0][idx] = vx - mx * kdotv;
        out.comp[1][idx] = vy - my * kdotv;
        out.comp[2][idx] = vz - mz * kdotv;
    });
    out.solenoidal = true;
    return out;
}

/// 2/3-rule dealiasing: zeroes every coefficient with any |k_i| > n/3.
inline SpectralField dealias(const SpectralField& v) {
    const Grid& g = v.grid;
    SpectralField out = v;
    const int cutoff = g.n / 3;  // keep |m| <= floor(n/3)
    detail::for_each_mode(g, [&](int jx, int iy, int iz, std::size_t idx) {
        const int mx = jx, my = g.wave_index(iy), mz = g.wave_index(iz);
        if (std::abs(mx) > cutoff || std::abs(my) > cutoff || std::abs(mz) > cutoff)
            for (int c = 0; c < out.ncomp(); ++c) out.comp[c][idx] = cplx(0.0, 0.0);
    });
    return out;
}

/// Max over modes of |k.uhat| (divergence in spectral space), and max |uhat|.
/// Used by tests and the solver's divergence-free invariant check.
inline std::pair<real, real> spectral_divergence_stats(const SpectralField& u) {
    const Grid& g = u.grid;
    real max_div = 0.0, max_u = 0.0;
    detail::for_each_mode(g, [&](int jx, int iy, int iz, std::size_t idx) {
        const real mx = jx, my = g.wave_index(iy), mz = g.wave_index(iz);
        const cplx d = mx * u.comp[0][idx] + my * u.comp[1][idx] + mz * u.comp[2][idx];
        max_div = std::max(max_div, std::abs(d));
        for (int c = 0; c < 3; ++c) max_u = std::max(max_u, std::abs(u.comp[c][idx]));
    });
    return {max_div, max_u};
}

/// H^l norm via Fourier weights: sqrt( L^3 sum_k (1+|k|^2)^l |vhat|^2 ),
/// summed over all components and the full (conjugate-completed) spectrum.
/// l = 0 recovers the L^2(box) norm.
inline real sobolev_norm(const SpectralField& v, int l) {
    if (l < 0 || l > 6) throw std::invalid_argument("sobolev_norm supports 0 <= l <= 6");
    const Grid& g = v.grid;
    real acc = 0.0;
    detail::for_each_mode(g, [&](int jx, int iy, int iz, std::size_t idx) {
        const real kx = g.wavenumber(jx);
        const real ky = g.wavenumber(g.wave_index(iy));
        const real kz = g.wavenumber(g.wave_index(iz));
        const real w = g.spec_weight(jx);
        real base = 1.0 + kx * kx + ky * ky + kz * kz;
        real weight = 1.0;
        for (int p = 0; p < l; ++p) weight *= base;
        real mag2 = 0.0;
        for (int c = 0; c < v.ncomp(); ++c) mag2 += std::norm(v.comp[c][idx]);
        acc += w * weight * mag2;
    });
    const real vol = g.box_length * g.box_length * g.box_length;
    return std::sqrt(vol * acc);
}

/// Trapezoidal quadrature of a scalar grid function over the box
/// (spectrally exact for band-limited integrands).
inline real integrate(const Grid& g, const rbuf& f) {
    real acc = 0.0;
    for (real v : f) acc += v;
    return acc * g.cell_volume();
}

inline real max_abs(const rbuf& f) {
    real m = 0.0;
    for (real v : f) m = std::max(m, std::abs(v));
    return m;
}

/// Taylor-Green vortex u = (sin x cos y, -cos x sin y, 0); divergence-free
/// by construction, used as the exact-solution fixture for Newtonian runs.
inline SpectralField taylor_green(const Grid& g) {
    PhysField u(g, 3);
    for (int iz = 0; iz < g.n; ++iz)
        for (int iy = 0; iy < g.n; ++iy)
            for (int ix = 0; ix < g.n; ++ix) {
                const std::size_t p = g.phys_index(ix, iy, iz);
                const real x = g.x(ix), y = g.x(iy);
                u.comp[0][p] = std::sin(x) * std::cos(y);
                u.comp[1][p] = -std::cos(x) * std::sin(y);
                u.comp[2][p] = 0.0;
            }
    return to_spectral(u, /*solenoidal=*/true);
}

/// Reproducible divergence-free random field supported on 1 <= |k| <= k_max,
/// rescaled so its H^3 norm equals target_h3 exactly.
inline SpectralField random_solenoidal(const Grid& g, std::uint64_t seed, int k_max,
                                       real target_h3) {
    if (k_max < 1 || k_max > g.n / 3)
        throw std::invalid_argument("random_solenoidal requires 1 <= k_max <= n/3");
    if (!(target_h3 > 0.0)) throw std::invalid_argument("random_solenoidal: target_h3 must be > 0");

    for (int attempt = 0; attempt < 10; ++attempt) {
        std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ull * std::uint64_t(attempt));
        std::normal_distribution<real> gauss(0.0, 1.0);
        PhysField noise(g, 3);
        for (auto& c : noise.comp)
            for (auto& v : c) v = gauss(rng);
        SpectralField u = to_spectral(noise);
        // Restrict support to the shell 1 <= |m| <= k_max.
        detail::for_each_mode(g, [&](int jx, int iy, int iz, std::size_t idx) {
            const int mx = jx, my = g.wave_index(iy), mz = g.wave_index(iz);
            const double m2 = double(mx) * mx + double(my) * my + double(mz) * mz;
            if (m2 < 1.0 || m2 > double(k_max) * k_max)
                for (int c = 0; c < 3; ++c) u.comp[c][idx] = cplx(0.0, 0.0);
        });
        u = leray_project(u);
        const real h3 = sobolev_norm(u, 3);
        if (h3 <= 1e-14) continue;  // degenerate draw; reseed
        const real scale = target_h3 / h3;
        for (auto& c : u.comp)
            for (auto& v : c) v *= scale;
        u.solenoidal = true;
        return u;
    }
    throw std::runtime_error("random_solenoidal: degenerate draws for 10 consecutive seeds");
}

// ---------------------------------------------------------------------------
// Checkpoint format (bit-exact):
//   magic "NNF1", little-endian u32 n, f64 box_length, f64 time, u64 step,
//   then 3 arrays of n^3 little-endian f64 physical values, x fastest.
// ---------------------------------------------------------------------------

namespace detail {

template <class T>
void write_le(std::ostream& os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
    std::reverse(bytes, bytes + sizeof(T));
#endif
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
    unsigned char bytes[sizeof(T)];
    is.read(reinterpret_cast<char*>(bytes), sizeof(T));
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
    std::reverse(bytes, bytes + sizeof(T));
#endif
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return v;
}

}  // namespace detail

struct Checkpoint {
    Grid grid;
    SpectralField u;
    double time = 0.0;
    std::uint64_t step = 0;
};

inline void write_checkpoint(const std::string& path, const SpectralField& u, double time,
                             std::uint64_t step) {
    if (u.ncomp() != 3) throw std::invalid_argument("write_checkpoint expects a velocity field");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_checkpoint: cannot open '" + path + "'");
    os.write("NNF1", 4);
    detail::write_le<std::uint32_t>(os, std::uint32_t(u.grid.n));
    detail::write_le<double>(os, u.grid.box_length);
    detail::write_le<double>(os, time);
    detail::write_le<std::uint64_t>(os, step);
    const PhysField phys = to_physical(u);
    for (int c = 0; c < 3; ++c)
        for (real v : phys.comp[c]) detail::write_le<double>(os, v);
    if (!os) throw std::runtime_error("write_checkpoint: write failed for '" + path + "'");
}

inline Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_checkpoint: cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "NNF1", 4) != 0)
        throw std::runtime_error("read_checkpoint: '" + path + "' is not an NNF1 checkpoint");
    const auto n = detail::read_le<std::uint32_t>(is);
    const auto L = detail::read_le<double>(is);
    Checkpoint ck;
    ck.time = detail::read_le<double>(is);
    ck.step = detail::read_le<std::uint64_t>(is);
    ck.grid = Grid(int(n), L);
    PhysField phys(ck.grid, 3);
    for (int c = 0; c < 3; ++c)
        for (real& v : phys.comp[c]) v = detail::read_le<double>(is);
    if (!is) throw std::runtime_error("read_checkpoint: truncated file '" + path + "'");
    ck.u = to_spectral(phys);
    return ck;
}

}  // namespace nnf
