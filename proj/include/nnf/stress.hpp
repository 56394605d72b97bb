#pragma once

#include <cmath>
#include <stdexcept>

#include "nnf/constitutive.hpp"
#include "nnf/fields.hpp"

namespace nnf {

/// Viscous stress sigma = G[|Du|^2] Du, symmetric, stored like StrainField.
struct StressField {
    Grid grid;
    std::array<rbuf, 6> comp;

    StressField() = default;
    explicit StressField(const Grid& g) : grid(g) {
        for (auto& c : comp) c.assign(g.num_phys(), 0.0);
    }
};

namespace detail {

/// sigma_ij = (G[|Du|^2] + shift) * D_ij u, no admissibility gate.
inline StressField stress_unchecked(const ConstitutiveLaw& law, const StrainField& du,
                                    real shift = 0.0) {
    StressField out(du.grid);
    const std::size_t np = du.grid.num_phys();
    parallel_for(np, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const real g = eval(law, du.mag2[p]) + shift;
            for (int c = 0; c < 6; ++c) out.comp[c][p] = g * du.comp[c][p];
        }
    });
    return out;
}

}  // namespace detail

/// Pointwise viscous stress. Refuses laws that fail the structural audit.
inline StressField stress(const ConstitutiveLaw& law, const StrainField& du) {
    detail::require_admissible(law);
    return detail::stress_unchecked(law, du);
}

/// Divergence of the viscous stress, div(G[|Du|^2] Du), as a spectral
/// vector field: Du is formed physically, sigma pointwise, then
/// (div sigma)_i = sum_j i k_j sigma_ij spectrally, dealiased.
inline SpectralField stress_divergence(const ConstitutiveLaw& law, const SpectralField& u) {
    if (!u.solenoidal)
        throw std::invalid_argument("stress_divergence expects a solenoidal velocity");
    const Grid& g = u.grid;
    const StrainField du = sym_gradient(u);
    const StressField sig = detail::stress_unchecked(law, du);

    // Map (i, j) -> component index in the symmetric storage.
    static constexpr int SYM[3][3] = {{0, 3, 4}, {3, 1, 5}, {4, 5, 2}};
    SpectralField sig_hat(g, 6);
    for (int c = 0; c < 6; ++c) fft::forward(g, sig.comp[c], sig_hat.comp[c]);

    SpectralField out(g, 3);
    detail::for_each_mode(g, [&](int jx, int iy, int iz, std::size_t idx) {
        const real kx = g.deriv_wavenumber(jx);
        const real ky = g.deriv_wavenumber(g.wave_index(iy));
        const real kz = g.deriv_wavenumber(g.wave_index(iz));
        const real k[3] = {kx, ky, kz};
        for (int i = 0; i < 3; ++i) {
            cplx acc(0.0, 0.0);
            for (int j = 0; j < 3; ++j) acc += k[j] * sig_hat.comp[SYM[i][j]][idx];
            out.comp[i][idx] = cplx(0.0, 1.0) * acc;
        }
    });
    return dealias(out);
}

/// Pointwise coercivity margin G[|A|^2]|B|^2 + 2 G'[|A|^2](A:B)^2 - m0|B|^2.
/// Nonnegative for every admissible law and all symmetric A, B.
inline real coercivity_margin(const ConstitutiveLaw& law, const SymMat3& a, const SymMat3& b) {
    const real a2 = frob_norm2(a);
    const real b2 = frob_norm2(b);
    const real ab = frob_inner(a, b);
    return eval(law, a2) * b2 + 2.0 * eval_deriv(law, a2, 1) * ab * ab - law.m0 * b2;
}

/// Strong-monotonicity surplus of the stress map:
///   int (sigma(v) - sigma(w)) : (Dv - Dw) dx  -  m0 ||Dv - Dw||_{L^2}^2,
/// by grid quadrature. Nonnegative up to quadrature error.
inline real monotonicity_gap(const ConstitutiveLaw& law, const SpectralField& v,
                             const SpectralField& w) {
    if (v.grid != w.grid)
        throw std::invalid_argument("monotonicity_gap: fields live on different grids");
    const StrainField dv = sym_gradient(v);
    const StrainField dw = sym_gradient(w);
    const StressField sv = detail::stress_unchecked(law, dv);
    const StressField sw = detail::stress_unchecked(law, dw);

    const std::size_t np = v.grid.num_phys();
    real pairing = 0.0, dist2 = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
        for (int c = 0; c < 6; ++c) {
            const real w6 = c < 3 ? 1.0 : 2.0;  // off-diagonals twice in A:B
            const real dd = dv.comp[c][p] - dw.comp[c][p];
            pairing += w6 * (sv.comp[c][p] - sw.comp[c][p]) * dd;
            dist2 += w6 * dd * dd;
        }
    }
    const real vol = v.grid.cell_volume();
    return (pairing - law.m0 * dist2) * vol;
}

}  // namespace nnf
