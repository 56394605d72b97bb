#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "nnf/constitutive.hpp"
#include "nnf/fields.hpp"

namespace nnf {

/// Outcome of one check of the identity
///   d^l G[|Du|^2] = 2 (G'[|Du|^2] Du : d^l Du) + E_l
/// for a given derivative tuple `dirs` (axis indices, length l <= 3).
///
/// residual_sup  sup-norm over the grid of (left side - right side)
/// residual_rel  residual_sup / sup |left side|
/// bound_ratio   sup |E_l| / (G * M_l) with M_2 = |grad Du|^2 and
///               M_3 = |grad Du|^3 + |grad^2 Du| |grad Du|  (0 for l=1)
struct DecompositionReport {
    int order = 0;
    std::array<int, 3> dirs = {-1, -1, -1};
    real residual_sup = 0.0;
    real residual_rel = 0.0;
    real bound_ratio = 0.0;
    int n = 0;
};

namespace detail {

/// Multi-derivative of a physical scalar field: one forward transform,
/// one multiplication by the product of (i k_d), one inverse transform.
/// The multiplier product is order-independent, so permuted tuples give
/// bit-identical results.
inline rbuf deriv_scalar(const Grid& g, const rbuf& f, const int* dirs, int l) {
    cbuf fh;
    fft::forward(g, f, fh);
    for_each_mode(g, [&](int jx, int iy, int iz, std::size_t idx) {
        const int m[3] = {jx, g.wave_index(iy), g.wave_index(iz)};
        cplx mult(1.0, 0.0);
        for (int d = 0; d < l; ++d) mult *= cplx(0.0, g.deriv_wavenumber(m[dirs[d]]));
        fh[idx] *= mult;
    });
    rbuf out;
    fft::inverse(g, fh, out);
    return out;
}

/// Spectral derivatives of the strain tensor, cached per sorted tuple
/// (mixed partials commute, so the sorted tuple is canonical).
class StrainCalculus {
  public:
    explicit StrainCalculus(const SpectralField& u) : grid_(u.grid), du_(sym_gradient(u)) {
        du_hat_.resize(6);
        for (int c = 0; c < 6; ++c) fft::forward(grid_, du_.comp[c], du_hat_[c]);
    }

    const StrainField& du() const { return du_; }
    const Grid& grid() const { return grid_; }

    /// d_{dirs} Du as six physical components.
    const std::array<rbuf, 6>& deriv(std::vector<int> dirs) {
        std::sort(dirs.begin(), dirs.end());
        auto it = cache_.find(dirs);
        if (it != cache_.end()) return it->second;
        std::array<rbuf, 6> out;
        cbuf work(grid_.num_spec());
        for (int c = 0; c < 6; ++c) {
            work = du_hat_[c];
            for_each_mode(grid_, [&](int jx, int iy, int iz, std::size_t idx) {
                const int m[3] = {jx, grid_.wave_index(iy), grid_.wave_index(iz)};
                cplx mult(1.0, 0.0);
                for (int d : dirs) mult *= cplx(0.0, grid_.deriv_wavenumber(m[d]));
                work[idx] *= mult;
            });
            fft::inverse(grid_, work, out[c]);
        }
        return cache_.emplace(std::move(dirs), std::move(out)).first->second;
    }

  private:
    Grid grid_;
    StrainField du_;
    std::vector<cbuf> du_hat_;
    std::map<std::vector<int>, std::array<rbuf, 6>> cache_;
};

inline void check_efield_args(const SpectralField& u, const std::vector<int>& dirs) {
    if (!u.solenoidal) throw std::invalid_argument("decomposition checks expect solenoidal u");
    if (dirs.empty() || dirs.size() > 3)
        throw std::invalid_argument("decomposition checks support orders 1..3, got l=" +
                                    std::to_string(dirs.size()));
    for (int d : dirs)
        if (d < 0 || d > 2) throw std::invalid_argument("direction indices must be 0, 1 or 2");
}

/// E_2 for the tuple (dirs[0], dirs[1]), fully expanded by the chain rule:
///   E_2 = 2 ( d_{dirs[1]}(G' Du) : d_{dirs[0]} Du )
///       = 4 G'' (Du : d1 Du)(Du : d0 Du) + 2 G' (d1 Du : d0 Du).
inline rbuf e2_field(const ConstitutiveLaw& law, StrainCalculus& calc, int d0, int d1) {
    const auto& du = calc.du();
    const auto& dd0 = calc.deriv({d0});
    const auto& dd1 = calc.deriv({d1});
    const std::size_t np = calc.grid().num_phys();
    rbuf out(np);
    for (std::size_t p = 0; p < np; ++p) {
        const real g1 = eval_deriv(law, du.mag2[p], 1);
        const real g2 = eval_deriv(law, du.mag2[p], 2);
        out[p] = 4.0 * g2 * frob6(du.comp, dd1, p) * frob6(du.comp, dd0, p) +
                 2.0 * g1 * frob6(dd1, dd0, p);
    }
    return out;
}

/// E_3 via the recursion E_3 = 2 ( d_{d2}(G' Du) : d_{d1} d_{d0} Du ) + d_{d2} E_2,
/// with d_{d2}(G' Du) expanded by the chain rule and d_{d2} E_2 taken
/// spectrally on the assembled E_2 field.
inline rbuf e3_field(const ConstitutiveLaw& law, StrainCalculus& calc, int d0, int d1, int d2) {
    const Grid& g = calc.grid();
    const auto& du = calc.du();
    const auto& dd2 = calc.deriv({d2});
    const auto& dd01 = calc.deriv({d0, d1});
    const std::size_t np = g.num_phys();

    rbuf e2 = e2_field(law, calc, d0, d1);
    const rbuf de2 = deriv_scalar(g, e2, &d2, 1);

    rbuf out(np);
    for (std::size_t p = 0; p < np; ++p) {
        const real g1 = eval_deriv(law, du.mag2[p], 1);
        const real g2 = eval_deriv(law, du.mag2[p], 2);
        const real chain = 2.0 * g2 * frob6(du.comp, dd2, p);  // d_{d2} G'
        // (d_{d2}(G' Du))_ij = chain * Du_ij + G' * (d_{d2} Du)_ij
        real term = 0.0;
        for (int c = 0; c < 6; ++c) {
            const real w6 = c < 3 ? 1.0 : 2.0;
            term += w6 * (chain * du.comp[c][p] + g1 * dd2[c][p]) * dd01[c][p];
        }
        out[p] = 2.0 * term + de2[p];
    }
    return out;
}

/// |grad Du|^2 pointwise.
inline rbuf grad_du_mag2(StrainCalculus& calc) {
    const std::size_t np = calc.grid().num_phys();
    rbuf out(np, 0.0);
    for (int a = 0; a < 3; ++a) {
        const auto& d = calc.deriv({a});
        for (std::size_t p = 0; p < np; ++p) out[p] += frob6(d, d, p);
    }
    return out;
}

/// |grad^2 Du|^2 pointwise (all second-derivative tuples, mixed ones twice).
inline rbuf grad2_du_mag2(StrainCalculus& calc) {
    const std::size_t np = calc.grid().num_phys();
    rbuf out(np, 0.0);
    for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) {
            const auto& d = calc.deriv({a, b});
            const real mult = a == b ? 1.0 : 2.0;
            for (std::size_t p = 0; p < np; ++p) out[p] += mult * frob6(d, d, p);
        }
    return out;
}

/// Bound denominator M_l and the resulting sup ratio for one E_l field.
inline real bound_ratio_for(const ConstitutiveLaw& law, StrainCalculus& calc, const rbuf& el,
                            int l, bool* any_included = nullptr) {
    const std::size_t np = calc.grid().num_phys();
    const rbuf g1 = grad_du_mag2(calc);
    rbuf ml(np);
    if (l == 2) {
        for (std::size_t p = 0; p < np; ++p) ml[p] = g1[p];
    } else {
        const rbuf g2 = grad2_du_mag2(calc);
        for (std::size_t p = 0; p < np; ++p) {
            const real a = std::sqrt(g1[p]);
            ml[p] = a * a * a + std::sqrt(g2[p]) * a;
        }
    }
    const real ml_max = max_abs(ml);
    const real cut = 1e-12 * ml_max;
    real ratio = 0.0;
    bool included = false;
    for (std::size_t p = 0; p < np; ++p) {
        if (ml[p] < cut || ml[p] == 0.0) continue;
        included = true;
        const real denom = eval(law, calc.du().mag2[p]) * ml[p];
        ratio = std::max(ratio, std::abs(el[p]) / denom);
    }
    if (any_included) *any_included = included;
    return ratio;
}

}  // namespace detail

/// The remainder field E_l of the decomposition, built by the recursion
/// E_1 = 0,  E_l = 2 ( d(G' Du) : d^{l-1} Du ) + d E_{l-1}.
/// Callers should keep u band-limited (k_max <= n/6) so third derivatives
/// of the composites stay resolvable on the grid.
inline rbuf e_field(const ConstitutiveLaw& law, const SpectralField& u,
                    const std::vector<int>& dirs) {
    detail::check_efield_args(u, dirs);
    detail::StrainCalculus calc(u);
    switch (dirs.size()) {
        case 1: return rbuf(u.grid.num_phys(), 0.0);
        case 2: return detail::e2_field(law, calc, dirs[0], dirs[1]);
        default: return detail::e3_field(law, calc, dirs[0], dirs[1], dirs[2]);
    }
}

/// Verifies the decomposition for one derivative tuple. The left side is
/// the spectral multi-derivative of the composite scalar G[|Du|^2]; the
/// right side is 2 (G' Du : d^l Du) + E_l. The identity is exact in the
/// continuum, so the residual isolates aliasing and roundoff.
inline DecompositionReport check_decomposition(const ConstitutiveLaw& law, const SpectralField& u,
                                               const std::vector<int>& dirs) {
    detail::check_efield_args(u, dirs);
    const Grid& g = u.grid;
    const int l = static_cast<int>(dirs.size());
    detail::StrainCalculus calc(u);
    const auto& du = calc.du();
    const std::size_t np = g.num_phys();

    rbuf gfield(np);
    for (std::size_t p = 0; p < np; ++p) gfield[p] = eval(law, du.mag2[p]);
    const rbuf lhs = detail::deriv_scalar(g, gfield, dirs.data(), l);

    rbuf el;
    if (l == 1)
        el.assign(np, 0.0);
    else if (l == 2)
        el = detail::e2_field(law, calc, dirs[0], dirs[1]);
    else
        el = detail::e3_field(law, calc, dirs[0], dirs[1], dirs[2]);

    const auto& dl = calc.deriv(dirs);
    real sup_res = 0.0, sup_lhs = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
        const real g1 = eval_deriv(law, du.mag2[p], 1);
        const real rhs = 2.0 * g1 * detail::frob6(du.comp, dl, p) + el[p];
        sup_res = std::max(sup_res, std::abs(lhs[p] - rhs));
        sup_lhs = std::max(sup_lhs, std::abs(lhs[p]));
    }

    DecompositionReport rep;
    rep.order = l;
    for (int d = 0; d < l; ++d) rep.dirs[d] = dirs[d];
    rep.n = g.n;
    rep.residual_sup = sup_res;
    rep.residual_rel = sup_lhs > 0.0 ? sup_res / sup_lhs : (sup_res == 0.0 ? 0.0 : INFINITY);
    if (l >= 2) rep.bound_ratio = detail::bound_ratio_for(law, calc, el, l);
    return rep;
}

/// Empirical constant in |E_l| <= C G M_l: the sup over grid points and
/// over all sorted direction tuples of |E_l| / (G M_l). Points where M_l
/// is below 1e-12 of its max are excluded (both sides vanish there).
inline real bound_ratio_report(const ConstitutiveLaw& law, const SpectralField& u, int l) {
    if (l < 2 || l > 3) throw std::invalid_argument("bound_ratio_report supports l in {2, 3}");
    if (!u.solenoidal) throw std::invalid_argument("bound_ratio_report expects solenoidal u");
    detail::StrainCalculus calc(u);
    real ratio = 0.0;
    bool any = false;
    for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) {
            if (l == 2) {
                bool inc = false;
                const rbuf el = detail::e2_field(law, calc, a, b);
                ratio = std::max(ratio, detail::bound_ratio_for(law, calc, el, 2, &inc));
                any = any || inc;
            } else {
                for (int c = b; c < 3; ++c) {
                    bool inc = false;
                    const rbuf el = detail::e3_field(law, calc, a, b, c);
                    ratio = std::max(ratio, detail::bound_ratio_for(law, calc, el, 3, &inc));
                    any = any || inc;
                }
            }
        }
    if (!any)
        throw std::domain_error("bound_ratio_report: all grid points excluded (degenerate field)");
    return ratio;
}

}  // namespace nnf
