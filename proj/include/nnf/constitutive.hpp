#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "nnf/common.hpp"

namespace nnf {

/// Scalar viscosity function G acting on s = |Du|^2. Built-in families:
///
///   newtonian     G[s] = m0
///   power_a       G[s] = (m0^{2/(q-2)} + s)^{(q-2)/2},          q > 2
///   power_b       G[s] = m0 + (sigma + s)^{(q-2)/2},            q > 1, sigma > 0
///
/// plus user-defined laws given by evaluator callbacks for G and its first
/// three derivatives. Admissible laws satisfy G >= m0 and G + 2 G' s >= m0
/// for all s >= 0; verify_structural() audits this by sampling.
enum class LawKind { newtonian, power_a, power_b, user_defined };

struct ConstitutiveLaw {
    LawKind kind = LawKind::newtonian;
    real m0 = 1.0;
    real q = 0.0;          // power_a / power_b exponent
    real sigma_reg = 0.0;  // power_b regularization
    std::string label = "newtonian";

    // Derived constants for the power families: G = offset + (base + s)^expo.
    real base = 0.0;
    real expo = 0.0;
    real offset = 0.0;

    // user_defined evaluators: G, G', G'', G'''.
    std::array<std::function<real(real)>, 4> user{};

    static ConstitutiveLaw newtonian(real m0) {
        require_m0(m0);
        ConstitutiveLaw law;
        law.kind = LawKind::newtonian;
        law.m0 = m0;
        law.label = "newtonian";
        return law;
    }

    static ConstitutiveLaw power_a(real q, real m0) {
        require_m0(m0);
        if (!(q > 2.0))
            throw std::invalid_argument("power_a requires q > 2, got q=" + std::to_string(q));
        ConstitutiveLaw law;
        law.kind = LawKind::power_a;
        law.m0 = m0;
        law.q = q;
        law.base = std::pow(m0, 2.0 / (q - 2.0));
        law.expo = 0.5 * (q - 2.0);
        law.offset = 0.0;
        law.label = "power_a(q=" + std::to_string(q) + ")";
        return law;
    }

    static ConstitutiveLaw power_b(real q, real m0, real sigma_reg) {
        require_m0(m0);
        if (!(q > 1.0))
            throw std::invalid_argument("power_b requires q > 1, got q=" + std::to_string(q));
        if (!(sigma_reg > 0.0))
            throw std::invalid_argument("power_b requires sigma_reg > 0");
        ConstitutiveLaw law;
        law.kind = LawKind::power_b;
        law.m0 = m0;
        law.q = q;
        law.sigma_reg = sigma_reg;
        law.base = sigma_reg;
        law.expo = 0.5 * (q - 2.0);
        law.offset = m0;
        law.label = "power_b(q=" + std::to_string(q) + ")";
        return law;
    }

    static ConstitutiveLaw user_defined(std::string label, real m0,
                                        std::function<real(real)> g,
                                        std::function<real(real)> g1,
                                        std::function<real(real)> g2,
                                        std::function<real(real)> g3) {
        require_m0(m0);
        ConstitutiveLaw law;
        law.kind = LawKind::user_defined;
        law.m0 = m0;
        law.label = std::move(label);
        law.user = {std::move(g), std::move(g1), std::move(g2), std::move(g3)};
        return law;
    }

  private:
    static void require_m0(real m0) {
        if (!(m0 > 0.0)) throw std::invalid_argument("constitutive law requires m0 > 0");
    }
};

namespace detail {

// (base + s)^expo with fast paths for the exponents the built-ins hit.
inline real pow_shifted(real base, real expo, real s) {
    const real x = base + s;
    if (expo == 1.0) return x;
    if (expo == 0.5) return std::sqrt(x);
    if (expo == 2.0) return x * x;
    if (expo == -0.5) return 1.0 / std::sqrt(x);
    return std::pow(x, expo);
}

inline void require_nonneg(real s) {
    if (!(s >= 0.0))
        throw std::domain_error("constitutive law evaluated at negative s=" + std::to_string(s));
}

}  // namespace detail

/// G[s].
inline real eval(const ConstitutiveLaw& law, real s) {
    detail::require_nonneg(s);
    switch (law.kind) {
        case LawKind::newtonian: return law.m0;
        case LawKind::power_a:
        case LawKind::power_b:
            return law.offset + detail::pow_shifted(law.base, law.expo, s);
        case LawKind::user_defined: return law.user[0](s);
    }
    return 0.0;  // unreachable
}

/// k-th derivative of G at s, k in 1..3.
inline real eval_deriv(const ConstitutiveLaw& law, real s, int k) {
    detail::require_nonneg(s);
    if (k < 1 || k > 3)
        throw std::invalid_argument("eval_deriv supports orders 1..3, got k=" + std::to_string(k));
    switch (law.kind) {
        case LawKind::newtonian: return 0.0;
        case LawKind::power_a:
        case LawKind::power_b: {
            real c = law.expo;
            real e = law.expo - 1.0;
            for (int j = 1; j < k; ++j) {
                c *= e;
                e -= 1.0;
            }
            if (c == 0.0) return 0.0;  // integer exponent hit zero (e.g. q=4, k>=2)
            return c * detail::pow_shifted(law.base, e, s);
        }
        case LawKind::user_defined: return law.user[k](s);
    }
    return 0.0;  // unreachable
}

namespace detail {

// Adaptive Simpson with absolute/relative tolerance, used only for
// user-defined laws (built-ins have closed-form antiderivatives).
inline real adaptive_simpson(const std::function<real(real)>& f, real a, real b, real fa,
                             real fm, real fb, real whole, real tol, int depth) {
    if (depth > 60) throw std::runtime_error("eval_antideriv: quadrature did not converge");
    const real m = 0.5 * (a + b);
    const real lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const real flm = f(lm), frm = f(rm);
    const real left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const real right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const real delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

}  // namespace detail

/// Antiderivative Gtilde[s] = int_0^s G[tau] dtau, Gtilde[0] = 0.
inline real eval_antideriv(const ConstitutiveLaw& law, real s) {
    detail::require_nonneg(s);
    if (s == 0.0) return 0.0;
    switch (law.kind) {
        case LawKind::newtonian: return law.m0 * s;
        case LawKind::power_a:
        case LawKind::power_b: {
            const real e1 = law.expo + 1.0;
            return law.offset * s +
                   (detail::pow_shifted(law.base, e1, s) - std::pow(law.base, e1)) / e1;
        }
        case LawKind::user_defined: {
            const auto& f = law.user[0];
            const real fa = f(0.0), fb = f(s), fm = f(0.5 * s);
            const real whole = s / 6.0 * (fa + 4.0 * fm + fb);
            const real tol = 1e-10 * std::max(std::abs(whole), real(1e-300));
            return detail::adaptive_simpson(f, 0.0, s, fa, fm, fb, whole, tol, 0);
        }
    }
    return 0.0;  // unreachable
}

/// Result of the sampling audit of the structural conditions.
/// ratio_bounds[k-1][alpha] is the empirical supremum of
/// |G^(k)[s] s^alpha| / |G^(k-1)[s]| over the sample set.
struct StructuralReport {
    bool passed = false;
    real min_g = std::numeric_limits<real>::infinity();
    real min_coercive = std::numeric_limits<real>::infinity();
    real s_at_min_coercive = 0.0;
    std::array<std::array<real, 2>, 3> ratio_bounds{};
    long samples_used = 0;
    real s_max = 0.0;
};

/// Samples G over [0, s_max] and audits the structural conditions
/// G >= m0 and G + 2 G' s >= m0, plus finiteness of the derivative-ratio
/// bounds. Violations are reported, never thrown. The sample set is a
/// log-spaced grid (with s=0 included exactly) plus n_samples uniform
/// pseudo-random points from a fixed seed, so results are reproducible.
inline StructuralReport verify_structural(const ConstitutiveLaw& law, long n_samples,
                                          real s_max) {
    if (n_samples < 1000)
        throw std::invalid_argument("verify_structural requires n_samples >= 1000");
    if (!(s_max > 0.0)) throw std::invalid_argument("verify_structural requires s_max > 0");

    StructuralReport rep;
    rep.s_max = s_max;

    auto visit = [&](real s) {
        const real g = eval(law, s);
        const real g1 = eval_deriv(law, s, 1);
        const real coercive = g + 2.0 * g1 * s;
        if (g < rep.min_g) rep.min_g = g;
        if (coercive < rep.min_coercive) {
            rep.min_coercive = coercive;
            rep.s_at_min_coercive = s;
        }
        real dk[4] = {g, g1, eval_deriv(law, s, 2), eval_deriv(law, s, 3)};
        for (int k = 1; k <= 3; ++k) {
            for (int alpha = 0; alpha <= 1; ++alpha) {
                const real num = std::abs(dk[k]) * (alpha == 0 ? 1.0 : std::abs(s));
                real ratio;
                if (num == 0.0)
                    ratio = 0.0;
                else if (dk[k - 1] == 0.0)
                    ratio = std::numeric_limits<real>::infinity();
                else
                    ratio = num / std::abs(dk[k - 1]);
                auto& bound = rep.ratio_bounds[k - 1][alpha];
                if (ratio > bound) bound = ratio;
            }
        }
        ++rep.samples_used;
    };

    visit(0.0);
    // Log-spaced grid over 12 decades up to s_max.
    const real s_lo = s_max * 1e-12;
    for (long i = 0; i < n_samples; ++i) {
        const real t = n_samples == 1 ? 1.0 : double(i) / double(n_samples - 1);
        visit(s_lo * std::pow(s_max / s_lo, t));
    }
    std::mt19937_64 rng(0x6e6e665f6c617773ull);
    std::uniform_real_distribution<real> uni(0.0, s_max);
    for (long i = 0; i < n_samples; ++i) visit(uni(rng));

    constexpr real tol = 1e-12;
    bool ratios_finite = true;
    for (const auto& row : rep.ratio_bounds)
        for (real b : row)
            if (!std::isfinite(b)) ratios_finite = false;
    rep.passed = rep.min_g >= law.m0 * (1.0 - tol) &&
                 rep.min_coercive >= law.m0 * (1.0 - tol) && ratios_finite;
    return rep;
}

namespace detail {

/// Gate used by operations that refuse inadmissible laws. Audit size is
/// fixed so the gate is deterministic and cheap relative to field work.
inline void require_admissible(const ConstitutiveLaw& law) {
    const StructuralReport rep = verify_structural(law, 2000, 1e6);
    if (!rep.passed)
        throw std::invalid_argument(
            "law '" + law.label + "' fails the structural audit: min G = " +
            std::to_string(rep.min_g) + ", min (G + 2 G' s) = " +
            std::to_string(rep.min_coercive) + " at s = " +
            std::to_string(rep.s_at_min_coercive));
}

}  // namespace detail

}  // namespace nnf
