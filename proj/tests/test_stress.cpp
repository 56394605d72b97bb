#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "nnf/stress.hpp"
#include "test_support.hpp"

using namespace nnf;
using Catch::Approx;

namespace {

ConstitutiveLaw reciprocal_law() {
    return ConstitutiveLaw::user_defined(
        "reciprocal", 1.0, [](double s) { return 1.0 / (1.0 + s); },
        [](double s) { double d = 1.0 + s; return -1.0 / (d * d); },
        [](double s) { double d = 1.0 + s; return 2.0 / (d * d * d); },
        [](double s) { double d = 1.0 + s; return -6.0 / (d * d * d * d); });
}

std::vector<ConstitutiveLaw> law_set() {
    return {ConstitutiveLaw::newtonian(1.0),    ConstitutiveLaw::power_a(2.5, 1.0),
            ConstitutiveLaw::power_a(3.0, 1.0), ConstitutiveLaw::power_a(4.0, 1.0),
            ConstitutiveLaw::power_b(1.5, 1.0, 1.0), ConstitutiveLaw::power_b(3.0, 1.0, 1.0)};
}

SymMat3 random_sym(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(-10.0, 10.0);
    SymMat3 m;
    for (auto& v : m.v) v = uni(rng);
    return m;
}

}  // namespace

TEST_CASE("stress is G(|Du|^2) Du pointwise") {
    const Grid g(16);
    const SpectralField u = random_solenoidal(g, 8, 4, 10.0);
    const StrainField du = sym_gradient(u);

    const StressField newt = stress(ConstitutiveLaw::newtonian(2.0), du);
    for (int c = 0; c < 6; ++c)
        for (std::size_t p = 0; p < g.num_phys(); ++p)
            CHECK(newt.comp[c][p] == 2.0 * du.comp[c][p]);

    StrainField zero(g);
    zero.refresh_mag2();
    const StressField sz = stress(ConstitutiveLaw::power_a(3.0, 1.0), zero);
    for (int c = 0; c < 6; ++c) CHECK(max_abs(sz.comp[c]) == 0.0);
}

TEST_CASE("stress on a hand-built strain value") {
    // Setting D_11 = D_22 = 1 gives |Du|^2 = 2, so power_a(q=4, m0=1) has
    // G = 3 there and sigma_11 = 3.
    const Grid g(8);
    StrainField du(g);
    for (auto& v : du.comp[0]) v = 1.0;
    for (auto& v : du.comp[1]) v = 1.0;
    du.refresh_mag2();
    CHECK(du.mag2[0] == 2.0);
    const StressField sig = stress(ConstitutiveLaw::power_a(4.0, 1.0), du);
    CHECK(sig.comp[0][0] == Approx(3.0));
}

TEST_CASE("stress refuses laws that fail the structural audit") {
    const Grid g(8);
    StrainField du(g);
    du.refresh_mag2();
    CHECK_THROWS_AS(stress(reciprocal_law(), du), std::invalid_argument);
}

TEST_CASE("stress magnitude dominates m0 |Du| pointwise") {
    const Grid g(16);
    const SpectralField u = random_solenoidal(g, 10, 4, 20.0);
    const StrainField du = sym_gradient(u);
    const auto law = ConstitutiveLaw::power_b(1.5, 1.0, 1.0);  // shear thinning
    const StressField sig = stress(law, du);
    for (std::size_t p = 0; p < g.num_phys(); p += 7) {
        double s2 = 0.0, d2 = 0.0;
        for (int c = 0; c < 6; ++c) {
            const double w = c < 3 ? 1.0 : 2.0;
            s2 += w * sig.comp[c][p] * sig.comp[c][p];
            d2 += w * du.comp[c][p] * du.comp[c][p];
        }
        CHECK(std::sqrt(s2) >= law.m0 * std::sqrt(d2) * (1.0 - 1e-12));
    }
}

TEST_CASE("stress_divergence reduces to (m0/2) laplacian for Newtonian") {
    const Grid g(32);
    const double m0 = 2.0;
    const SpectralField u = random_solenoidal(g, 17, 4, 5.0);
    const SpectralField div = stress_divergence(ConstitutiveLaw::newtonian(m0), u);
    double scale = 0.0, err = 0.0;
    detail::for_each_mode(g, [&](int jx, int iy, int iz, std::size_t idx) {
        const double kx = g.wavenumber(jx);
        const double ky = g.wavenumber(g.wave_index(iy));
        const double kz = g.wavenumber(g.wave_index(iz));
        const double k2 = kx * kx + ky * ky + kz * kz;
        for (int c = 0; c < 3; ++c) {
            const cplx expect = -0.5 * m0 * k2 * u.comp[c][idx];
            scale = std::max(scale, std::abs(expect));
            err = std::max(err, std::abs(div.comp[c][idx] - expect));
        }
    });
    CHECK(err <= 1e-12 * scale);
}

TEST_CASE("stress_divergence of the zero field is zero") {
    const Grid g(16);
    SpectralField u(g, 3);
    u.solenoidal = true;
    const SpectralField div = stress_divergence(ConstitutiveLaw::power_a(3.0, 1.0), u);
    for (int c = 0; c < 3; ++c)
        for (const cplx& z : div.comp[c]) CHECK(std::abs(z) == 0.0);
}

TEST_CASE("stress_divergence requires a solenoidal input") {
    const Grid g(16);
    SpectralField u(g, 3);  // not flagged
    CHECK_THROWS_AS(stress_divergence(ConstitutiveLaw::newtonian(1.0), u),
                    std::invalid_argument);
}

TEST_CASE("stress_divergence matches a finite-difference oracle") {
    // Single-mode shear u = (sin y, 0, 0) under power_a(q=4, m0=1). The
    // oracle evaluates div(G Du) entirely by sixth-order finite differences
    // on a twice-refined grid; values are compared at the coarse points.
    const Grid g(32);
    PhysField u(g, 3);
    for (int iz = 0; iz < g.n; ++iz)
        for (int iy = 0; iy < g.n; ++iy)
            for (int ix = 0; ix < g.n; ++ix)
                u.comp[0][g.phys_index(ix, iy, iz)] = std::sin(g.x(iy));
    const auto law = ConstitutiveLaw::power_a(4.0, 1.0);
    const PhysField div = to_physical(stress_divergence(law, to_spectral(u, true)));

    testsupport::FdGrid fine{2 * g.n, g.box_length};
    const auto oracle = testsupport::fd_stress_divergence(
        fine,
        {[](double, double y, double) { return std::sin(y); },
         [](double, double, double) { return 0.0; }, [](double, double, double) { return 0.0; }},
        law);

    double scale = 0.0;
    for (int c = 0; c < 3; ++c) scale = std::max(scale, max_abs(div.comp[c]));
    double err = 0.0;
    for (int iz = 0; iz < g.n; ++iz)
        for (int iy = 0; iy < g.n; ++iy)
            for (int ix = 0; ix < g.n; ++ix)
                for (int c = 0; c < 3; ++c)
                    err = std::max(err, std::abs(div.comp[c][g.phys_index(ix, iy, iz)] -
                                                 oracle[c][fine.idx(2 * ix, 2 * iy, 2 * iz)]));
    CHECK(err <= 1e-4 * scale);
}

TEST_CASE("coercivity margin closed-form examples") {
    std::mt19937_64 rng(5);
    const auto newt = ConstitutiveLaw::newtonian(1.0);
    for (int i = 0; i < 100; ++i) {
        const SymMat3 a = random_sym(rng), b = random_sym(rng);
        CHECK(coercivity_margin(newt, a, b) == Approx(0.0).margin(1e-12 * frob_norm2(b)));
        CHECK(coercivity_margin(ConstitutiveLaw::power_a(3.0, 1.0), a, SymMat3{}) == 0.0);
    }
    const SymMat3 a = SymMat3::diagonal(1.0, 0.0, 0.0);
    CHECK(coercivity_margin(ConstitutiveLaw::power_a(4.0, 1.0), a, a) == Approx(3.0));
}

TEST_CASE("coercivity margin is nonnegative for admissible laws") {
    std::mt19937_64 rng(123);
    for (const auto& law : law_set()) {
        double worst = 0.0;
        for (int i = 0; i < 10000; ++i) {
            const SymMat3 a = random_sym(rng), b = random_sym(rng);
            const double margin = coercivity_margin(law, a, b);
            worst = std::min(worst, margin + 1e-12 * law.m0 * frob_norm2(b));
        }
        INFO(law.label);
        CHECK(worst >= 0.0);
    }
}

TEST_CASE("monotonicity gap basics") {
    const Grid g(16);
    const SpectralField v = random_solenoidal(g, 31, 5, 8.0);
    const SpectralField w = random_solenoidal(g, 32, 5, 6.0);

    CHECK(monotonicity_gap(ConstitutiveLaw::power_a(3.0, 1.0), v, v) == 0.0);

    // Newtonian: the integrand is exactly m0 |Dv - Dw|^2, so the gap is
    // pure roundoff.
    StrainField dv = sym_gradient(v), dw = sym_gradient(w);
    rbuf diff2(g.num_phys(), 0.0);
    for (std::size_t p = 0; p < g.num_phys(); ++p)
        for (int c = 0; c < 6; ++c) {
            const double wc = c < 3 ? 1.0 : 2.0;
            const double d = dv.comp[c][p] - dw.comp[c][p];
            diff2[p] += wc * d * d;
        }
    const double dist2 = integrate(g, diff2);
    CHECK(std::abs(monotonicity_gap(ConstitutiveLaw::newtonian(2.0), v, w)) <= 1e-12 * dist2);

    const Grid g2(24);
    CHECK_THROWS_AS(
        monotonicity_gap(ConstitutiveLaw::newtonian(1.0), v, random_solenoidal(g2, 1, 5, 1.0)),
        std::invalid_argument);
}

TEST_CASE("monotonicity gap is nonnegative across random pairs") {
    const Grid g(16);
    const auto law = ConstitutiveLaw::power_a(4.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const SpectralField v = random_solenoidal(g, 1000 + i, 5, 1.0 + (i % 5));
        const SpectralField w = random_solenoidal(g, 2000 + i, 5, 1.0 + ((i + 2) % 5));

        // Brute-force quadrature oracle: recompute both integrals with an
        // independent pointwise stress evaluation.
        const StrainField dv = sym_gradient(v), dw = sym_gradient(w);
        double pairing = 0.0, dist2 = 0.0;
        for (std::size_t p = 0; p < g.num_phys(); ++p) {
            const double gv = 1.0 + dv.mag2[p];  // power_a(q=4, m0=1) closed form
            const double gw = 1.0 + dw.mag2[p];
            for (int c = 0; c < 6; ++c) {
                const double wc = c < 3 ? 1.0 : 2.0;
                const double d = dv.comp[c][p] - dw.comp[c][p];
                pairing += wc * (gv * dv.comp[c][p] - gw * dw.comp[c][p]) * d;
                dist2 += wc * d * d;
            }
        }
        const double oracle_gap = (pairing - law.m0 * dist2) * g.cell_volume();
        const double gap = monotonicity_gap(law, v, w);
        const double dist2_int = dist2 * g.cell_volume();

        CHECK(gap >= -1e-10 * dist2_int);
        CHECK(oracle_gap >= -1e-10 * dist2_int);
        CHECK(gap == Approx(oracle_gap).epsilon(1e-10));
    }
}

TEST_CASE("dissipation pairing dominates m0 ||Du||^2") {
    const Grid g(16);
    for (const auto& law : law_set()) {
        const SpectralField u = random_solenoidal(g, 55, 5, 10.0);
        const StrainField du = sym_gradient(u);
        const StressField sig = detail::stress_unchecked(law, du);
        double pairing = 0.0, norm2 = 0.0;
        for (std::size_t p = 0; p < g.num_phys(); ++p)
            for (int c = 0; c < 6; ++c) {
                const double wc = c < 3 ? 1.0 : 2.0;
                pairing += wc * sig.comp[c][p] * du.comp[c][p];
                norm2 += wc * du.comp[c][p] * du.comp[c][p];
            }
        INFO(law.label);
        CHECK(pairing * g.cell_volume() >=
              law.m0 * norm2 * g.cell_volume() * (1.0 - 1e-12));
    }
}
