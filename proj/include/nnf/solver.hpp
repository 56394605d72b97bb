#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "nnf/constitutive.hpp"
#include "nnf/diagnostics.hpp"
#include "nnf/fields.hpp"
#include "nnf/stress.hpp"

namespace nnf {

struct SimState {
    SpectralField u;
    double t = 0.0;
    std::uint64_t step = 0;
};

/// Exactly one of dt_fixed / c_cfl must be positive.
struct TimePolicy {
    double dt_fixed = 0.0;
    double c_cfl = 0.0;

    static TimePolicy fixed(double dt) {
        if (!(dt > 0.0)) throw std::invalid_argument("TimePolicy: dt must be > 0");
        return TimePolicy{dt, 0.0};
    }
    static TimePolicy cfl(double c) {
        if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("TimePolicy: c_cfl must be in (0,1]");
        return TimePolicy{0.0, c};
    }
    bool is_fixed() const { return dt_fixed > 0.0; }
};

struct InitSpec {
    enum class Type { taylor_green, random_solenoidal, checkpoint };
    Type type = Type::taylor_green;
    std::uint64_t seed = 0;
    int k_max = 2;
    double target_h3 = 1.0;
    std::string path;
};

struct OutputSpec {
    std::string dir;       // empty: no files written
    int diag_every = 1;    // steps between diagnostics records
    int ckpt_every = 0;    // steps between checkpoints; 0 disables
    int l_max = 3;         // highest Sobolev order recorded
};

struct SimConfig {
    int n = 32;
    double box_length = 2.0 * pi;
    ConstitutiveLaw law = ConstitutiveLaw::newtonian(1.0);
    TimePolicy time = TimePolicy::fixed(1e-3);
    double t_end = 1.0;
    InitSpec init;
    OutputSpec output;
};

/// Thrown when a step produces non-finite coefficients. Carries the last
/// valid state and (when thrown out of run()) the diagnostics recorded up
/// to the failure time.
class BlowUpError : public std::runtime_error {
  public:
    BlowUpError(const std::string& msg, SimState last)
        : std::runtime_error(msg), last_state(std::move(last)) {}
    SimState last_state;
    DiagnosticsSeries series;
};

/// Explicit right side with the stiff linear part removed:
///   P[ div((G[|Du|^2] - m0) Du) - (u . grad) u ],  dealiased.
/// The pressure gradient is eliminated by the Leray projector.
inline SpectralField rhs_explicit(const SimState& state, const ConstitutiveLaw& law) {
    const SpectralField& u = state.u;
    const Grid& g = u.grid;
    const std::size_t np = g.num_phys();

    // Velocity and full gradient in physical space; Du by symmetrization.
    const PhysField uphys = to_physical(u);
    const PhysField grad = gradient(u);  // comp[3i+j] = d u_i / d x_j
    StrainField du(g);
    static constexpr int I[6] = {0, 1, 2, 0, 0, 1};
    static constexpr int J[6] = {0, 1, 2, 1, 2, 2};
    for (int c = 0; c < 6; ++c) {
        const int gi = 3 * I[c] + J[c], gj = 3 * J[c] + I[c];
        for (std::size_t p = 0; p < np; ++p)
            du.comp[c][p] = 0.5 * (grad.comp[gi][p] + grad.comp[gj][p]);
    }
    du.refresh_mag2();

    // Viscous remainder (G - m0) Du, transformed and divergenced.
    const StressField rem = detail::stress_unchecked(law, du, -law.m0);
    SpectralField rem_hat(g, 6);
    for (int c = 0; c < 6; ++c) fft::forward(g, rem.comp[c], rem_hat.comp[c]);

    // Convection (u . grad) u pointwise.
    PhysField conv(g, 3);
    detail::parallel_for(np, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p)
            for (int i = 0; i < 3; ++i)
                conv.comp[i][p] = uphys.comp[0][p] * grad.comp[3 * i + 0][p] +
                                  uphys.comp[1][p] * grad.comp[3 * i + 1][p] +
                                  uphys.comp[2][p] * grad.comp[3 * i + 2][p];
    });
    SpectralField conv_hat = to_spectral(conv);

    static constexpr int SYM[3][3] = {{0, 3, 4}, {3, 1, 5}, {4, 5, 2}};
    SpectralField out(g, 3);
    detail::for_each_mode(g, [&](int jx, int iy, int iz, std::size_t idx) {
        const real k[3] = {g.deriv_wavenumber(jx), g.deriv_wavenumber(g.wave_index(iy)),
                           g.deriv_wavenumber(g.wave_index(iz))};
        for (int i = 0; i < 3; ++i) {
            cplx divsig(0.0, 0.0);
            for (int j = 0; j < 3; ++j) divsig += k[j] * rem_hat.comp[SYM[i][j]][idx];
            out.comp[i][idx] = cplx(0.0, 1.0) * divsig - conv_hat.comp[i][idx];
        }
    });
    return leray_project(dealias(out));
}

namespace detail {

/// Multiplies by the viscous semigroup e^{-(m0/2)|k|^2 tau}. tau >= 0
/// always (the stepper is arranged so no growth factors appear).
inline void apply_decay(SpectralField& f, real m0, real tau) {
    const Grid& g = f.grid;
    const real nu = 0.5 * m0;
    for_each_mode(g, [&](int jx, int iy, int iz, std::size_t idx) {
        const real kx = g.wavenumber(jx);
        const real ky = g.wavenumber(g.wave_index(iy));
        const real kz = g.wavenumber(g.wave_index(iz));
        const real e = std::exp(-nu * (kx * kx + ky * ky + kz * kz) * tau);
        for (int c = 0; c < f.ncomp(); ++c) f.comp[c][idx] *= e;
    });
}

inline void check_finite(const SpectralField& f, const SimState& before) {
    for (const auto& c : f.comp)
        for (const cplx& v : c)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw BlowUpError("solution blew up at t=" + std::to_string(before.t) +
                                      " (step " + std::to_string(before.step) + ")",
                                  before);
}

/// One step of Kutta's third-order scheme on the integrating-factor
/// transformed variable. With E(tau) = e^{-(m0/2)|k|^2 tau} and
/// K_i = N(y_i):
///   y2 = E(dt/2) (u + dt/2 K1)
///   y3 = E(dt) u + dt (-E(dt) K1 + 2 E(dt/2) K2)
///   u' = E(dt) u + dt (1/6 E(dt) K1 + 2/3 E(dt/2) K2 + 1/6 K3)
/// Every propagator moves forward in time, so the factors are decays and
/// the scheme is safe for arbitrarily large dt * |k|^2.
inline SimState rk3_step(const SimState& state, const ConstitutiveLaw& law, real dt) {
    const Grid& g = state.u.grid;
    const real m0 = law.m0;

    auto lincomb = [&](const SpectralField& a, real ca, const SpectralField& b, real cb,
                       const SpectralField* c, real cc) {
        SpectralField out(g, 3);
        for (int i = 0; i < 3; ++i)
            for (std::size_t p = 0; p < g.num_spec(); ++p) {
                cplx v = ca * a.comp[i][p] + cb * b.comp[i][p];
                if (c) v += cc * c->comp[i][p];
                out.comp[i][p] = v;
            }
        out.solenoidal = true;
        return out;
    };

    const SpectralField k1 = rhs_explicit(state, law);

    SpectralField y2 = lincomb(state.u, 1.0, k1, 0.5 * dt, nullptr, 0.0);
    apply_decay(y2, m0, 0.5 * dt);
    y2 = leray_project(dealias(y2));
    const SpectralField k2 = rhs_explicit({y2, state.t + 0.5 * dt, state.step}, law);

    SpectralField uk1 = lincomb(state.u, 1.0, k1, -dt, nullptr, 0.0);
    apply_decay(uk1, m0, dt);  // E(dt) (u - dt K1)
    SpectralField k2half = k2;
    apply_decay(k2half, m0, 0.5 * dt);  // E(dt/2) K2
    SpectralField y3 = lincomb(uk1, 1.0, k2half, 2.0 * dt, nullptr, 0.0);
    y3 = leray_project(dealias(y3));
    const SpectralField k3 = rhs_explicit({y3, state.t + dt, state.step}, law);

    SpectralField uk = lincomb(state.u, 1.0, k1, dt / 6.0, nullptr, 0.0);
    apply_decay(uk, m0, dt);  // E(dt) (u + dt/6 K1)
    SpectralField unew = lincomb(uk, 1.0, k2half, 2.0 * dt / 3.0, &k3, dt / 6.0);
    unew = leray_project(dealias(unew));

    check_finite(unew, state);
    return SimState{std::move(unew), state.t + dt, state.step + 1};
}

struct EnergyBudget {
    real e = 0.0;     // ||u||_{L^2}^2
    real d = 0.0;     // dissipation integral
    real ddot = 0.0;  // d/dt of the dissipation integral along the flow
};

/// Energy, dissipation and its time derivative. ddot uses the full right
/// side u_t = N(u) - (m0/2) |k|^2 u and
///   dD/dt = 2 int (G'[s] s + G[s]) (Du : D u_t) dx,   s = |Du|^2.
inline EnergyBudget energy_budget(const SimState& state, const ConstitutiveLaw& law) {
    const Grid& g = state.u.grid;
    EnergyBudget out;
    const real l2 = sobolev_norm(state.u, 0);
    out.e = l2 * l2;

    SpectralField udot = rhs_explicit(state, law);
    const real nu = 0.5 * law.m0;
    for_each_mode(g, [&](int jx, int iy, int iz, std::size_t idx) {
        const real kx = g.wavenumber(jx);
        const real ky = g.wavenumber(g.wave_index(iy));
        const real kz = g.wavenumber(g.wave_index(iz));
        const real lin = -nu * (kx * kx + ky * ky + kz * kz);
        for (int c = 0; c < 3; ++c) udot.comp[c][idx] += lin * state.u.comp[c][idx];
    });

    const StrainField du = sym_gradient(state.u);
    const StrainField dudot = sym_gradient(udot);
    const std::size_t np = g.num_phys();
    real diss = 0.0, ddot = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
        const real s = du.mag2[p];
        const real gg = eval(law, s);
        diss += gg * s;
        ddot += (eval_deriv(law, s, 1) * s + gg) * frob6(du.comp, dudot.comp, p);
    }
    out.d = diss * g.cell_volume();
    out.ddot = 2.0 * ddot * g.cell_volume();
    return out;
}

}  // namespace detail

/// Advances one step. dt = 0 returns the state unchanged.
inline SimState step(const SimState& state, const ConstitutiveLaw& law, double dt) {
    if (dt < 0.0) throw std::invalid_argument("step: dt must be >= 0");
    if (dt == 0.0) return state;
    return detail::rk3_step(state, law, dt);
}

/// CFL-limited step size: the advective limit dx / max|u| combined with
/// the explicit-diffusion limit dx^2 / (2 max(G - m0)) for the viscous
/// remainder (the m0 part is integrated exactly and imposes no limit).
inline double cfl_dt(const SimState& state, const ConstitutiveLaw& law, double c_cfl) {
    if (!(c_cfl > 0.0 && c_cfl <= 1.0))
        throw std::invalid_argument("cfl_dt: c_cfl must be in (0, 1]");
    constexpr real guard = 1e-30;
    const Grid& g = state.u.grid;
    const PhysField uphys = to_physical(state.u);
    real max_u2 = 0.0;
    for (std::size_t p = 0; p < g.num_phys(); ++p) {
        const real s = uphys.comp[0][p] * uphys.comp[0][p] +
                       uphys.comp[1][p] * uphys.comp[1][p] +
                       uphys.comp[2][p] * uphys.comp[2][p];
        max_u2 = std::max(max_u2, s);
    }
    const StrainField du = sym_gradient(state.u);
    real max_rem = 0.0;
    for (std::size_t p = 0; p < g.num_phys(); ++p)
        max_rem = std::max(max_rem, eval(law, du.mag2[p]) - law.m0);
    const real dx = g.dx();
    const real adv = dx / (std::sqrt(max_u2) + guard);
    const real visc = dx * dx / (2.0 * max_rem + guard);
    return c_cfl * std::min(adv, visc);
}

struct RunResult {
    SimState state;
    DiagnosticsSeries series;
    std::vector<std::string> checkpoints;
};

namespace detail {

inline std::string checkpoint_name(std::uint64_t step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "checkpoint_%08llu.nnf", static_cast<unsigned long long>(step));
    return buf;
}

}  // namespace detail

/// Integrates the system to t_end, recording diagnostics and writing
/// checkpoints at the configured cadences. Deterministic given the config.
/// On blow-up, throws BlowUpError carrying the diagnostics recorded so far
/// (and writes them to output.dir/diagnostics.csv when a dir is set).
inline RunResult run(const SimConfig& config) {
    if (config.t_end < 0.0) throw std::invalid_argument("run: t_end must be >= 0");
    detail::require_admissible(config.law);
    const Grid g(config.n, config.box_length);

    SimState state;
    switch (config.init.type) {
        case InitSpec::Type::taylor_green:
            state.u = taylor_green(g);
            break;
        case InitSpec::Type::random_solenoidal:
            state.u = random_solenoidal(g, config.init.seed, config.init.k_max,
                                        config.init.target_h3);
            break;
        case InitSpec::Type::checkpoint: {
            Checkpoint ck = read_checkpoint(config.init.path);
            if (ck.grid != g)
                throw std::invalid_argument("run: checkpoint grid does not match config grid");
            state.u = leray_project(dealias(ck.u));
            state.t = ck.time;
            state.step = ck.step;
            break;
        }
    }
    state.u = leray_project(dealias(state.u));

    RunResult result;
    result.series.l_max = config.output.l_max;
    const bool files = !config.output.dir.empty();
    if (files) std::filesystem::create_directories(config.output.dir);

    auto emit_ckpt = [&](const SimState& s, const std::string& name) {
        const std::string path = config.output.dir + "/" + name;
        write_checkpoint(path, s.u, s.t, s.step);
        result.checkpoints.push_back(path);
    };

    result.series.records.push_back(
        record(state.u, config.law, config.output.l_max, state.t, state.step));

    const double t_eps = 1e-12 * std::max(1.0, config.t_end);
    const int cadence = std::max(1, config.output.diag_every);
    std::uint64_t steps_done = 0;
    // Energy budget of the most recently evaluated state, tagged by its
    // step count. Budgets are only evaluated around recorded steps.
    std::uint64_t budget_step = 0;
    detail::EnergyBudget prev{};
    bool have_budget = false;

    try {
        while (state.t < config.t_end - t_eps) {
            double dt = config.time.is_fixed() ? config.time.dt_fixed
                                               : cfl_dt(state, config.law, config.time.c_cfl);
            dt = std::min(dt, config.t_end - state.t);

            const bool last = state.t + dt >= config.t_end - t_eps;
            const bool recording = last || (steps_done + 1) % cadence == 0;
            if (recording && (!have_budget || budget_step != steps_done)) {
                prev = detail::energy_budget(state, config.law);
                budget_step = steps_done;
                have_budget = true;
            }

            state = detail::rk3_step(state, config.law, dt);
            ++steps_done;

            if (recording) {
                const detail::EnergyBudget cur = detail::energy_budget(state, config.law);
                // Corrected-trapezoid quadrature of the dissipation
                // integral; higher order than the stepper, so the residual
                // isolates the scheme's violation of the energy identity.
                const double residual = (0.5 * (cur.e - prev.e) + 0.5 * dt * (prev.d + cur.d) +
                                         dt * dt / 12.0 * (prev.ddot - cur.ddot)) /
                                        dt;
                prev = cur;
                budget_step = steps_done;
                result.series.records.push_back(record(state.u, config.law, config.output.l_max,
                                                       state.t, state.step, residual));
            }
            if (files && config.output.ckpt_every > 0 &&
                steps_done % config.output.ckpt_every == 0)
                emit_ckpt(state, detail::checkpoint_name(state.step));
        }
    } catch (BlowUpError& e) {
        e.series = result.series;
        if (files) write_series(result.series, config.output.dir + "/diagnostics.csv");
        throw;
    }

    if (files) {
        write_series(result.series, config.output.dir + "/diagnostics.csv");
        emit_ckpt(state, "final.nnf");
    }
    result.state = std::move(state);
    return result;
}

/// Pressure recovered from the velocity:  p_hat = k.(F_hat k) / |k|^2 with
/// F = G[|Du|^2] Du - u (x) u, zero mean. Matches taking the divergence of
/// the momentum equation; the projector makes it redundant for advancing u.
inline SpectralField compute_pressure(const SimState& state, const ConstitutiveLaw& law) {
    const SpectralField& u = state.u;
    const Grid& g = u.grid;
    const std::size_t np = g.num_phys();

    const StrainField du = sym_gradient(u);
    const StressField sig = detail::stress_unchecked(law, du);
    const PhysField uphys = to_physical(u);

    // Flux F = sigma - u (x) u as six symmetric components.
    SpectralField flux_hat(g, 6);
    {
        static constexpr int I[6] = {0, 1, 2, 0, 0, 1};
        static constexpr int J[6] = {0, 1, 2, 1, 2, 2};
        rbuf tmp(np);
        for (int c = 0; c < 6; ++c) {
            for (std::size_t p = 0; p < np; ++p)
                tmp[p] = sig.comp[c][p] - uphys.comp[I[c]][p] * uphys.comp[J[c]][p];
            fft::forward(g, tmp, flux_hat.comp[c]);
        }
    }
    flux_hat = dealias(flux_hat);

    static constexpr int SYM[3][3] = {{0, 3, 4}, {3, 1, 5}, {4, 5, 2}};
    SpectralField p(g, 1);
    detail::for_each_mode(g, [&](int jx, int iy, int iz, std::size_t idx) {
        const real m[3] = {real(jx), real(g.wave_index(iy)), real(g.wave_index(iz))};
        const real m2 = m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
        if (m2 == 0.0) {
            p.comp[0][idx] = cplx(0.0, 0.0);
            return;
        }
        cplx acc(0.0, 0.0);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) acc += m[i] * m[j] * flux_hat.comp[SYM[i][j]][idx];
        p.comp[0][idx] = acc / m2;
    });
    return p;
}

}  // namespace nnf
