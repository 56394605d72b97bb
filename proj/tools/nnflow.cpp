// nnflow command-line interface.
//
// Subcommands: simulate, verify-law, check-derivatives, taylor-green, norms.
// Machine-readable JSON goes to stdout, human logs to stderr.
// Exit codes: 0 success, 2 validation failure (bad config / inadmissible
// law), 3 runtime blow-up (diagnostics still written).

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nnf/nnf.hpp"

namespace {

using nnf::json;

struct LawFlags {
    std::string kind = "power_a";
    double m0 = 1.0;
    double q = 3.0;
    double sigma_reg = 1.0;
};

void add_law_flags(CLI::App* cmd, LawFlags& f) {
    cmd->add_option("--kind", f.kind, "newtonian | power_a | power_b | reciprocal")
        ->default_val(f.kind);
    cmd->add_option("--m0", f.m0, "viscosity floor m0 > 0")->default_val(f.m0);
    cmd->add_option("--q", f.q, "power-law exponent")->default_val(f.q);
    cmd->add_option("--sigma-reg", f.sigma_reg, "power_b regularization")->default_val(f.sigma_reg);
}

nnf::ConstitutiveLaw build_law(const LawFlags& f) {
    if (f.kind == "newtonian") return nnf::ConstitutiveLaw::newtonian(f.m0);
    if (f.kind == "power_a") return nnf::ConstitutiveLaw::power_a(f.q, f.m0);
    if (f.kind == "power_b") return nnf::ConstitutiveLaw::power_b(f.q, f.m0, f.sigma_reg);
    if (f.kind == "reciprocal") {
        // Demo law G[s] = 1/(1+s): violates the coercivity condition for
        // s > 1, useful for exercising the structural audit.
        return nnf::ConstitutiveLaw::user_defined(
            "reciprocal", f.m0, [](double s) { return 1.0 / (1.0 + s); },
            [](double s) { double d = 1.0 + s; return -1.0 / (d * d); },
            [](double s) { double d = 1.0 + s; return 2.0 / (d * d * d); },
            [](double s) { double d = 1.0 + s; return -6.0 / (d * d * d * d); });
    }
    throw std::runtime_error("unknown law kind '" + f.kind + "'");
}

int cmd_simulate(const std::string& config_path) {
    nnf::SimConfig cfg = nnf::load_config(config_path);
    std::cerr << "[nnflow] simulate: n=" << cfg.n << " law=" << cfg.law.label
              << " t_end=" << cfg.t_end << "\n";
    try {
        nnf::RunResult res = nnf::run(cfg);
        json out = nnf::summary_json(res.series);
        out["status"] = "ok";
        if (!cfg.output.dir.empty()) {
            out["csv"] = cfg.output.dir + "/diagnostics.csv";
            out["checkpoints"] = res.checkpoints;
        }
        std::cout << out.dump(2) << "\n";
        return 0;
    } catch (const nnf::BlowUpError& e) {
        std::cerr << "[nnflow] " << e.what() << "\n";
        json out = nnf::summary_json(e.series);
        out["status"] = "blowup";
        out["blowup_t"] = e.last_state.t;
        out["blowup_step"] = e.last_state.step;
        if (!cfg.output.dir.empty()) out["csv"] = cfg.output.dir + "/diagnostics.csv";
        std::cout << out.dump(2) << "\n";
        return 3;
    }
}

int cmd_verify_law(const LawFlags& flags, long samples, double s_max) {
    const nnf::ConstitutiveLaw law = build_law(flags);
    const nnf::StructuralReport rep = nnf::verify_structural(law, samples, s_max);
    std::cout << nnf::to_json(rep, law.label).dump(2) << "\n";
    if (!rep.passed) {
        std::cerr << "[nnflow] law '" << law.label << "' FAILS the structural conditions\n";
        return 2;
    }
    std::cerr << "[nnflow] law '" << law.label << "' passes the structural conditions\n";
    return 0;
}

int cmd_check_derivatives(const LawFlags& flags, int n, int order, const std::string& dirs_csv,
                          std::uint64_t seed) {
    const nnf::ConstitutiveLaw law = build_law(flags);
    std::vector<int> dirs;
    {
        std::stringstream ss(dirs_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) dirs.push_back(std::stoi(tok));
    }
    if (dirs.empty()) {  // default: cycle axes
        for (int d = 0; d < order; ++d) dirs.push_back(d % 3);
    }
    if (int(dirs.size()) != order)
        throw std::runtime_error("--dirs must list exactly --order axis indices");

    const nnf::Grid grid(n);
    const int k_max = std::min(2, std::max(1, n / 6));
    const nnf::SpectralField u = nnf::random_solenoidal(grid, seed, k_max, 1.0);
    const nnf::DecompositionReport rep = nnf::check_decomposition(law, u, dirs);
    std::cout << nnf::to_json(rep).dump(2) << "\n";
    std::cerr << "[nnflow] decomposition order " << order << ": residual_rel = "
              << rep.residual_rel << "\n";
    return 0;
}

int cmd_taylor_green(int n, double t_end, double dt, double m0) {
    nnf::SimConfig cfg;
    cfg.n = n;
    cfg.law = nnf::ConstitutiveLaw::newtonian(m0);
    cfg.time = nnf::TimePolicy::fixed(dt);
    cfg.t_end = t_end;
    cfg.init.type = nnf::InitSpec::Type::taylor_green;
    try {
        nnf::RunResult res = nnf::run(cfg);
        const auto& first = res.series.records.front();
        const auto& last = res.series.records.back();
        const double exact = first.l2 * std::exp(-m0 * last.t);
        json out = nnf::summary_json(res.series);
        out["status"] = "ok";
        out["l2_error_rel"] = std::abs(last.l2 - exact) / exact;
        if (res.series.records.size() >= 2)
            out["decay_rate"] = nnf::fit_decay_rate(res.series, nnf::SeriesField::l2, first.t,
                                                    last.t);
        std::cout << out.dump(2) << "\n";
        return 0;
    } catch (const nnf::BlowUpError& e) {
        std::cerr << "[nnflow] " << e.what() << "\n";
        return 3;
    }
}

int cmd_norms(const std::string& path, int l_max) {
    const nnf::Checkpoint ck = nnf::read_checkpoint(path);
    json out{{"n", ck.grid.n},
             {"box_length", ck.grid.box_length},
             {"t", ck.time},
             {"step", ck.step},
             {"l2", nnf::sobolev_norm(ck.u, 0)}};
    for (int l = 1; l <= l_max; ++l)
        out["h" + std::to_string(l)] = nnf::sobolev_norm(ck.u, l);
    std::cout << out.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nnflow: pseudo-spectral solver and inequality checkers for "
                 "shear-dependent-viscosity incompressible flow"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "integrate a configured run");
    std::string config_path;
    sim->add_option("--config", config_path, "JSON config path")->required();

    auto* vlaw = app.add_subcommand("verify-law", "audit the structural conditions of a law");
    LawFlags vflags;
    long samples = 10000;
    double s_max = 1e6;
    add_law_flags(vlaw, vflags);
    vlaw->add_option("--samples", samples, "random samples (>= 1000)")->default_val(samples);
    vlaw->add_option("--s-max", s_max, "upper end of the sampled range")->default_val(s_max);

    auto* chk = app.add_subcommand("check-derivatives",
                                   "verify the derivative decomposition on a random field");
    LawFlags cflags;
    int chk_n = 48, chk_order = 2;
    std::string chk_dirs;
    std::uint64_t chk_seed = 1234;
    add_law_flags(chk, cflags);
    chk->add_option("--n", chk_n, "grid points per axis")->default_val(chk_n);
    chk->add_option("--order", chk_order, "derivative order (1..3)")->default_val(chk_order);
    chk->add_option("--dirs", chk_dirs, "comma-separated axis indices, e.g. 0,1,2");
    chk->add_option("--seed", chk_seed, "field seed")->default_val(chk_seed);

    auto* tg = app.add_subcommand("taylor-green", "Newtonian Taylor-Green decay benchmark");
    int tg_n = 32;
    double tg_tend = 1.0, tg_dt = 1e-3, tg_m0 = 1.0;
    tg->add_option("--n", tg_n)->default_val(tg_n);
    tg->add_option("--t-end", tg_tend)->default_val(tg_tend);
    tg->add_option("--dt", tg_dt)->default_val(tg_dt);
    tg->add_option("--m0", tg_m0)->default_val(tg_m0);

    auto* nrm = app.add_subcommand("norms", "Sobolev norms of a checkpoint");
    std::string ck_path;
    int nrm_lmax = 3;
    nrm->add_option("checkpoint", ck_path, "checkpoint path")->required();
    nrm->add_option("--l-max", nrm_lmax, "highest Sobolev order")->default_val(nrm_lmax);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(config_path);
        if (vlaw->parsed()) return cmd_verify_law(vflags, samples, s_max);
        if (chk->parsed())
            return cmd_check_derivatives(cflags, chk_n, chk_order, chk_dirs, chk_seed);
        if (tg->parsed()) return cmd_taylor_green(tg_n, tg_tend, tg_dt, tg_m0);
        if (nrm->parsed()) return cmd_norms(ck_path, nrm_lmax);
    } catch (const std::exception& e) {
        std::cerr << "[nnflow] error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
