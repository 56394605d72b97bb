#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "nnf/analysis.hpp"
#include "nnf/constitutive.hpp"
#include "nnf/diagnostics.hpp"
#include "nnf/solver.hpp"

namespace nnf {

using json = nlohmann::json;

/// Builds a law from {"kind": "newtonian"|"power_a"|"power_b",
/// "m0": ..., "q": ..., "sigma_reg": ...}.
inline ConstitutiveLaw law_from_json(const json& j) {
    if (!j.contains("kind")) throw std::runtime_error("law: missing 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    const double m0 = j.value("m0", 1.0);
    if (kind == "newtonian") return ConstitutiveLaw::newtonian(m0);
    if (kind == "power_a") {
        if (!j.contains("q")) throw std::runtime_error("law power_a: missing 'q'");
        return ConstitutiveLaw::power_a(j.at("q").get<double>(), m0);
    }
    if (kind == "power_b") {
        if (!j.contains("q")) throw std::runtime_error("law power_b: missing 'q'");
        return ConstitutiveLaw::power_b(j.at("q").get<double>(), m0, j.value("sigma_reg", 1.0));
    }
    throw std::runtime_error("law: unknown kind '" + kind + "'");
}

/// Parses the simulation config schema:
/// { grid: {n, box_length}, law: {...}, time: {dt | c_cfl, t_end},
///   init: {type, ...}, output: {dir, diag_every, ckpt_every, l_max} }.
inline SimConfig config_from_json(const json& j) {
    SimConfig cfg;
    const json& grid = j.at("grid");
    cfg.n = grid.at("n").get<int>();
    cfg.box_length = grid.value("box_length", 2.0 * pi);
    cfg.law = law_from_json(j.at("law"));

    const json& time = j.at("time");
    const bool has_dt = time.contains("dt"), has_cfl = time.contains("c_cfl");
    if (has_dt == has_cfl)
        throw std::runtime_error("time: exactly one of 'dt' and 'c_cfl' must be given");
    cfg.time = has_dt ? TimePolicy::fixed(time.at("dt").get<double>())
                      : TimePolicy::cfl(time.at("c_cfl").get<double>());
    cfg.t_end = time.at("t_end").get<double>();
    if (cfg.t_end < 0.0) throw std::runtime_error("time: t_end must be >= 0");

    const json& init = j.at("init");
    const std::string type = init.at("type").get<std::string>();
    if (type == "taylor_green") {
        cfg.init.type = InitSpec::Type::taylor_green;
    } else if (type == "random_solenoidal") {
        cfg.init.type = InitSpec::Type::random_solenoidal;
        cfg.init.seed = init.at("seed").get<std::uint64_t>();
        cfg.init.k_max = init.at("k_max").get<int>();
        cfg.init.target_h3 = init.at("target_h3").get<double>();
    } else if (type == "checkpoint") {
        cfg.init.type = InitSpec::Type::checkpoint;
        cfg.init.path = init.at("path").get<std::string>();
    } else {
        throw std::runtime_error("init: unknown type '" + type + "'");
    }

    if (j.contains("output")) {
        const json& out = j.at("output");
        cfg.output.dir = out.value("dir", std::string{});
        cfg.output.diag_every = out.value("diag_every", 1);
        cfg.output.ckpt_every = out.value("ckpt_every", 0);
        cfg.output.l_max = out.value("l_max", 3);
        if (cfg.output.l_max < 1 || cfg.output.l_max > 6)
            throw std::runtime_error("output: l_max must be in 1..6");
        if (cfg.output.diag_every < 1) throw std::runtime_error("output: diag_every must be >= 1");
    }
    return cfg;
}

inline SimConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file '" + path + "'");
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

inline json to_json(const StructuralReport& rep, const std::string& label) {
    json ratios = json::array();
    for (int k = 1; k <= 3; ++k)
        for (int alpha = 0; alpha <= 1; ++alpha)
            ratios.push_back({{"k", k},
                              {"alpha", alpha},
                              {"value", rep.ratio_bounds[k - 1][alpha]}});
    return json{{"label", label},
                {"passed", rep.passed},
                {"min_g", rep.min_g},
                {"min_coercive", rep.min_coercive},
                {"s_at_min_coercive", rep.s_at_min_coercive},
                {"ratio_bounds", ratios},
                {"samples_used", rep.samples_used},
                {"s_max", rep.s_max}};
}

inline json to_json(const DecompositionReport& rep) {
    json dirs = json::array();
    for (int d = 0; d < rep.order; ++d) dirs.push_back(rep.dirs[d]);
    return json{{"order", rep.order},         {"dirs", dirs},
                {"residual_sup", rep.residual_sup}, {"residual_rel", rep.residual_rel},
                {"bound_ratio", rep.bound_ratio},   {"n", rep.n}};
}

inline json to_json(const DiagnosticsRecord& r, int l_max) {
    json h = json::object();
    for (int l = 1; l <= l_max; ++l) h["h" + std::to_string(l)] = r.h[l - 1];
    return json{{"t", r.t},
                {"step", r.step},
                {"l2", r.l2},
                {"h_norms", h},
                {"dissipation", r.dissipation},
                {"potential", r.potential},
                {"max_grad", r.max_grad},
                {"energy_residual", r.energy_residual}};
}

/// Run summary: final norms, extrema over the run, and fitted decay rates
/// (rates omitted for fields that are not positive throughout).
inline json summary_json(const DiagnosticsSeries& series) {
    json out;
    out["records"] = series.records.size();
    if (series.records.empty()) return out;

    const auto& last = series.records.back();
    out["final_norms"] = to_json(last, series.l_max);

    auto fields = std::vector<std::pair<std::string, SeriesField>>{
        {"l2", SeriesField::l2}, {"dissipation", SeriesField::dissipation},
        {"potential", SeriesField::potential}, {"max_grad", SeriesField::max_grad}};
    for (int l = 1; l <= series.l_max; ++l)
        fields.emplace_back("h" + std::to_string(l),
                            SeriesField(int(SeriesField::h1) + l - 1));

    json jmin = json::object(), jmax = json::object(), rates = json::object();
    for (const auto& [name, f] : fields) {
        double lo = series_value(series.records.front(), f), hi = lo;
        for (const auto& r : series.records) {
            lo = std::min(lo, series_value(r, f));
            hi = std::max(hi, series_value(r, f));
        }
        jmin[name] = lo;
        jmax[name] = hi;
        if (series.records.size() >= 2 && lo > 0.0)
            rates[name] = fit_decay_rate(series, f, series.records.front().t,
                                         series.records.back().t);
    }
    out["min"] = jmin;
    out["max"] = jmax;
    out["fitted_rates"] = rates;
    return out;
}

}  // namespace nnf
