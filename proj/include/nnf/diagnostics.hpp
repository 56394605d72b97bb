#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nnf/constitutive.hpp"
#include "nnf/fields.hpp"

namespace nnf {

/// Per-step scalar diagnostics: the quantities the a priori estimates
/// control (Sobolev norms, the dissipation integral, the Gtilde potential,
/// the max-gradient blow-up indicator, the discrete energy-balance
/// residual).
struct DiagnosticsRecord {
    double t = 0.0;
    std::uint64_t step = 0;
    double l2 = 0.0;
    std::array<double, 6> h{};  // h[i] = H^{i+1} norm, filled up to l_max
    double dissipation = 0.0;
    double potential = 0.0;
    double max_grad = 0.0;
    double energy_residual = 0.0;
};

struct DiagnosticsSeries {
    int l_max = 3;
    std::vector<DiagnosticsRecord> records;
};

/// Fills a record by spectral norms and grid quadrature.
inline DiagnosticsRecord record(const SpectralField& u, const ConstitutiveLaw& law, int l_max,
                                double t, std::uint64_t step, double energy_residual = 0.0) {
    if (l_max < 1 || l_max > 6) throw std::invalid_argument("record requires 1 <= l_max <= 6");
    DiagnosticsRecord rec;
    rec.t = t;
    rec.step = step;
    rec.energy_residual = energy_residual;

    // All Sobolev norms in one pass over the spectrum.
    const Grid& g = u.grid;
    std::array<real, 7> acc{};
    detail::for_each_mode(g, [&](int jx, int iy, int iz, std::size_t idx) {
        const real kx = g.wavenumber(jx);
        const real ky = g.wavenumber(g.wave_index(iy));
        const real kz = g.wavenumber(g.wave_index(iz));
        real mag2 = 0.0;
        for (int c = 0; c < u.ncomp(); ++c) mag2 += std::norm(u.comp[c][idx]);
        mag2 *= g.spec_weight(jx);
        const real base = 1.0 + kx * kx + ky * ky + kz * kz;
        real w = 1.0;
        for (int l = 0; l <= l_max; ++l) {
            acc[l] += w * mag2;
            w *= base;
        }
    });
    const real vol = g.box_length * g.box_length * g.box_length;
    rec.l2 = std::sqrt(vol * acc[0]);
    for (int l = 1; l <= l_max; ++l) rec.h[l - 1] = std::sqrt(vol * acc[l]);

    const StrainField du = sym_gradient(u);
    const std::size_t np = g.num_phys();
    real diss = 0.0, pot = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
        diss += eval(law, du.mag2[p]) * du.mag2[p];
        pot += eval_antideriv(law, du.mag2[p]);
    }
    rec.dissipation = diss * g.cell_volume();
    rec.potential = pot * g.cell_volume();

    const PhysField grad = gradient(u);
    real mg2 = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
        real s = 0.0;
        for (int c = 0; c < 9; ++c) s += grad.comp[c][p] * grad.comp[c][p];
        mg2 = std::max(mg2, s);
    }
    rec.max_grad = std::sqrt(mg2);
    return rec;
}

enum class SeriesField { l2, h1, h2, h3, h4, h5, h6, dissipation, potential, max_grad };

inline double series_value(const DiagnosticsRecord& r, SeriesField f) {
    switch (f) {
        case SeriesField::l2: return r.l2;
        case SeriesField::dissipation: return r.dissipation;
        case SeriesField::potential: return r.potential;
        case SeriesField::max_grad: return r.max_grad;
        default: return r.h[int(f) - int(SeriesField::h1)];
    }
}

/// Least-squares slope of log(value) against t over records with
/// t0 <= t <= t1. For a clean exponential decay this recovers the rate.
inline double fit_decay_rate(const DiagnosticsSeries& series, SeriesField field, double t0,
                             double t1) {
    std::vector<double> ts, ys;
    for (const auto& r : series.records) {
        if (r.t < t0 || r.t > t1) continue;
        const double v = series_value(r, field);
        if (!(v > 0.0))
            throw std::domain_error("fit_decay_rate: nonpositive value at t=" + std::to_string(r.t));
        ts.push_back(r.t);
        ys.push_back(std::log(v));
    }
    if (ts.size() < 2)
        throw std::invalid_argument("fit_decay_rate: need at least 2 records in window");
    double tm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        tm += ts[i];
        ym += ys[i];
    }
    tm /= ts.size();
    ym /= ys.size();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        num += (ts[i] - tm) * (ys[i] - ym);
        den += (ts[i] - tm) * (ts[i] - tm);
    }
    if (den == 0.0) throw std::invalid_argument("fit_decay_rate: records share one time");
    return num / den;
}

// ---------------------------------------------------------------------------
// CSV persistence. Fixed column set; h-columns above l_max stay empty.
// Doubles are written with 17 significant digits so read-back is exact.
// ---------------------------------------------------------------------------

inline constexpr const char* kSeriesHeader =
    "t,step,l2,h1,h2,h3,h4,h5,h6,dissipation,potential,max_grad,energy_residual";

namespace detail {

inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline void write_series(const DiagnosticsSeries& series, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_series: cannot open '" + path + "'");
    os << kSeriesHeader << '\n';
    for (const auto& r : series.records) {
        os << detail::fmt17(r.t) << ',' << r.step << ',' << detail::fmt17(r.l2);
        for (int l = 1; l <= 6; ++l) {
            os << ',';
            if (l <= series.l_max) os << detail::fmt17(r.h[l - 1]);
        }
        os << ',' << detail::fmt17(r.dissipation) << ',' << detail::fmt17(r.potential) << ','
           << detail::fmt17(r.max_grad) << ',' << detail::fmt17(r.energy_residual) << '\n';
    }
    if (!os) throw std::runtime_error("write_series: write failed for '" + path + "'");
}

inline DiagnosticsSeries read_series(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_series: cannot open '" + path + "'");
    std::string line;
    long lineno = 1;
    if (!std::getline(is, line) || line != kSeriesHeader)
        throw std::runtime_error(path + ":1: bad or missing header");
    DiagnosticsSeries series;
    series.l_max = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        if (cells.size() != 13)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 13 fields, got " +
                                     std::to_string(cells.size()));
        auto num = [&](const std::string& s, const char* what) {
            try {
                std::size_t pos = 0;
                double v = std::stod(s, &pos);
                if (pos != s.size()) throw std::invalid_argument("trailing characters");
                return v;
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad " +
                                         std::string(what) + " value '" + s + "'");
            }
        };
        DiagnosticsRecord r;
        r.t = num(cells[0], "t");
        r.step = static_cast<std::uint64_t>(num(cells[1], "step"));
        r.l2 = num(cells[2], "l2");
        int l_max_row = 0;
        for (int l = 1; l <= 6; ++l) {
            if (cells[2 + l].empty()) continue;
            r.h[l - 1] = num(cells[2 + l], "h-norm");
            l_max_row = l;
        }
        r.dissipation = num(cells[9], "dissipation");
        r.potential = num(cells[10], "potential");
        r.max_grad = num(cells[11], "max_grad");
        r.energy_residual = num(cells[12], "energy_residual");
        series.records.push_back(r);
        series.l_max = std::max(series.l_max, l_max_row);
    }
    return series;
}

}  // namespace nnf
