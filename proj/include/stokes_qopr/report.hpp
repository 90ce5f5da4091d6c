#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "stokes_qopr/experiments.hpp"

namespace stokes_qopr {

inline std::string csv_header() {
    return "experiment,family,N,cells,dofs_u,dofs_p,eta,alpha,quadrature,disc,"
           "h1_u,l2_p,eoc_h1,eoc_l2,wall_ms";
}

inline std::string csv_line(const ExperimentSpec& spec, const ErrorLevel& lv) {
    char e1[16] = "", e2[16] = "";  // order columns stay empty on the first level
    if (!std::isnan(lv.eoc_h1)) std::snprintf(e1, sizeof e1, "%.2f", lv.eoc_h1);
    if (!std::isnan(lv.eoc_l2)) std::snprintf(e2, sizeof e2, "%.2f", lv.eoc_l2);
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%d,%d,%d,%g,%g,%s,%s,%.6e,%.6e,%s,%s,%.3f",
                  experiment_name(spec.kind), family_name(spec.family), lv.level, lv.cells,
                  lv.dofs_u, lv.dofs_p, spec.eta, spec.alpha,
                  spec.quadrature == QuadLayout::Composite ? "composite" : "standard",
                  spec.use_new ? "new" : "standard", lv.h1_velocity, lv.l2_pressure, e1, e2,
                  lv.wall_ms);
    return buf;
}

inline std::string csv_table(const ExperimentSpec& spec, const ErrorReport& report) {
    std::string out = csv_header() + "\n";
    for (const ErrorLevel& lv : report) out += csv_line(spec, lv) + "\n";
    return out;
}

// Log-log plot data, one file per error curve. Reference-slope columns decay
// at rates 0.5 and 1 in the cell count, anchored at the first data point.
inline void emit_plotdata(const ErrorReport& report, const std::string& stem) {
    if (report.empty()) throw std::invalid_argument("cannot plot an empty report");
    auto write_curve = [&](const std::string& path, auto&& pick) {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << "# cells error ref_rate_0.5 ref_rate_1\n";
        double c0 = report.front().cells;
        double e0 = pick(report.front());
        for (const ErrorLevel& lv : report) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%d %.6e %.6e %.6e\n", lv.cells, pick(lv),
                          e0 * std::sqrt(c0 / lv.cells), e0 * (c0 / lv.cells));
            out << buf;
        }
    };
    write_curve(stem + ".h1.dat", [](const ErrorLevel& l) { return l.h1_velocity; });
    write_curve(stem + ".l2p.dat", [](const ErrorLevel& l) { return l.l2_pressure; });
}

}  // namespace stokes_qopr
