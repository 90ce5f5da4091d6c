// Command line driver: runs one convergence experiment over a range of
// refinement levels and emits the results as csv plus gnuplot-ready data.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "stokes_qopr/report.hpp"

using namespace stokes_qopr;

namespace {

ExperimentKind parse_kind(const std::string& s) {
    for (ExperimentKind k : {ExperimentKind::Smooth, ExperimentKind::Quadrature,
                             ExperimentKind::Locking, ExperimentKind::Inhomogeneous})
        if (s == experiment_name(k)) return k;
    throw std::invalid_argument("unknown experiment '" + s +
                                "' (expected smooth, quadrature, locking or inhomogeneous)");
}

std::vector<double> parse_weights(const std::string& s) {
    std::vector<double> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        size_t used = 0;
        double v = std::stod(item, &used);
        if (used != item.size()) throw std::invalid_argument("bad weight list entry '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("empty weight list");
    return out;
}

// Run one spec, streaming csv rows to stdout as levels finish.
ErrorReport run_streaming(const ExperimentSpec& spec) {
    validate(spec);
    Manufactured mf = manufactured(spec.kind, spec.alpha);
    std::cout << csv_header() << '\n';
    ErrorReport report;
    for (int n = spec.nmin; n <= spec.nmax; ++n) {
        report.push_back(run_level(spec, mf, n, report.empty() ? nullptr : &report.back()));
        std::cout << csv_line(spec, report.back()) << '\n' << std::flush;
    }
    return report;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pressure-robust Stokes discretization experiments"};
    app.require_subcommand(1);

    auto* cmd = app.add_subcommand("run", "run a convergence study and emit csv");
    std::string experiment;
    std::string family = "crisscross", quadrature = "composite", disc = "new", solver = "direct";
    std::string out_dir, mesh_path, weight_list;
    int nmin = 0, nmax = 6;
    double eta = 2.0, alpha = 1.0;
    bool large = false;

    cmd->add_option("experiment", experiment,
                    "smooth | quadrature | locking | inhomogeneous")
        ->required();
    cmd->add_option("--family", family, "mesh family")
        ->check(CLI::IsMember({"diagonal", "crisscross"}));
    cmd->add_option("--nmin", nmin, "coarsest refinement level");
    cmd->add_option("--nmax", nmax, "finest refinement level");
    cmd->add_option("--eta", eta, "penalty weight of the modified velocity form");
    cmd->add_option("--alpha", alpha, "pressure scale (quadrature experiment only)");
    cmd->add_option("--quadrature", quadrature, "load integration layout")
        ->check(CLI::IsMember({"composite", "standard"}));
    cmd->add_option("--disc", disc, "velocity form and load treatment")
        ->check(CLI::IsMember({"standard", "new"}));
    auto* solver_opt = cmd->add_option("--solver", solver, "linear solver")
                           ->check(CLI::IsMember({"direct", "schur"}));
    cmd->add_option("--out", out_dir, "directory for csv and plot data files");
    cmd->add_option("--dump-mesh", mesh_path, "write the finest mesh of the run to this path");
    cmd->add_flag("--large", large, "allow refinement levels 7 and 8");
    cmd->add_option("--etas", weight_list,
                    "comma separated penalty weights, one csv block per entry (locking)");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentSpec spec;
        spec.kind = parse_kind(experiment);
        spec.family = family == "diagonal" ? MeshFamily::Diagonal : MeshFamily::Crisscross;
        spec.nmin = nmin;
        spec.nmax = nmax;
        spec.eta = eta;
        spec.alpha = alpha;
        spec.quadrature = quadrature == "standard" ? QuadLayout::Standard : QuadLayout::Composite;
        spec.use_new = disc == "new";
        spec.solver = solver == "schur" ? SolverKind::Schur : SolverKind::Direct;

        if (spec.nmax > 8) throw std::invalid_argument("refinement levels are capped at 8");
        if (spec.nmax > 6 && !large)
            throw std::invalid_argument("levels above 6 need --large (and the schur solver)");
        if (large && solver_opt->count() == 0) spec.solver = SolverKind::Schur;

        std::vector<double> weights{spec.eta};
        if (!weight_list.empty()) {
            if (spec.kind != ExperimentKind::Locking)
                throw std::invalid_argument("--etas applies to the locking experiment only");
            weights = parse_weights(weight_list);
        }

        if (!mesh_path.empty()) dump_mesh(build_family(spec.family, spec.nmax), mesh_path);

        std::string csv;
        std::vector<std::pair<double, ErrorReport>> blocks;
        for (size_t i = 0; i < weights.size(); ++i) {
            spec.eta = weights[i];
            if (i > 0) std::cout << '\n';
            ErrorReport report = run_streaming(spec);
            if (i > 0) csv += '\n';
            csv += csv_table(spec, report);
            blocks.emplace_back(weights[i], std::move(report));
        }

        if (!out_dir.empty()) {
            std::filesystem::create_directories(out_dir);
            std::string base = out_dir + "/" + experiment_name(spec.kind);
            std::ofstream file(base + ".csv");
            if (!file) throw std::runtime_error("cannot write " + base + ".csv");
            file << csv;
            for (auto& [w, report] : blocks) {
                std::string stem = base;
                if (blocks.size() > 1) {
                    char tag[32];
                    std::snprintf(tag, sizeof tag, "_eta%g", w);
                    stem += tag;
                }
                emit_plotdata(report, stem);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
