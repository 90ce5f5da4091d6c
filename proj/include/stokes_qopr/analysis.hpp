#pragma once

#include <cmath>
#include <limits>

#include "stokes_qopr/assembly.hpp"

namespace stokes_qopr {

using TensorField = std::function<Mat2(Vec2)>;

struct ErrorLevel {
    int level = 0;
    int cells = 0;
    int dofs_u = 0;
    int dofs_p = 0;
    double h1_velocity = 0.0;
    double l2_pressure = 0.0;
    double eoc_h1 = std::numeric_limits<double>::quiet_NaN();  // undefined on the first level
    double eoc_l2 = std::numeric_limits<double>::quiet_NaN();
    double wall_ms = 0.0;
};
using ErrorReport = std::vector<ErrorLevel>;

namespace detail {

// deterministic parallel reduction: per-cell partial sums, serial total
template <class CellTerm>
double sum_over_cells(const Mesh& mesh, CellTerm&& term) {
    std::vector<double> part(mesh.n_cells());
    parallel_for(mesh.n_cells(), [&](int c) { part[c] = term(c); });
    double s = 0.0;
    for (double v : part) s += v;
    return s;
}

}  // namespace detail

// ||grad(u - u_h)|| with the exact gradient supplied in closed form
inline double h1_error(const FeFunction& uh, const TensorField& grad_exact, int degree = 8) {
    const FeSpace& v = *uh.space;
    detail::check_velocity_space(v);
    const Mesh& mesh = *v.mesh;
    QuadRule rule = make_rule(degree);
    double total = detail::sum_over_cells(mesh, [&](int c) {
        double cell = 0.0;
        double area = mesh.cell_area(c);
        for (const QuadPoint& q : rule.points) {
            Vec2 ref{q.x, q.y};
            Mat2 g = grad_exact(mesh.map_to_physical(c, ref));
            BasisEval be = eval_basis(v, c, ref);
            for (int k = 0; k < be.n; ++k) {
                int dx = v.vdof(c, k, 0), dy = v.vdof(c, k, 1);
                if (dx >= 0) {
                    g.a11 -= uh.coef[dx] * be.grad[k].x;
                    g.a12 -= uh.coef[dx] * be.grad[k].y;
                }
                if (dy >= 0) {
                    g.a21 -= uh.coef[dy] * be.grad[k].x;
                    g.a22 -= uh.coef[dy] * be.grad[k].y;
                }
            }
            cell += area * q.w * frob(g, g);
        }
        return cell;
    });
    return std::sqrt(std::max(0.0, total));
}

inline double l2_pressure_error(const FeFunction& ph, const ScalarField& p_exact,
                                int degree = 8) {
    const FeSpace& p = *ph.space;
    if (p.components != 1) throw std::invalid_argument("pressure space must be scalar");
    const Mesh& mesh = *p.mesh;
    QuadRule rule = make_rule(degree);
    double total = detail::sum_over_cells(mesh, [&](int c) {
        double cell = 0.0;
        double area = mesh.cell_area(c);
        for (const QuadPoint& q : rule.points) {
            Vec2 ref{q.x, q.y};
            double d = p_exact(mesh.map_to_physical(c, ref));
            BasisEval be = eval_basis(p, c, ref);
            for (int a = 0; a < be.n; ++a) d -= ph.coef[p.scalar_dof(c, a)] * be.val[a];
            cell += area * q.w * d * d;
        }
        return cell;
    });
    return std::sqrt(std::max(0.0, total));
}

// experimental order of convergence between consecutive refinement levels,
// measured against the fourfold cell growth per level
inline double eoc(double e_prev, double e_next) {
    if (!(e_prev > 0.0) || !(e_next > 0.0))
        throw std::invalid_argument("convergence order needs positive errors");
    return std::log(e_prev / e_next) / std::log(4.0);
}

// Largest normalized defect between int grad z : grad E v and the modified
// form, over all velocity basis functions v. For z in the discrete kernel the
// defect reduces to the terms driven by the correction R z: per cell
// -(X^T r + eta C^T S r) with r = C z.
inline double consistency_probe(const SmootherRep& rep, const Eigen::SparseMatrix<double>& Astd,
                                const Eigen::SparseMatrix<double>& B, const Eigen::VectorXd& z,
                                double eta, double kernel_tol = 1e-8) {
    const FeSpace& v = *rep.vspace;
    if (z.size() != v.dim) throw std::invalid_argument("field not in the velocity space");
    double znorm = std::max(1.0, z.norm());
    if ((B * z).norm() > kernel_tol * znorm)
        throw std::invalid_argument("field is not discretely divergence free");

    Eigen::VectorXd d = Eigen::VectorXd::Zero(v.dim);
    for (int c = 0; c < rep.mesh->n_cells(); ++c) {
        const CellOps& ops = *rep.ops[c];
        Eigen::VectorXd r = ops.C * rep.gather(z, c);
        Eigen::VectorXd dloc =
            ops.X.transpose() * r + eta * (ops.C.transpose() * (ops.S() * r));
        for (int a = 0; a < dloc.size(); ++a) {
            int g = v.vdof(c, a / 2, a % 2);
            if (g >= 0) d[g] -= dloc[a];
        }
    }
    double probe = 0.0;
    for (int i = 0; i < v.dim; ++i)
        probe = std::max(probe, std::abs(d[i]) / std::sqrt(Astd.coeff(i, i)));
    return probe;
}

// Velocity errors of one problem for every (level, weight) combination;
// run_case(family, N, eta) supplies the error of a single run.
struct LockingTable {
    MeshFamily family = MeshFamily::Diagonal;
    std::vector<int> levels;
    std::vector<double> etas;
    std::vector<std::vector<double>> h1;  // h1[i][j]: levels[i], etas[j]
};

template <class Runner>
LockingTable locking_diagnostic(Runner&& run_case, MeshFamily family,
                                const std::vector<int>& levels, const std::vector<double>& etas) {
    LockingTable t;
    t.family = family;
    t.levels = levels;
    t.etas = etas;
    for (int n : levels) {
        std::vector<double> row;
        row.reserve(etas.size());
        for (double eta : etas) row.push_back(run_case(family, n, eta));
        t.h1.push_back(std::move(row));
    }
    return t;
}

}  // namespace stokes_qopr
