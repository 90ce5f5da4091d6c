#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <stdexcept>
#include <vector>

#include "stokes_qopr/divfix.hpp"

namespace stokes_qopr {

using ScalarField = std::function<double(Vec2)>;
using VectorField = std::function<Vec2(Vec2)>;

// Where load integrands are sampled: Composite places the quadrature rule on
// each of the three barycentric sub-triangles, so piecewise-polynomial factors
// are integrated exactly; Standard places one rule on the unrefined cell.
enum class QuadLayout { Composite, Standard };

// Plain tests the load against the basis functions themselves, Smoothed
// against their corrected counterparts.
enum class LoadMode { Plain, Smoothed };

namespace detail {

inline void check_velocity_space(const FeSpace& v) {
    if (v.components != 2 || v.family != Family::Lagrange)
        throw std::invalid_argument("expected a vector Lagrange space");
}

// Per-cell kernels run in parallel into pre-sized slots; the scatter into the
// global matrix is serial so the result is independent of the thread count.
template <class Kernel>
Eigen::SparseMatrix<double> assemble_velocity_blocks(const FeSpace& v, Kernel&& kernel) {
    const Mesh& mesh = *v.mesh;
    int nl = 2 * v.ndof_cell;
    std::vector<Eigen::MatrixXd> loc(mesh.n_cells());
    parallel_for(mesh.n_cells(), [&](int c) { loc[c] = kernel(c); });

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(mesh.n_cells()) * nl * nl);
    for (int c = 0; c < mesh.n_cells(); ++c)
        for (int a = 0; a < nl; ++a) {
            int ga = v.vdof(c, a / 2, a % 2);
            if (ga < 0) continue;
            for (int b = 0; b < nl; ++b) {
                int gb = v.vdof(c, b / 2, b % 2);
                if (gb >= 0 && loc[c](a, b) != 0.0) trip.emplace_back(ga, gb, loc[c](a, b));
            }
        }
    Eigen::SparseMatrix<double> A(v.dim, v.dim);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

inline Eigen::MatrixXd local_stiffness(const FeSpace& v, int cell) {
    int nl = 2 * v.ndof_cell;
    Eigen::MatrixXd loc = Eigen::MatrixXd::Zero(nl, nl);
    QuadRule rule = make_rule(std::max(1, 2 * v.degree - 2));
    double area = v.mesh->cell_area(cell);
    for (const QuadPoint& q : rule.points) {
        BasisEval be = eval_basis(v, cell, {q.x, q.y});
        double w = area * q.w;
        for (int i = 0; i < be.n; ++i)
            for (int j = 0; j < be.n; ++j) {
                double g = w * dot(be.grad[i], be.grad[j]);
                loc(2 * i, 2 * j) += g;
                loc(2 * i + 1, 2 * j + 1) += g;
            }
    }
    return loc;
}

}  // namespace detail

// Velocity stiffness of the plain pair: int grad w : grad v.
inline Eigen::SparseMatrix<double> assemble_standard(const FeSpace& v) {
    detail::check_velocity_space(v);
    return detail::assemble_velocity_blocks(
        v, [&](int c) { return detail::local_stiffness(v, c); });
}

// Modified velocity form int grad Ew : grad Ev + (eta-1) int grad Rw : grad Rv,
// expanded cell by cell as V + C^T X + X^T C + eta C^T S C. Corrections live
// inside single cells, so the sparsity pattern matches the plain stiffness.
inline Eigen::SparseMatrix<double> assemble_new(const SmootherRep& rep, double eta) {
    const FeSpace& v = *rep.vspace;
    detail::check_velocity_space(v);
    if (!(eta > 1.0)) throw std::invalid_argument("stabilization weight must exceed 1");
    return detail::assemble_velocity_blocks(v, [&](int c) {
        const CellOps& ops = *rep.ops[c];
        Eigen::MatrixXd loc = detail::local_stiffness(v, c);
        Eigen::MatrixXd CX = ops.C.transpose() * ops.X;
        loc += CX + CX.transpose() + eta * (ops.C.transpose() * ops.S() * ops.C);
        return loc;
    });
}

// The same bilinear form evaluated by quadrature on the barycentric split,
// treating E phi_j as an explicit piecewise polynomial. Slow; kept as an
// independent route for verification.
inline Eigen::SparseMatrix<double> assemble_new_by_quadrature(const SmootherRep& rep,
                                                              double eta) {
    const FeSpace& v = *rep.vspace;
    detail::check_velocity_space(v);
    if (!(eta > 1.0)) throw std::invalid_argument("stabilization weight must exceed 1");
    QuadRule rule = make_rule(std::max(1, 2 * v.degree - 2));
    return detail::assemble_velocity_blocks(v, [&](int c) {
        const CellOps& ops = *rep.ops[c];
        const FeSpace& sv = ops.inv.sv.velocity;
        int nl = 2 * v.ndof_cell;
        Eigen::MatrixXd loc = Eigen::MatrixXd::Zero(nl, nl);
        std::vector<Mat2> grads(nl);
        double warea = v.mesh->cell_area(c) / 3.0;
        for (int t = 0; t < 3; ++t) {
            for (const QuadPoint& q : rule.points) {
                Vec2 sref{q.x, q.y};
                BasisEval bs = eval_basis(sv, t, sref);
                BasisEval bp = eval_basis(v, c, parent_reference_point(t, sref));
                for (int j = 0; j < nl; ++j) {
                    Vec2 pg = bp.grad[j / 2];
                    Mat2 g = j % 2 == 0 ? Mat2{pg.x, pg.y, 0, 0} : Mat2{0, 0, pg.x, pg.y};
                    for (int i = 0; i < bs.n; ++i) {
                        int dx = sv.vdof(t, i, 0), dy = sv.vdof(t, i, 1);
                        if (dx >= 0) {
                            g.a11 += ops.C(dx, j) * bs.grad[i].x;
                            g.a12 += ops.C(dx, j) * bs.grad[i].y;
                        }
                        if (dy >= 0) {
                            g.a21 += ops.C(dy, j) * bs.grad[i].x;
                            g.a22 += ops.C(dy, j) * bs.grad[i].y;
                        }
                    }
                    grads[j] = g;
                }
                double w = warea * q.w;
                for (int a = 0; a < nl; ++a)
                    for (int b = 0; b < nl; ++b) loc(a, b) += w * frob(grads[a], grads[b]);
            }
        }
        loc += (eta - 1.0) * (ops.C.transpose() * ops.S() * ops.C);
        return loc;
    });
}

// B(k, i) = -int psi_k div phi_i over the pressure and velocity spaces.
inline Eigen::SparseMatrix<double> assemble_divergence(const FeSpace& v, const FeSpace& p) {
    detail::check_velocity_space(v);
    if (p.family != Family::Discontinuous || p.components != 1 || p.mesh != v.mesh ||
        p.degree != v.degree - 2)
        throw std::invalid_argument("pressure space must be discontinuous of degree ell-2");
    const Mesh& mesh = *v.mesh;
    int nl = 2 * v.ndof_cell;
    QuadRule rule = make_rule(std::max(1, 2 * v.degree - 3));
    std::vector<Eigen::MatrixXd> loc(mesh.n_cells());
    parallel_for(mesh.n_cells(), [&](int c) {
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p.ndof_cell, nl);
        double area = mesh.cell_area(c);
        for (const QuadPoint& q : rule.points) {
            Vec2 ref{q.x, q.y};
            BasisEval bv = eval_basis(v, c, ref);
            BasisEval bp = eval_basis(p, c, ref);
            double w = area * q.w;
            for (int a = 0; a < bp.n; ++a)
                for (int k = 0; k < bv.n; ++k) {
                    b(a, 2 * k + 0) -= w * bp.val[a] * bv.grad[k].x;
                    b(a, 2 * k + 1) -= w * bp.val[a] * bv.grad[k].y;
                }
        }
        loc[c] = b;
    });
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(mesh.n_cells()) * p.ndof_cell * nl);
    for (int c = 0; c < mesh.n_cells(); ++c)
        for (int a = 0; a < p.ndof_cell; ++a)
            for (int b = 0; b < nl; ++b) {
                int gi = v.vdof(c, b / 2, b % 2);
                if (gi >= 0 && loc[c](a, b) != 0.0)
                    trip.emplace_back(p.scalar_dof(c, a), gi, loc[c](a, b));
            }
    Eigen::SparseMatrix<double> B(p.dim, v.dim);
    B.setFromTriplets(trip.begin(), trip.end());
    return B;
}

// Momentum load F_i = int f . phi_i (Plain) or int f . E phi_i (Smoothed).
inline Eigen::VectorXd assemble_load(const FeSpace& v, const VectorField& f,
                                     const SmootherRep* rep, LoadMode mode, QuadLayout layout,
                                     int degree = 6) {
    detail::check_velocity_space(v);
    if (mode == LoadMode::Smoothed && (rep == nullptr || rep->vspace != &v))
        throw std::invalid_argument("smoothed load needs the smoother of this space");
    const Mesh& mesh = *v.mesh;
    int nl = 2 * v.ndof_cell;
    QuadRule rule = make_rule(degree);

    std::vector<Eigen::VectorXd> loc(mesh.n_cells());
    parallel_for(mesh.n_cells(), [&](int c) {
        Eigen::VectorXd F = Eigen::VectorXd::Zero(nl);
        double area = mesh.cell_area(c);
        auto accumulate = [&](int t, Vec2 sref, Vec2 pref, double w) {
            Vec2 fx = f(mesh.map_to_physical(c, pref));
            BasisEval bp = eval_basis(v, c, pref);
            for (int k = 0; k < bp.n; ++k) {
                F[2 * k + 0] += w * fx.x * bp.val[k];
                F[2 * k + 1] += w * fx.y * bp.val[k];
            }
            if (mode != LoadMode::Smoothed) return;
            const CellOps& ops = *rep->ops[c];
            const FeSpace& sv = ops.inv.sv.velocity;
            BasisEval bs = eval_basis(sv, t, sref);
            for (int i = 0; i < bs.n; ++i)
                for (int ci = 0; ci < 2; ++ci) {
                    int gi = sv.vdof(t, i, ci);
                    if (gi < 0) continue;
                    double s = w * (ci == 0 ? fx.x : fx.y) * bs.val[i];
                    for (int j = 0; j < nl; ++j) F[j] += s * ops.C(gi, j);
                }
        };
        if (layout == QuadLayout::Composite) {
            for (int t = 0; t < 3; ++t)
                for (const QuadPoint& q : rule.points) {
                    Vec2 sref{q.x, q.y};
                    accumulate(t, sref, parent_reference_point(t, sref), area / 3.0 * q.w);
                }
        } else {
            for (const QuadPoint& q : rule.points) {
                Vec2 pref{q.x, q.y};
                int t = locate_sub_triangle(pref);
                accumulate(t, sub_reference_point(t, pref), pref, area * q.w);
            }
        }
        loc[c] = F;
    });

    Eigen::VectorXd F = Eigen::VectorXd::Zero(v.dim);
    for (int c = 0; c < mesh.n_cells(); ++c)
        for (int a = 0; a < nl; ++a) {
            int ga = v.vdof(c, a / 2, a % 2);
            if (ga >= 0) F[ga] += loc[c][a];
        }
    return F;
}

// Divergence data G_k = int psi_k g.
inline Eigen::VectorXd assemble_pressure_load(const FeSpace& p, const ScalarField& g,
                                              int degree = 6) {
    if (p.components != 1) throw std::invalid_argument("pressure space must be scalar");
    const Mesh& mesh = *p.mesh;
    QuadRule rule = make_rule(degree);
    std::vector<Eigen::VectorXd> loc(mesh.n_cells());
    parallel_for(mesh.n_cells(), [&](int c) {
        Eigen::VectorXd G = Eigen::VectorXd::Zero(p.ndof_cell);
        double area = mesh.cell_area(c);
        for (const QuadPoint& q : rule.points) {
            Vec2 ref{q.x, q.y};
            double gx = g(mesh.map_to_physical(c, ref));
            BasisEval bp = eval_basis(p, c, ref);
            for (int a = 0; a < bp.n; ++a) G[a] += area * q.w * gx * bp.val[a];
        }
        loc[c] = G;
    });
    Eigen::VectorXd G = Eigen::VectorXd::Zero(p.dim);
    for (int c = 0; c < mesh.n_cells(); ++c)
        for (int a = 0; a < p.ndof_cell; ++a) G[p.scalar_dof(c, a)] += loc[c][a];
    return G;
}

// Pressure mass matrix, block diagonal for discontinuous spaces.
inline Eigen::SparseMatrix<double> assemble_pressure_mass(const FeSpace& p) {
    if (p.components != 1) throw std::invalid_argument("pressure space must be scalar");
    const Mesh& mesh = *p.mesh;
    QuadRule rule = make_rule(std::max(1, 2 * p.degree));
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(mesh.n_cells()) * p.ndof_cell * p.ndof_cell);
    for (int c = 0; c < mesh.n_cells(); ++c) {
        double area = mesh.cell_area(c);
        for (const QuadPoint& q : rule.points) {
            BasisEval bp = eval_basis(p, c, {q.x, q.y});
            for (int a = 0; a < bp.n; ++a)
                for (int b = 0; b < bp.n; ++b)
                    trip.emplace_back(p.scalar_dof(c, a), p.scalar_dof(c, b),
                                      area * q.w * bp.val[a] * bp.val[b]);
        }
    }
    Eigen::SparseMatrix<double> M(p.dim, p.dim);
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

// Everything the linear solver needs. A carries the velocity form without the
// viscosity factor; the solver scales it.
struct StokesSystem {
    const FeSpace* velocity = nullptr;
    const FeSpace* pressure = nullptr;
    Eigen::SparseMatrix<double> A;
    Eigen::SparseMatrix<double> B;
    Eigen::VectorXd F, G, mean;
};

}  // namespace stokes_qopr
