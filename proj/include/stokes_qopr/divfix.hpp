#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include "stokes_qopr/spaces.hpp"

namespace stokes_qopr {

inline double frob(const Mat2& a, const Mat2& b) {
    return a.a11 * b.a11 + a.a12 * b.a12 + a.a21 * b.a21 + a.a22 * b.a22;
}

namespace detail {

inline double divergence_at(const FeSpace& v, const Eigen::VectorXd& coef, int cell, Vec2 ref) {
    BasisEval be = eval_basis(v, cell, ref);
    double d = 0.0;
    for (int k = 0; k < be.n; ++k) {
        int dx = v.vdof(cell, k, 0), dy = v.vdof(cell, k, 1);
        if (dx >= 0) d += coef[dx] * be.grad[k].x;
        if (dy >= 0) d += coef[dy] * be.grad[k].y;
    }
    return d;
}

}  // namespace detail

// Element-wise L2 projection of div v onto the discontinuous target space;
// for degree-0 targets this is the cell mean of the divergence.
inline FeFunction discrete_divergence(const FeFunction& v, const FeSpace& target) {
    const FeSpace& vs = *v.space;
    if (vs.components != 2 || vs.family != Family::Lagrange)
        throw std::invalid_argument("divergence source must be a vector Lagrange space");
    if (target.family != Family::Discontinuous || target.components != 1 ||
        target.mesh != vs.mesh || target.degree != vs.degree - 2)
        throw std::invalid_argument("projection target must be discontinuous of degree ell-2");

    const Mesh& mesh = *vs.mesh;
    const RefBasis& rb = ref_basis(target.degree);
    QuadRule rule = make_rule(std::max(1, 2 * vs.degree - 3));
    FeFunction out(target);
    Eigen::MatrixXd M(rb.dim, rb.dim);
    Eigen::VectorXd b(rb.dim);
    for (int c = 0; c < mesh.n_cells(); ++c) {
        double area = mesh.cell_area(c);
        M.setZero();
        b.setZero();
        for (const QuadPoint& q : rule.points) {
            Vec2 ref{q.x, q.y};
            double dv = detail::divergence_at(vs, v.coef, c, ref);
            double vals[6];
            for (int a = 0; a < rb.dim; ++a) vals[a] = rb.value(a, ref);
            for (int a = 0; a < rb.dim; ++a) {
                b[a] += area * q.w * vals[a] * dv;
                for (int d = 0; d < rb.dim; ++d) M(a, d) += area * q.w * vals[a] * vals[d];
            }
        }
        Eigen::VectorXd qc = rb.dim == 1 ? Eigen::VectorXd::Constant(1, b[0] / M(0, 0))
                                         : Eigen::VectorXd(M.llt().solve(b));
        for (int a = 0; a < rb.dim; ++a) out.coef[target.scalar_dof(c, a)] = qc[a];
    }
    return out;
}

// Factorized local problem: given mean-free piecewise P_{ell-1} data q on the
// barycentric split, find the velocity in the local pair whose divergence is
// exactly q. The zero-mean pressure condition is a multiplier row.
struct LocalRightInverse {
    int cell = -1;
    int ell = 2;
    LocalSVSpace sv;
    int nv = 0, np = 0;
    Eigen::MatrixXd A;   // local velocity stiffness
    Eigen::MatrixXd B;   // -int psi div phi
    Eigen::MatrixXd Mp;  // pressure mass
    Eigen::VectorXd m;   // int psi
    Eigen::FullPivLU<Eigen::MatrixXd> lu;

    Eigen::VectorXd apply(const Eigen::VectorXd& q) const {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + np + 1);
        rhs.segment(nv, np) = -Mp * q;
        return lu.solve(rhs).head(nv);
    }
};

inline LocalRightInverse build_local_inverse(const Mesh& mesh, int cell, int ell) {
    LocalRightInverse inv;
    inv.cell = cell;
    inv.ell = ell;
    inv.sv = build_local_sv(mesh, cell, ell);
    const Mesh& lm = *inv.sv.local_mesh;
    const FeSpace& V = inv.sv.velocity;
    const FeSpace& P = inv.sv.pressure;
    inv.nv = V.dim;
    inv.np = P.dim;
    inv.A = Eigen::MatrixXd::Zero(inv.nv, inv.nv);
    inv.B = Eigen::MatrixXd::Zero(inv.np, inv.nv);
    inv.Mp = Eigen::MatrixXd::Zero(inv.np, inv.np);
    inv.m = Eigen::VectorXd::Zero(inv.np);

    QuadRule rule = make_rule(2 * ell - 2);
    for (int c = 0; c < lm.n_cells(); ++c) {
        double area = lm.cell_area(c);
        for (const QuadPoint& q : rule.points) {
            Vec2 ref{q.x, q.y};
            BasisEval bv = eval_basis(V, c, ref);
            BasisEval bp = eval_basis(P, c, ref);
            double w = area * q.w;
            for (int i = 0; i < bv.n; ++i) {
                for (int ci = 0; ci < 2; ++ci) {
                    int gi = V.vdof(c, i, ci);
                    if (gi < 0) continue;
                    for (int j = 0; j < bv.n; ++j) {
                        int gj = V.vdof(c, j, ci);
                        if (gj >= 0) inv.A(gi, gj) += w * dot(bv.grad[i], bv.grad[j]);
                    }
                    double div_i = ci == 0 ? bv.grad[i].x : bv.grad[i].y;
                    for (int a = 0; a < bp.n; ++a)
                        inv.B(P.scalar_dof(c, a), gi) -= w * bp.val[a] * div_i;
                }
            }
            for (int a = 0; a < bp.n; ++a) {
                int ga = P.scalar_dof(c, a);
                inv.m[ga] += w * bp.val[a];
                for (int d = 0; d < bp.n; ++d)
                    inv.Mp(ga, P.scalar_dof(c, d)) += w * bp.val[a] * bp.val[d];
            }
        }
    }

    int n = inv.nv + inv.np + 1;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
    K.topLeftCorner(inv.nv, inv.nv) = inv.A;
    K.block(inv.nv, 0, inv.np, inv.nv) = inv.B;
    K.block(0, inv.nv, inv.nv, inv.np) = inv.B.transpose();
    K.block(inv.nv, inv.nv + inv.np, inv.np, 1) = inv.m;
    K.block(inv.nv + inv.np, inv.nv, 1, inv.np) = inv.m.transpose();
    inv.lu.compute(K);
    if (!inv.lu.isInvertible())
        throw std::runtime_error("singular local problem on cell " + std::to_string(cell));
    return inv;
}

// Shape-class data for the correction operator. Cells with equal Jacobians
// share one instance: all matrices below are translation invariant.
struct CellOps {
    int rep_cell = -1;
    LocalRightInverse inv;
    Eigen::MatrixXd C;  // local vector velocity coefficients -> correction coefficients
    Eigen::MatrixXd X;  // cross stiffness: int grad(sv_a) : grad(phi_j)
    const Eigen::MatrixXd& S() const { return inv.A; }
};

// Piecewise representation of the correction operator. ops[c]->C maps the
// cell-local coefficients of a velocity function to the coefficients of its
// correction in the local pair on that cell.
struct SmootherRep {
    const Mesh* mesh = nullptr;
    const FeSpace* vspace = nullptr;
    int ell = 2;
    std::vector<std::shared_ptr<const CellOps>> ops;

    int nloc() const { return 2 * vspace->ndof_cell; }

    Eigen::VectorXd gather(const Eigen::VectorXd& vcoef, int cell) const {
        Eigen::VectorXd loc = Eigen::VectorXd::Zero(nloc());
        for (int k = 0; k < vspace->ndof_cell; ++k)
            for (int c = 0; c < 2; ++c) {
                int d = vspace->vdof(cell, k, c);
                if (d >= 0) loc[2 * k + c] = vcoef[d];
            }
        return loc;
    }

    Eigen::VectorXd correction(const Eigen::VectorXd& vcoef, int cell) const {
        return ops[cell]->C * gather(vcoef, cell);
    }

    // value of a correction field (given by its per-cell coefficients) at a
    // parent reference point
    Vec2 corr_value(int cell, Vec2 ref, const Eigen::VectorXd& svcoef) const {
        const FeSpace& V = ops[cell]->inv.sv.velocity;
        int k = locate_sub_triangle(ref);
        BasisEval be = eval_basis(V, k, sub_reference_point(k, ref));
        Vec2 v{0, 0};
        for (int i = 0; i < be.n; ++i) {
            int dx = V.vdof(k, i, 0), dy = V.vdof(k, i, 1);
            if (dx >= 0) v.x += svcoef[dx] * be.val[i];
            if (dy >= 0) v.y += svcoef[dy] * be.val[i];
        }
        return v;
    }

    Mat2 corr_gradient(int cell, Vec2 ref, const Eigen::VectorXd& svcoef) const {
        const FeSpace& V = ops[cell]->inv.sv.velocity;
        int k = locate_sub_triangle(ref);
        BasisEval be = eval_basis(V, k, sub_reference_point(k, ref));
        Mat2 g{};
        for (int i = 0; i < be.n; ++i) {
            int dx = V.vdof(k, i, 0), dy = V.vdof(k, i, 1);
            if (dx >= 0) {
                g.a11 += svcoef[dx] * be.grad[i].x;
                g.a12 += svcoef[dx] * be.grad[i].y;
            }
            if (dy >= 0) {
                g.a21 += svcoef[dy] * be.grad[i].x;
                g.a22 += svcoef[dy] * be.grad[i].y;
            }
        }
        return g;
    }
};

namespace detail {

struct JacobianKey {
    std::array<long long, 4> q;
    bool operator<(const JacobianKey& o) const { return q < o.q; }
};

inline JacobianKey jacobian_key(const Mat2& j) {
    auto qz = [](double v) { return static_cast<long long>(std::llround(v * 1e14)); };
    return {{qz(j.a11), qz(j.a12), qz(j.a21), qz(j.a22)}};
}

// correction map C for one shape class
inline Eigen::MatrixXd correction_map(const Mesh& mesh, int cell, int ell,
                                      const LocalRightInverse& inv, const FeSpace& vspace) {
    const FeSpace& P = inv.sv.pressure;
    const RefBasis& proj = ref_basis(ell - 2);
    const RefBasis& prb = ref_basis(ell - 1);
    int nloc = 2 * vspace.ndof_cell;
    double area = mesh.cell_area(cell);

    // parent-cell mass matrix of the projection target
    QuadRule rule = make_rule(std::max(1, 2 * ell - 4));
    Eigen::MatrixXd Mpar = Eigen::MatrixXd::Zero(proj.dim, proj.dim);
    for (const QuadPoint& q : rule.points) {
        double vals[6];
        for (int a = 0; a < proj.dim; ++a) vals[a] = proj.value(a, {q.x, q.y});
        for (int a = 0; a < proj.dim; ++a)
            for (int d = 0; d < proj.dim; ++d) Mpar(a, d) += area * q.w * vals[a] * vals[d];
    }
    Eigen::LLT<Eigen::MatrixXd> Mpar_llt(Mpar);

    // projection load per local vector basis, by exact quadrature
    QuadRule lrule = make_rule(std::max(1, 2 * ell - 3));
    Eigen::MatrixXd load = Eigen::MatrixXd::Zero(proj.dim, nloc);
    for (const QuadPoint& q : lrule.points) {
        Vec2 ref{q.x, q.y};
        BasisEval be = eval_basis(vspace, cell, ref);
        for (int a = 0; a < proj.dim; ++a) {
            double pv = area * q.w * proj.value(a, ref);
            for (int k = 0; k < be.n; ++k) {
                load(a, 2 * k + 0) += pv * be.grad[k].x;
                load(a, 2 * k + 1) += pv * be.grad[k].y;
            }
        }
    }
    Eigen::MatrixXd pi = Mpar_llt.solve(load);  // projection coefficients per basis

    // correction data in the local pressure space: nodal values of
    // (projection - divergence) at the P_{ell-1} nodes of each sub-triangle
    Eigen::MatrixXd qdata = Eigen::MatrixXd::Zero(P.dim, nloc);
    for (int t = 0; t < 3; ++t) {
        for (int n = 0; n < prb.dim; ++n) {
            Vec2 pref = parent_reference_point(t, prb.nodes[n]);
            BasisEval be = eval_basis(vspace, cell, pref);
            int row = P.scalar_dof(t, n);
            for (int k = 0; k < be.n; ++k) {
                double projx = 0, projy = 0;
                for (int a = 0; a < proj.dim; ++a) {
                    double pv = proj.value(a, pref);
                    projx += pi(a, 2 * k + 0) * pv;
                    projy += pi(a, 2 * k + 1) * pv;
                }
                qdata(row, 2 * k + 0) += projx - be.grad[k].x;
                qdata(row, 2 * k + 1) += projy - be.grad[k].y;
            }
        }
    }

    Eigen::MatrixXd C(inv.nv, nloc);
    for (int j = 0; j < nloc; ++j) C.col(j) = inv.apply(qdata.col(j));
    return C;
}

// cross stiffness between the local pair and the parent basis
inline Eigen::MatrixXd cross_stiffness(const Mesh& mesh, int cell, int ell,
                                       const LocalRightInverse& inv, const FeSpace& vspace) {
    const FeSpace& V = inv.sv.velocity;
    int nloc = 2 * vspace.ndof_cell;
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(inv.nv, nloc);
    QuadRule rule = make_rule(2 * ell - 2);
    double warea = mesh.cell_area(cell) / 3.0;
    for (int t = 0; t < 3; ++t) {
        for (const QuadPoint& q : rule.points) {
            Vec2 sref{q.x, q.y};
            BasisEval bs = eval_basis(V, t, sref);
            BasisEval bp = eval_basis(vspace, cell, parent_reference_point(t, sref));
            double w = warea * q.w;
            for (int i = 0; i < bs.n; ++i)
                for (int ci = 0; ci < 2; ++ci) {
                    int gi = V.vdof(t, i, ci);
                    if (gi < 0) continue;
                    for (int k = 0; k < bp.n; ++k)
                        X(gi, 2 * k + ci) += w * dot(bs.grad[i], bp.grad[k]);
                }
        }
    }
    return X;
}

}  // namespace detail

inline SmootherRep build_smoother(const Mesh& mesh, const FeSpace& vspace, int ell) {
    if (vspace.mesh != &mesh || vspace.components != 2 || vspace.family != Family::Lagrange ||
        vspace.degree != ell)
        throw std::invalid_argument("smoother needs the vector P_ell space of this mesh");
    SmootherRep rep;
    rep.mesh = &mesh;
    rep.vspace = &vspace;
    rep.ell = ell;
    rep.ops.resize(mesh.n_cells());
    std::map<detail::JacobianKey, std::shared_ptr<const CellOps>> cache;
    for (int c = 0; c < mesh.n_cells(); ++c) {
        auto key = detail::jacobian_key(mesh.cell_jacobian(c));
        auto it = cache.find(key);
        if (it == cache.end()) {
            auto ops = std::make_shared<CellOps>();
            ops->rep_cell = c;
            ops->inv = build_local_inverse(mesh, c, ell);
            ops->C = detail::correction_map(mesh, c, ell, ops->inv, vspace);
            ops->X = detail::cross_stiffness(mesh, c, ell, ops->inv, vspace);
            it = cache.emplace(key, std::move(ops)).first;
        }
        rep.ops[c] = it->second;
    }
    return rep;
}

// A velocity function together with its correction, evaluable anywhere.
struct SmoothedField {
    const SmootherRep* rep = nullptr;
    FeFunction base;
    std::vector<Eigen::VectorXd> corr;  // per-cell correction coefficients

    Vec2 value(int cell, Vec2 ref) const {
        Vec2 v{base.value(cell, ref, 0), base.value(cell, ref, 1)};
        return v + rep->corr_value(cell, ref, corr[cell]);
    }
    Mat2 gradient(int cell, Vec2 ref) const {
        Vec2 g0 = base.gradient(cell, ref, 0), g1 = base.gradient(cell, ref, 1);
        Mat2 g{g0.x, g0.y, g1.x, g1.y};
        Mat2 r = rep->corr_gradient(cell, ref, corr[cell]);
        return {g.a11 + r.a11, g.a12 + r.a12, g.a21 + r.a21, g.a22 + r.a22};
    }
    double divergence(int cell, Vec2 ref) const {
        Mat2 g = gradient(cell, ref);
        return g.a11 + g.a22;
    }
};

inline SmoothedField apply_smoother(const SmootherRep& rep, const FeFunction& v) {
    if (v.space != rep.vspace) throw std::invalid_argument("function not in the smoother's space");
    SmoothedField f;
    f.rep = &rep;
    f.base = v;
    f.corr.resize(rep.mesh->n_cells());
    for (int c = 0; c < rep.mesh->n_cells(); ++c) f.corr[c] = rep.correction(v.coef, c);
    return f;
}

}  // namespace stokes_qopr
