#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <vector>

#include "stokes_qopr/lagrange.hpp"
#include "stokes_qopr/mesh.hpp"
#include "stokes_qopr/quadrature.hpp"

namespace stokes_qopr {

enum class Family { Lagrange, Discontinuous };
enum class Constraint { None, DirichletZero, ZeroMean };

// Scalar or vector polynomial space over a Mesh. dim counts coefficients:
// Dirichlet nodes are eliminated, the zero-mean condition is recorded as a
// constraint and enforced through a multiplier at solve time, so it does not
// shrink the coefficient vector.
struct FeSpace {
    const Mesh* mesh = nullptr;
    Family family = Family::Lagrange;
    int degree = 1;
    int components = 1;
    Constraint constraint = Constraint::None;

    int scalar_dim = 0;
    int dim = 0;
    int ndof_cell = 0;             // local scalar nodes per cell
    std::vector<int> dof_map;      // cell-major: global scalar dof or -1 if eliminated

    int scalar_dof(int cell, int local) const { return dof_map[cell * ndof_cell + local]; }
    int vdof(int cell, int local, int comp) const {
        int s = scalar_dof(cell, local);
        return s < 0 ? -1 : s * components + comp;
    }
    int math_dim() const { return dim - (constraint == Constraint::ZeroMean ? 1 : 0); }
};

inline FeSpace build_space(const Mesh& mesh, Family family, int degree, int components,
                           Constraint constraint) {
    if (components != 1 && components != 2) throw std::invalid_argument("components must be 1 or 2");
    if (family == Family::Lagrange && degree < 1)
        throw std::invalid_argument("continuous spaces need degree >= 1");
    if (degree < 0 || degree > 4) throw std::invalid_argument("degree must be in 0..4");

    FeSpace s;
    s.mesh = &mesh;
    s.family = family;
    s.degree = degree;
    s.components = components;
    s.constraint = constraint;
    s.ndof_cell = ref_basis(degree).dim;
    s.dof_map.resize(static_cast<size_t>(mesh.n_cells()) * s.ndof_cell);

    if (family == Family::Discontinuous) {
        if (constraint == Constraint::DirichletZero)
            throw std::invalid_argument("discontinuous spaces carry no boundary trace");
        for (int c = 0; c < mesh.n_cells(); ++c)
            for (int k = 0; k < s.ndof_cell; ++k) s.dof_map[c * s.ndof_cell + k] = c * s.ndof_cell + k;
        s.scalar_dim = mesh.n_cells() * s.ndof_cell;
        s.dim = components * s.scalar_dim;
        return s;
    }

    // global scalar node ids: vertices, then (degree-1) per edge, then interior
    int per_edge = degree - 1;
    int per_cell = (degree - 1) * (degree - 2) / 2;
    int n_nodes = mesh.n_vertices() + mesh.n_edges() * per_edge + mesh.n_cells() * per_cell;
    std::vector<int> node_dof(n_nodes, 0);
    if (constraint == Constraint::DirichletZero) {
        for (int v = 0; v < mesh.n_vertices(); ++v)
            if (mesh.vertex_boundary[v]) node_dof[v] = -1;
        for (int e = 0; e < mesh.n_edges(); ++e)
            if (mesh.edge_boundary[e])
                for (int t = 0; t < per_edge; ++t) node_dof[mesh.n_vertices() + e * per_edge + t] = -1;
    }
    int next = 0;
    for (int n = 0; n < n_nodes; ++n)
        if (node_dof[n] == 0) node_dof[n] = next++;
    s.scalar_dim = next;
    s.dim = components * s.scalar_dim;

    int edge_base = mesh.n_vertices();
    int cell_base = mesh.n_vertices() + mesh.n_edges() * per_edge;
    for (int c = 0; c < mesh.n_cells(); ++c) {
        int* row = &s.dof_map[static_cast<size_t>(c) * s.ndof_cell];
        for (int k = 0; k < 3; ++k) row[k] = node_dof[mesh.cells[c][k]];
        int local = 3;
        for (int k = 0; k < 3; ++k) {
            int e = mesh.cell_edges[c][k];
            bool forward = mesh.cells[c][k] < mesh.cells[c][(k + 1) % 3];
            for (int t = 0; t < per_edge; ++t) {
                int slot = forward ? t : per_edge - 1 - t;
                row[local++] = node_dof[edge_base + e * per_edge + slot];
            }
        }
        for (int t = 0; t < per_cell; ++t) row[local++] = node_dof[cell_base + c * per_cell + t];
    }
    return s;
}

// Values and physical gradients of all local scalar basis functions of a cell.
struct BasisEval {
    int n = 0;
    std::array<double, 15> val{};
    std::array<Vec2, 15> grad{};
};

inline BasisEval eval_basis(const FeSpace& s, int cell, Vec2 ref) {
    const RefBasis& rb = ref_basis(s.degree);
    BasisEval out;
    out.n = rb.dim;
    rb.eval_all(ref, out.val.data(), out.grad.data());
    Mat2 jinv_t = s.mesh->cell_jacobian(cell).inverse();
    for (int i = 0; i < out.n; ++i) out.grad[i] = jinv_t.apply_t(out.grad[i]);
    return out;
}

struct FeFunction {
    const FeSpace* space = nullptr;
    Eigen::VectorXd coef;

    FeFunction() = default;
    explicit FeFunction(const FeSpace& s) : space(&s), coef(Eigen::VectorXd::Zero(s.dim)) {}
    FeFunction(const FeSpace& s, Eigen::VectorXd c) : space(&s), coef(std::move(c)) {
        if (coef.size() != s.dim) throw std::invalid_argument("coefficient length != space dim");
    }

    double value(int cell, Vec2 ref, int comp = 0) const {
        BasisEval b = eval_basis(*space, cell, ref);
        double v = 0.0;
        for (int i = 0; i < b.n; ++i) {
            int d = space->vdof(cell, i, comp);
            if (d >= 0) v += coef[d] * b.val[i];
        }
        return v;
    }

    Vec2 gradient(int cell, Vec2 ref, int comp = 0) const {
        BasisEval b = eval_basis(*space, cell, ref);
        Vec2 g{0, 0};
        for (int i = 0; i < b.n; ++i) {
            int d = space->vdof(cell, i, comp);
            if (d >= 0) g = g + coef[d] * b.grad[i];
        }
        return g;
    }
};

// Integral of each scalar basis function, the functional behind the
// zero-mean constraint.
inline Eigen::VectorXd mean_functional(const FeSpace& s) {
    if (s.components != 1) throw std::invalid_argument("mean functional is scalar only");
    Eigen::VectorXd m = Eigen::VectorXd::Zero(s.dim);
    QuadRule rule = make_rule(std::max(1, s.degree));
    for (int c = 0; c < s.mesh->n_cells(); ++c) {
        double area2 = 2.0 * s.mesh->cell_area(c);
        for (int k = 0; k < s.ndof_cell; ++k) {
            int d = s.scalar_dof(c, k);
            if (d < 0) continue;
            double v = 0.0;
            for (const QuadPoint& q : rule.points) v += q.w * ref_basis(s.degree).value(k, {q.x, q.y});
            m[d] += 0.5 * area2 * v;
        }
    }
    return m;
}

inline void remove_mean(const FeSpace& s, Eigen::VectorXd& coef) {
    Eigen::VectorXd m = mean_functional(s);
    double volume = m.sum();  // nodal bases: constant 1 has all coefficients 1
    coef.array() -= m.dot(coef) / volume;
}

// Scott-Vogelius pair on the barycentric split of one cell: continuous
// vector P_ell vanishing on the cell boundary over discontinuous mean-free
// P_{ell-1}. The split's boundary is exactly the parent cell boundary, so the
// Dirichlet constraint of build_space realizes the vanishing trace. The mesh
// sits behind a shared_ptr so the spaces' mesh pointers survive copies.
struct LocalSVSpace {
    std::shared_ptr<const Mesh> local_mesh;
    FeSpace velocity;
    FeSpace pressure;
};

inline LocalSVSpace build_local_sv(const Mesh& mesh, int cell, int ell) {
    if (ell < 2) throw std::invalid_argument("local pair needs degree >= 2");
    if (ell > 4) throw std::invalid_argument("local pair supported up to degree 4");
    auto p = mesh.cell_coords(cell);
    Vec2 z{(p[0].x + p[1].x + p[2].x) / 3.0, (p[0].y + p[1].y + p[2].y) / 3.0};
    LocalSVSpace out;
    out.local_mesh = std::make_shared<Mesh>(
        build_from({p[0], p[1], p[2], z}, {{{0, 1, 3}}, {{1, 2, 3}}, {{2, 0, 3}}}));
    out.velocity = build_space(*out.local_mesh, Family::Lagrange, ell, 2, Constraint::DirichletZero);
    out.pressure = build_space(*out.local_mesh, Family::Discontinuous, ell - 1, 1, Constraint::ZeroMean);
    return out;
}

}  // namespace stokes_qopr
