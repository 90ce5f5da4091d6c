#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <stdexcept>
#include <vector>

#include "stokes_qopr/core.hpp"

namespace stokes_qopr {

// Nodal Lagrange basis on the reference triangle for degrees 0..4, expressed
// in the monomial basis through the inverse of the node Vandermonde matrix.
// Node order: the 3 vertices, then for each edge k (joining vertices k and
// k+1 mod 3) the degree-1 interior lattice nodes walking from vertex k, then
// interior lattice nodes by row. Degree 0 is the single constant.
struct RefBasis {
    int degree = 0;
    int dim = 0;
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 2>> mono;  // exponent pairs
    Eigen::MatrixXd coef;                  // coef(m, i): monomial weights of basis i

    double value(int i, Vec2 p) const {
        double px[5], py[5];
        powers(p, px, py);
        double s = 0.0;
        for (int m = 0; m < dim; ++m) s += coef(m, i) * px[mono[m][0]] * py[mono[m][1]];
        return s;
    }

    Vec2 grad(int i, Vec2 p) const {
        double px[5], py[5];
        powers(p, px, py);
        Vec2 g{0, 0};
        for (int m = 0; m < dim; ++m) {
            auto [a, b] = mono[m];
            if (a > 0) g.x += coef(m, i) * a * px[a - 1] * py[b];
            if (b > 0) g.y += coef(m, i) * b * px[a] * py[b - 1];
        }
        return g;
    }

    void eval_all(Vec2 p, double* vals, Vec2* grads) const {
        double px[5], py[5];
        powers(p, px, py);
        for (int i = 0; i < dim; ++i) {
            vals[i] = 0.0;
            grads[i] = {0, 0};
        }
        for (int m = 0; m < dim; ++m) {
            auto [a, b] = mono[m];
            double v = px[a] * py[b];
            double gx = a > 0 ? a * px[a - 1] * py[b] : 0.0;
            double gy = b > 0 ? b * px[a] * py[b - 1] : 0.0;
            for (int i = 0; i < dim; ++i) {
                double c = coef(m, i);
                vals[i] += c * v;
                grads[i].x += c * gx;
                grads[i].y += c * gy;
            }
        }
    }

private:
    static void powers(Vec2 p, double* px, double* py) {
        px[0] = py[0] = 1.0;
        for (int k = 1; k < 5; ++k) {
            px[k] = px[k - 1] * p.x;
            py[k] = py[k - 1] * p.y;
        }
    }
};

namespace detail {

inline RefBasis make_ref_basis(int degree) {
    RefBasis rb;
    rb.degree = degree;
    if (degree == 0) {
        rb.dim = 1;
        rb.nodes = {{1.0 / 3.0, 1.0 / 3.0}};
        rb.mono = {{0, 0}};
        rb.coef = Eigen::MatrixXd::Ones(1, 1);
        return rb;
    }
    double h = 1.0 / degree;
    rb.nodes = {{0, 0}, {1, 0}, {0, 1}};
    const Vec2 vert[3] = {{0, 0}, {1, 0}, {0, 1}};
    for (int k = 0; k < 3; ++k) {
        Vec2 a = vert[k], b = vert[(k + 1) % 3];
        for (int t = 1; t < degree; ++t) rb.nodes.push_back(a + (t * h) * (b - a));
    }
    for (int bRow = 1; bRow <= degree - 2; ++bRow)
        for (int a = 1; a + bRow <= degree - 1; ++a) rb.nodes.push_back({a * h, bRow * h});
    for (int t = 0; t <= degree; ++t)
        for (int a = t; a >= 0; --a) rb.mono.push_back({a, t - a});
    rb.dim = static_cast<int>(rb.nodes.size());
    Eigen::MatrixXd V(rb.dim, rb.dim);
    for (int n = 0; n < rb.dim; ++n)
        for (int m = 0; m < rb.dim; ++m)
            V(n, m) = std::pow(rb.nodes[n].x, rb.mono[m][0]) * std::pow(rb.nodes[n].y, rb.mono[m][1]);
    rb.coef = V.fullPivLu().inverse();
    return rb;
}

}  // namespace detail

inline const RefBasis& ref_basis(int degree) {
    if (degree < 0 || degree > 4) throw std::invalid_argument("reference basis degree must be in 0..4");
    static const std::map<int, RefBasis> cache = [] {
        std::map<int, RefBasis> m;
        for (int d = 0; d <= 4; ++d) m.emplace(d, detail::make_ref_basis(d));
        return m;
    }();
    return cache.at(degree);
}

}  // namespace stokes_qopr
