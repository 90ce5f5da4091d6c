#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "stokes_qopr/mesh.hpp"

namespace stokes_qopr {

// Quadrature point on the reference triangle conv{(0,0),(1,0),(0,1)} in
// (x, y) = (lambda2, lambda3) coordinates. Weights are normalized to sum to 1;
// the integral over a triangle of area |T| is |T| * sum w_i f(x_i).
struct QuadPoint {
    double x, y, w;
};

struct QuadRule {
    int degree = 0;
    std::vector<QuadPoint> points;
};

// The same rule mapped onto each of the 3 barycentric sub-triangles of a
// cell; exact for functions that are polynomial per sub-triangle.
struct CompositeRule {
    QuadRule base;
};

namespace detail {

// Fully symmetric orbits: C = centroid, S(a) = permutations of
// (1-2a, a, a), G(a, b) = permutations of (a, b, 1-a-b).
inline void orbit_c(std::vector<QuadPoint>& pts, double w) {
    pts.push_back({1.0 / 3.0, 1.0 / 3.0, w});
}

inline void orbit_s(std::vector<QuadPoint>& pts, double a, double w) {
    double b = 1.0 - 2.0 * a;
    pts.push_back({a, a, w});
    pts.push_back({b, a, w});
    pts.push_back({a, b, w});
}

inline void orbit_g(std::vector<QuadPoint>& pts, double a, double b, double w) {
    double c = 1.0 - a - b;
    pts.push_back({b, c, w});
    pts.push_back({c, a, w});
    pts.push_back({a, b, w});
    pts.push_back({c, b, w});
    pts.push_back({a, c, w});
    pts.push_back({b, a, w});
}

}  // namespace detail

// Symmetric positive-weight Gauss rules. Degrees 1, 2 and 5 are classical
// closed forms; 4, 6, 8, 9 and 10 start from the Dunavant tables and were
// re-polished by Newton iteration on the monomial moment equations to full
// double precision. The published degree-7 set has a negative weight, so
// degree-3 and degree-7 requests are served by the next rule up.
inline QuadRule make_rule(int degree) {
    if (degree < 1 || degree > 10) throw std::invalid_argument("quadrature degree must be in 1..10");
    QuadRule r;
    auto& p = r.points;
    switch (degree) {
        case 1:
            r.degree = 1;
            detail::orbit_c(p, 1.0);
            break;
        case 2:
            r.degree = 2;
            detail::orbit_s(p, 1.0 / 6.0, 1.0 / 3.0);
            break;
        case 3:
        case 4:
            r.degree = 4;
            detail::orbit_s(p, 0.44594849091596489, 0.22338158967801147);
            detail::orbit_s(p, 0.091576213509770743, 0.10995174365532187);
            break;
        case 5:
            r.degree = 5;
            detail::orbit_c(p, 0.225);
            detail::orbit_s(p, 0.47014206410511509, 0.13239415278850618);
            detail::orbit_s(p, 0.10128650732345634, 0.12593918054482715);
            break;
        case 6:
            r.degree = 6;
            detail::orbit_s(p, 0.24928674517091042, 0.11678627572637937);
            detail::orbit_s(p, 0.063089014491502228, 0.050844906370206817);
            detail::orbit_g(p, 0.053145049844816947, 0.31035245103378441, 0.082851075618373575);
            break;
        case 7:
        case 8:
            r.degree = 8;
            detail::orbit_c(p, 0.14431560767778717);
            detail::orbit_s(p, 0.45929258829272316, 0.095091634267284625);
            detail::orbit_s(p, 0.17056930775176021, 0.10321737053471825);
            detail::orbit_s(p, 0.050547228317030975, 0.03245849762319808);
            detail::orbit_g(p, 0.0083947774099576053, 0.26311282963463811, 0.027230314174434994);
            break;
        case 9:
            r.degree = 9;
            detail::orbit_c(p, 0.097135796282798834);
            detail::orbit_s(p, 0.48968251919873763, 0.031334700227139071);
            detail::orbit_s(p, 0.43708959149293664, 0.077827541004774279);
            detail::orbit_s(p, 0.18820353561903273, 0.079647738927210253);
            detail::orbit_s(p, 0.04472951339445271, 0.025577675658698031);
            detail::orbit_g(p, 0.036838412054736284, 0.2219629891607657, 0.043283539377289377);
            break;
        case 10:
            r.degree = 10;
            detail::orbit_c(p, 0.09081799038275358);
            detail::orbit_s(p, 0.48557763338365738, 0.036725957756466705);
            detail::orbit_s(p, 0.10948157548503705, 0.045321059435527935);
            detail::orbit_g(p, 0.14170721941487995, 0.30793983876412095, 0.072757916845420109);
            detail::orbit_g(p, 0.025003534762686386, 0.24667256063990269, 0.028327242531057485);
            detail::orbit_g(p, 0.0095408154002994576, 0.066803251012200266, 0.0094216669637328235);
            break;
    }
    return r;
}

// Integral of f over an arbitrary triangle given by its vertex coordinates.
template <class F>
double integrate_tri(const std::array<Vec2, 3>& tri, F&& f, const QuadRule& rule) {
    double area = 0.5 * cross(tri[1] - tri[0], tri[2] - tri[0]);
    double sum = 0.0;
    for (const QuadPoint& q : rule.points) {
        Vec2 x = tri[0] + q.x * (tri[1] - tri[0]) + q.y * (tri[2] - tri[0]);
        sum += q.w * f(x);
    }
    return area * sum;
}

template <class F>
double integrate_cell(const Mesh& mesh, int cell, F&& f, const QuadRule& rule) {
    return integrate_tri(mesh.cell_coords(cell), f, rule);
}

template <class F>
double integrate_cell(const Mesh& mesh, int cell, F&& f, const CompositeRule& rule) {
    RefinedCell r = barycentric_refine(mesh, cell);
    double sum = 0.0;
    for (int k = 0; k < 3; ++k) sum += integrate_tri(r.tri[k], f, rule.base);
    return sum;
}

}  // namespace stokes_qopr
