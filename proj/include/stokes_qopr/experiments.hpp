#pragma once

#include <chrono>
#include <optional>

#include "stokes_qopr/analysis.hpp"
#include "stokes_qopr/solver.hpp"

namespace stokes_qopr {

enum class ExperimentKind { Smooth, Quadrature, Locking, Inhomogeneous };

inline const char* experiment_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Smooth: return "smooth";
        case ExperimentKind::Quadrature: return "quadrature";
        case ExperimentKind::Locking: return "locking";
        case ExperimentKind::Inhomogeneous: return "inhomogeneous";
    }
    return "unknown";
}

// Closed-form problem data on the unit square with homogeneous velocity
// boundary values; all derivatives hand-coded.
struct Manufactured {
    VectorField velocity;
    TensorField velocity_gradient;
    ScalarField pressure;
    VectorField body_force;  // -laplace u + grad p (unit viscosity)
    ScalarField divergence;  // div u
    bool inhomogeneous = false;
};

namespace detail {

inline constexpr double tau = 2.0 * 3.14159265358979323846;

// the quartic bump t^2 (1-t)^2 and its derivatives
inline double bump(double t) { return t * t * (1 - t) * (1 - t); }
inline double bump1(double t) { return 2 * t - 6 * t * t + 4 * t * t * t; }
inline double bump2(double t) { return 2 - 12 * t + 12 * t * t; }
inline double bump3(double t) { return -12 + 24 * t; }

// velocity shared by the first three problems: the curl of the product bump,
// u = (X Y', -X' Y), which is divergence free by construction
inline Manufactured curl_bubble_flow(ScalarField p, VectorField grad_p) {
    Manufactured m;
    m.velocity = [](Vec2 x) { return Vec2{bump(x.x) * bump1(x.y), -bump1(x.x) * bump(x.y)}; };
    m.velocity_gradient = [](Vec2 x) {
        return Mat2{bump1(x.x) * bump1(x.y), bump(x.x) * bump2(x.y),
                    -bump2(x.x) * bump(x.y), -bump1(x.x) * bump1(x.y)};
    };
    m.pressure = std::move(p);
    m.body_force = [gp = std::move(grad_p)](Vec2 x) {
        double lap1 = bump2(x.x) * bump1(x.y) + bump(x.x) * bump3(x.y);
        double lap2 = -bump3(x.x) * bump(x.y) - bump1(x.x) * bump2(x.y);
        Vec2 g = gp(x);
        return Vec2{-lap1 + g.x, -lap2 + g.y};
    };
    m.divergence = [](Vec2) { return 0.0; };
    return m;
}

}  // namespace detail

inline Manufactured manufactured(ExperimentKind kind, double alpha = 1.0) {
    using detail::tau;
    switch (kind) {
        case ExperimentKind::Smooth:
            return detail::curl_bubble_flow(
                [](Vec2 x) { return std::sin(tau * x.x) * std::sin(tau * x.y); },
                [](Vec2 x) {
                    return Vec2{tau * std::cos(tau * x.x) * std::sin(tau * x.y),
                                tau * std::sin(tau * x.x) * std::cos(tau * x.y)};
                });
        case ExperimentKind::Quadrature:
            return detail::curl_bubble_flow(
                [alpha](Vec2 x) { return alpha * std::sin(tau * x.x) * std::sin(tau * x.y); },
                [alpha](Vec2 x) {
                    return Vec2{alpha * tau * std::cos(tau * x.x) * std::sin(tau * x.y),
                                alpha * tau * std::sin(tau * x.x) * std::cos(tau * x.y)};
                });
        case ExperimentKind::Locking:
            return detail::curl_bubble_flow(
                [](Vec2 x) { return (x.x - 0.5) * (x.y - 0.5); },
                [](Vec2 x) { return Vec2{x.y - 0.5, x.x - 0.5}; });
        case ExperimentKind::Inhomogeneous: {
            // both velocity components equal the product of parabolas; its
            // divergence is not element-wise constant
            auto w = [](double t) { return t * (1 - t); };
            auto w1 = [](double t) { return 1 - 2 * t; };
            Manufactured m;
            m.velocity = [=](Vec2 x) {
                double v = w(x.x) * w(x.y);
                return Vec2{v, v};
            };
            m.velocity_gradient = [=](Vec2 x) {
                return Mat2{w1(x.x) * w(x.y), w(x.x) * w1(x.y),
                            w1(x.x) * w(x.y), w(x.x) * w1(x.y)};
            };
            m.pressure = [](Vec2 x) { return (x.x - 0.5) * (x.y - 0.5); };
            m.body_force = [=](Vec2 x) {
                double lap = -2 * w(x.y) - 2 * w(x.x);  // same for both components
                return Vec2{-lap + (x.y - 0.5), -lap + (x.x - 0.5)};
            };
            m.divergence = [=](Vec2 x) { return w1(x.x) * w(x.y) + w(x.x) * w1(x.y); };
            m.inhomogeneous = true;
            return m;
        }
    }
    throw std::invalid_argument("unknown experiment");
}

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::Smooth;
    MeshFamily family = MeshFamily::Crisscross;
    int nmin = 0;
    int nmax = 6;
    double eta = 2.0;
    double alpha = 1.0;
    QuadLayout quadrature = QuadLayout::Composite;
    bool use_new = true;  // modified discretization vs plain Galerkin
    SolverKind solver = SolverKind::Direct;
    double tol = 1e-10;
};

inline void validate(const ExperimentSpec& s) {
    if (s.nmin < 0 || s.nmax < s.nmin) throw std::invalid_argument("bad refinement range");
    if (s.use_new && !(s.eta > 1.0))
        throw std::invalid_argument("stabilization weight must exceed 1");
    if (s.alpha != 1.0 && s.kind != ExperimentKind::Quadrature)
        throw std::invalid_argument("pressure scale is a quadrature-study parameter");
}

// One refinement level of a spec: mesh, spaces, operators, solve, errors.
inline ErrorLevel run_level(const ExperimentSpec& spec, const Manufactured& mf, int n,
                            const ErrorLevel* prev) {
    auto t0 = std::chrono::steady_clock::now();
    Mesh mesh = build_family(spec.family, n);
    FeSpace v = build_space(mesh, Family::Lagrange, 2, 2, Constraint::DirichletZero);
    FeSpace p = build_space(mesh, Family::Discontinuous, 0, 1, Constraint::ZeroMean);

    StokesSystem sys;
    sys.velocity = &v;
    sys.pressure = &p;
    sys.B = assemble_divergence(v, p);
    sys.mean = mean_functional(p);
    sys.G = mf.inhomogeneous ? assemble_pressure_load(p, mf.divergence)
                             : Eigen::VectorXd::Zero(p.dim);

    std::optional<SmootherRep> rep;
    if (spec.use_new) {
        rep.emplace(build_smoother(mesh, v, 2));
        sys.A = assemble_new(*rep, spec.eta);
        sys.F = assemble_load(v, mf.body_force, &*rep, LoadMode::Smoothed, spec.quadrature);
    } else {
        sys.A = assemble_standard(v);
        sys.F = assemble_load(v, mf.body_force, nullptr, LoadMode::Plain, spec.quadrature);
    }

    StokesSolution sol = solve(sys, 1.0, spec.solver, spec.tol);

    ErrorLevel lv;
    lv.level = n;
    lv.cells = mesh.n_cells();
    lv.dofs_u = v.dim;
    lv.dofs_p = p.dim;
    lv.h1_velocity = h1_error(sol.velocity, mf.velocity_gradient);
    lv.l2_pressure = l2_pressure_error(sol.pressure, mf.pressure);
    if (prev != nullptr) {
        lv.eoc_h1 = eoc(prev->h1_velocity, lv.h1_velocity);
        lv.eoc_l2 = eoc(prev->l2_pressure, lv.l2_pressure);
    }
    auto t1 = std::chrono::steady_clock::now();
    lv.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return lv;
}

inline ErrorReport run(const ExperimentSpec& spec) {
    validate(spec);
    Manufactured mf = manufactured(spec.kind, spec.alpha);
    ErrorReport report;
    for (int n = spec.nmin; n <= spec.nmax; ++n)
        report.push_back(run_level(spec, mf, n, report.empty() ? nullptr : &report.back()));
    return report;
}

}  // namespace stokes_qopr
