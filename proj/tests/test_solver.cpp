#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "stokes_qopr/solver.hpp"

using namespace stokes_qopr;

namespace {

StokesSystem standard_system(const FeSpace& v, const FeSpace& p, const VectorField& f) {
    StokesSystem s;
    s.velocity = &v;
    s.pressure = &p;
    s.A = assemble_standard(v);
    s.B = assemble_divergence(v, p);
    s.F = assemble_load(v, f, nullptr, LoadMode::Plain, QuadLayout::Standard);
    s.G = Eigen::VectorXd::Zero(p.dim);
    s.mean = mean_functional(p);
    return s;
}

// four triangles around an off-center interior point: unequal cell areas
Mesh skew_mesh() {
    return build_from({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.4, 0.55}},
                      {{{0, 1, 4}}, {{1, 2, 4}}, {{2, 3, 4}}, {{3, 0, 4}}});
}

void plant_and_check(const Mesh& mesh, double mu, double lamstar, unsigned seed) {
    FeSpace v = build_space(mesh, Family::Lagrange, 2, 2, Constraint::DirichletZero);
    FeSpace p = build_space(mesh, Family::Discontinuous, 0, 1, Constraint::ZeroMean);
    StokesSystem sys = standard_system(v, p, [](Vec2) { return Vec2{0, 0}; });

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Eigen::VectorXd ustar(v.dim), pstar(p.dim);
    for (int i = 0; i < v.dim; ++i) ustar[i] = uni(rng);
    for (int i = 0; i < p.dim; ++i) pstar[i] = uni(rng);
    remove_mean(p, pstar);

    sys.F = mu * (sys.A * ustar) + sys.B.transpose() * pstar;
    sys.G = -(sys.B * ustar) - lamstar * sys.mean;

    for (SolverKind kind : {SolverKind::Direct, SolverKind::Schur}) {
        StokesSolution sol = solve(sys, mu, kind);
        CHECK((sol.velocity.coef - ustar).lpNorm<Eigen::Infinity>() <= 1e-8);
        CHECK((sol.pressure.coef - pstar).lpNorm<Eigen::Infinity>() <= 1e-8);
        CHECK(sol.multiplier == Catch::Approx(lamstar).margin(1e-8));
        CHECK(sol.residual <= 1e-9);
        CHECK(std::abs(sys.mean.dot(sol.pressure.coef)) <= 1e-10);
    }
}

}  // namespace

TEST_CASE("zero data yields the zero solution") {
    Mesh mesh = build_crisscross(1);
    FeSpace v = build_space(mesh, Family::Lagrange, 2, 2, Constraint::DirichletZero);
    FeSpace p = build_space(mesh, Family::Discontinuous, 0, 1, Constraint::ZeroMean);
    StokesSystem sys = standard_system(v, p, [](Vec2) { return Vec2{0, 0}; });
    for (SolverKind kind : {SolverKind::Direct, SolverKind::Schur}) {
        StokesSolution sol = solve(sys, 1.0, kind);
        CHECK(sol.velocity.coef.lpNorm<Eigen::Infinity>() <= 1e-12);
        CHECK(sol.pressure.coef.lpNorm<Eigen::Infinity>() <= 1e-12);
        CHECK(std::abs(sol.multiplier) <= 1e-12);
    }
}

TEST_CASE("planted solutions are recovered") {
    plant_and_check(build_crisscross(1), 3.7, 0.3, 61);
    plant_and_check(build_diagonal(2), 1.0, -0.2, 67);
    plant_and_check(skew_mesh(), 2.0, 0.5, 71);
}

TEST_CASE("direct and iterative paths agree on a driven flow") {
    Mesh mesh = build_crisscross(2);
    FeSpace v = build_space(mesh, Family::Lagrange, 2, 2, Constraint::DirichletZero);
    FeSpace p = build_space(mesh, Family::Discontinuous, 0, 1, Constraint::ZeroMean);
    StokesSystem sys = standard_system(v, p, [](Vec2 x) {
        return Vec2{std::sin(2 * x.y), std::cos(3 * x.x)};
    });
    StokesSolution direct = solve(sys, 1.0, SolverKind::Direct);
    StokesSolution schur = solve(sys, 1.0, SolverKind::Schur, 1e-12);
    CHECK(schur.iterations > 0);
    double uscale = direct.velocity.coef.lpNorm<Eigen::Infinity>();
    CHECK((direct.velocity.coef - schur.velocity.coef).lpNorm<Eigen::Infinity>() <= 1e-8 * uscale);
    CHECK((direct.pressure.coef - schur.pressure.coef).lpNorm<Eigen::Infinity>() <=
          1e-8 * direct.pressure.coef.lpNorm<Eigen::Infinity>());
}

TEST_CASE("discrete pressure stability across refinement") {
    for (auto build : {build_crisscross, build_diagonal}) {
        std::vector<double> betas;
        for (int n = 1; n <= 3; ++n) {
            Mesh mesh = build(n);
            FeSpace v = build_space(mesh, Family::Lagrange, 2, 2, Constraint::DirichletZero);
            FeSpace p = build_space(mesh, Family::Discontinuous, 0, 1, Constraint::ZeroMean);
            StokesSystem sys = standard_system(v, p, [](Vec2) { return Vec2{0, 0}; });
            betas.push_back(infsup_probe(sys));
        }
        double lo = *std::min_element(betas.begin(), betas.end());
        double hi = *std::max_element(betas.begin(), betas.end());
        CHECK(lo > 0.05);
        CHECK(hi / lo < 1.2);
    }
}

TEST_CASE("stability probe does not depend on the viscosity") {
    Mesh mesh = build_crisscross(1);
    FeSpace v = build_space(mesh, Family::Lagrange, 2, 2, Constraint::DirichletZero);
    FeSpace p = build_space(mesh, Family::Discontinuous, 0, 1, Constraint::ZeroMean);
    StokesSystem sys = standard_system(v, p, [](Vec2) { return Vec2{0, 0}; });
    double b1 = infsup_probe(sys, 1.0);
    double b100 = infsup_probe(sys, 100.0);
    CHECK(b100 == Catch::Approx(b1).epsilon(1e-9));
}
