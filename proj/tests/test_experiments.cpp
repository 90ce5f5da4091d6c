#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "stokes_qopr/report.hpp"

using namespace stokes_qopr;

TEST_CASE("manufactured fields match frozen samples") {
    const Vec2 a{0.3, 0.7}, c{0.5, 0.5};

    Manufactured s = manufactured(ExperimentKind::Smooth);
    CHECK(s.velocity(a).x == Catch::Approx(-0.0074088).margin(1e-15));
    CHECK(s.velocity(a).y == Catch::Approx(-0.0074088).margin(1e-15));
    CHECK(s.pressure(a) == Catch::Approx(-0.90450849718747371).margin(1e-14));
    CHECK(s.body_force(a).x == Catch::Approx(1.5475418304904568).margin(1e-12));
    CHECK(s.body_force(a).y == Catch::Approx(-2.1456218304904568).margin(1e-12));
    CHECK(norm(s.velocity(c)) <= 1e-15);
    CHECK(std::abs(s.pressure(c)) <= 1e-15);
    CHECK(norm(s.body_force(c)) <= 1e-12);

    Manufactured l = manufactured(ExperimentKind::Locking);
    CHECK(l.body_force(a).x == Catch::Approx(-0.09904).margin(1e-14));
    CHECK(l.body_force(a).y == Catch::Approx(-0.49904).margin(1e-14));
    Mat2 g = l.velocity_gradient(a);
    CHECK(g.a11 == Catch::Approx(-0.028224).margin(1e-15));
    CHECK(g.a12 == Catch::Approx(-0.022932).margin(1e-15));
    CHECK(g.a21 == Catch::Approx(0.022932).margin(1e-15));
    CHECK(g.a22 == Catch::Approx(0.028224).margin(1e-15));

    Manufactured i = manufactured(ExperimentKind::Inhomogeneous);
    CHECK(i.velocity(a).x == Catch::Approx(0.0441).margin(1e-15));
    CHECK(i.velocity(a).y == Catch::Approx(0.0441).margin(1e-15));
    CHECK(i.divergence(a) == Catch::Approx(0.0).margin(1e-15));
    CHECK(i.body_force(a).x == Catch::Approx(1.04).margin(1e-14));
    CHECK(i.body_force(a).y == Catch::Approx(0.64).margin(1e-14));
    CHECK(i.inhomogeneous);

    // the pressure scale multiplies only the pressure part of the force
    Manufactured q = manufactured(ExperimentKind::Quadrature, 1000.0);
    double gpx = 1.5475418304904568 - (-0.29904);
    CHECK(q.pressure(a) == Catch::Approx(1000.0 * -0.90450849718747371).epsilon(1e-12));
    CHECK(q.body_force(a).x == Catch::Approx(-0.29904 + 1000.0 * gpx).epsilon(1e-12));
}

TEST_CASE("manufactured velocities vanish on the boundary") {
    for (ExperimentKind k : {ExperimentKind::Smooth, ExperimentKind::Quadrature,
                             ExperimentKind::Locking, ExperimentKind::Inhomogeneous}) {
        Manufactured m = manufactured(k, k == ExperimentKind::Quadrature ? 1000.0 : 1.0);
        for (int s = 0; s < 10; ++s) {
            double t = (s + 0.5) / 10.0;
            for (Vec2 x : {Vec2{t, 0}, Vec2{t, 1}, Vec2{0, t}, Vec2{1, t}})
                CHECK(norm(m.velocity(x)) <= 1e-14);
        }
    }
}

TEST_CASE("closure derivatives are mutually consistent") {
    std::mt19937 rng(101);
    std::uniform_real_distribution<double> uni(0.05, 0.95);
    for (ExperimentKind k : {ExperimentKind::Smooth, ExperimentKind::Quadrature,
                             ExperimentKind::Locking, ExperimentKind::Inhomogeneous}) {
        Manufactured m = manufactured(k, k == ExperimentKind::Quadrature ? 1000.0 : 1.0);

        for (int t = 0; t < 50; ++t) {
            Vec2 x{uni(rng), uni(rng)};
            Mat2 g = m.velocity_gradient(x);
            CHECK(std::abs(g.a11 + g.a22 - m.divergence(x)) <= 1e-12);
        }

        double h = 1e-6;
        for (int t = 0; t < 5; ++t) {
            Vec2 x{uni(rng), uni(rng)};
            Mat2 g = m.velocity_gradient(x);
            Vec2 dx = 0.5 / h * (m.velocity({x.x + h, x.y}) - m.velocity({x.x - h, x.y}));
            Vec2 dy = 0.5 / h * (m.velocity({x.x, x.y + h}) - m.velocity({x.x, x.y - h}));
            CHECK(g.a11 == Catch::Approx(dx.x).margin(1e-6));
            CHECK(g.a12 == Catch::Approx(dy.x).margin(1e-6));
            CHECK(g.a21 == Catch::Approx(dx.y).margin(1e-6));
            CHECK(g.a22 == Catch::Approx(dy.y).margin(1e-6));
        }

        // momentum balance: f = -laplace u + grad p via finite differences
        double H = 1e-4;
        for (int t = 0; t < 20; ++t) {
            Vec2 x{uni(rng), uni(rng)};
            auto u = m.velocity;
            Vec2 lap = 1.0 / (H * H) *
                       (u({x.x + H, x.y}) + u({x.x - H, x.y}) + u({x.x, x.y + H}) +
                        u({x.x, x.y - H}) - 4.0 * u(x));
            double hp = 1e-6;
            Vec2 gp{(m.pressure({x.x + hp, x.y}) - m.pressure({x.x - hp, x.y})) / (2 * hp),
                    (m.pressure({x.x, x.y + hp}) - m.pressure({x.x, x.y - hp})) / (2 * hp)};
            Vec2 f = m.body_force(x);
            double scale = std::max(1.0, norm(f));
            CHECK(norm(f - (-1.0 * lap + gp)) <= 1e-4 * scale);
        }
    }
}

TEST_CASE("pipeline smoke run") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::Smooth;
    spec.nmin = 0;
    spec.nmax = 2;
    ErrorReport r = run(spec);
    REQUIRE(r.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(r[i].level == i);
        CHECK(r[i].cells == 4 * (1 << (2 * i)));
        CHECK(r[i].h1_velocity > 0.0);
        CHECK(r[i].l2_pressure > 0.0);
        CHECK(r[i].wall_ms >= 0.0);
    }
    CHECK(std::isnan(r[0].eoc_h1));
    CHECK(!std::isnan(r[1].eoc_h1));
    CHECK(r[2].h1_velocity < r[1].h1_velocity);

    ExperimentSpec bad = spec;
    bad.nmax = -1;
    CHECK_THROWS_AS(run(bad), std::invalid_argument);
    bad = spec;
    bad.eta = 1.0;
    CHECK_THROWS_AS(run(bad), std::invalid_argument);
    bad = spec;
    bad.alpha = 7.0;
    CHECK_THROWS_AS(run(bad), std::invalid_argument);  // not the quadrature study
    bad = spec;
    bad.kind = ExperimentKind::Quadrature;
    bad.alpha = 7.0;
    CHECK_NOTHROW(validate(bad));
}

TEST_CASE("velocity errors shed the pressure scale under refinement") {
    // the rule is exact only for polynomial data, so the sine pressure leaves
    // a quadrature remainder that the scale amplifies; it dies out fast
    ExperimentSpec spec;
    spec.kind = ExperimentKind::Quadrature;
    spec.nmin = 0;
    spec.nmax = 3;
    spec.quadrature = QuadLayout::Composite;
    spec.alpha = 1.0;
    ErrorReport r1 = run(spec);
    spec.alpha = 1000.0;
    ErrorReport r2 = run(spec);
    std::vector<double> gap;
    for (size_t i = 0; i < r1.size(); ++i)
        gap.push_back(std::abs(r2[i].h1_velocity - r1[i].h1_velocity) / r1[i].h1_velocity);
    CAPTURE(gap[0], gap[1], gap[2], gap[3]);
    for (size_t i = 1; i < gap.size(); ++i) CHECK(gap[i] <= 0.25 * gap[i - 1]);
    CHECK(gap[3] <= 1e-6);
}

TEST_CASE("form defect of computed solutions decays under refinement") {
    Manufactured mf = manufactured(ExperimentKind::Smooth);
    std::vector<double> probes;
    for (int n = 2; n <= 4; ++n) {
        Mesh mesh = build_crisscross(n);
        FeSpace v = build_space(mesh, Family::Lagrange, 2, 2, Constraint::DirichletZero);
        FeSpace p = build_space(mesh, Family::Discontinuous, 0, 1, Constraint::ZeroMean);
        SmootherRep rep = build_smoother(mesh, v, 2);
        StokesSystem sys;
        sys.velocity = &v;
        sys.pressure = &p;
        sys.A = assemble_new(rep, 2.0);
        sys.B = assemble_divergence(v, p);
        sys.F = assemble_load(v, mf.body_force, &rep, LoadMode::Smoothed, QuadLayout::Composite);
        sys.G = Eigen::VectorXd::Zero(p.dim);
        sys.mean = mean_functional(p);
        StokesSolution sol = solve(sys);
        Eigen::SparseMatrix<double> Astd = assemble_standard(v);
        probes.push_back(consistency_probe(rep, Astd, sys.B, sol.velocity.coef, 2.0));
    }
    CAPTURE(probes[0], probes[1], probes[2]);
    CHECK(eoc(probes[0], probes[1]) >= 0.5);
    CHECK(eoc(probes[1], probes[2]) >= 0.5);
}

TEST_CASE("csv rows are identical across thread counts") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::Inhomogeneous;
    spec.nmin = 0;
    spec.nmax = 2;
    auto run_with_threads = [&](const char* n) {
        setenv("STOKES_QOPR_THREADS", n, 1);
        ErrorReport r = run(spec);
        unsetenv("STOKES_QOPR_THREADS");
        std::string csv = csv_table(spec, r);
        // timing column is the one nondeterministic field
        std::istringstream in(csv);
        std::string line, out;
        while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
        return out;
    };
    std::string serial = run_with_threads("1");
    std::string parallel = run_with_threads("4");
    CHECK(serial == parallel);
    CHECK(serial.find("inhomogeneous,crisscross,0,4,") != std::string::npos);
}

TEST_CASE("csv formatting") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::Locking;
    spec.family = MeshFamily::Diagonal;
    spec.eta = 512.0;
    spec.use_new = true;
    ErrorLevel lv;
    lv.level = 3;
    lv.cells = 128;
    lv.dofs_u = 450;
    lv.dofs_p = 128;
    lv.h1_velocity = 1.234567e-3;
    lv.l2_pressure = 9.87654e-2;
    lv.wall_ms = 12.3456;
    CHECK(csv_line(spec, lv) ==
          "locking,diagonal,3,128,450,128,512,1,composite,new,"
          "1.234567e-03,9.876540e-02,,,12.346");
    lv.eoc_h1 = 1.0;
    lv.eoc_l2 = 0.5;
    CHECK(csv_line(spec, lv).find(",1.00,0.50,") != std::string::npos);
    CHECK(csv_header().rfind("experiment,family,N,cells", 0) == 0);
}

TEST_CASE("plot data emission") {
    ExperimentSpec spec;
    spec.nmin = 0;
    spec.nmax = 2;
    ErrorReport r = run(spec);
    emit_plotdata(r, "plotdata_test");
    std::ifstream in("plotdata_test.h1.dat");
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("#", 0) == 0);
    int cells;
    double err, r05, r1;
    std::vector<std::array<double, 4>> rows;
    while (in >> cells >> err >> r05 >> r1) rows.push_back({double(cells), err, r05, r1});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0][1] == Catch::Approx(r[0].h1_velocity).epsilon(1e-5));
    CHECK(rows[0][2] == Catch::Approx(rows[0][1]).epsilon(1e-5));  // anchored
    CHECK(rows[2][3] == Catch::Approx(rows[0][1] / 16.0).epsilon(1e-5));
    CHECK(rows[2][2] == Catch::Approx(rows[0][1] / 4.0).epsilon(1e-5));

    CHECK_THROWS_AS(emit_plotdata(ErrorReport{}, "plotdata_none"), std::invalid_argument);
}
