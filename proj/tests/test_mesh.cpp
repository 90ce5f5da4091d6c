#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <set>

#include "stokes_qopr/mesh.hpp"

using namespace stokes_qopr;

TEST_CASE("diagonal family counts") {
    CHECK(build_diagonal(0).n_cells() == 2);
    CHECK(build_diagonal(0).n_vertices() == 4);
    CHECK(build_diagonal(2).n_cells() == 32);
    CHECK(build_diagonal(2).n_vertices() == 25);
    for (int N = 0; N <= 4; ++N) CHECK(build_diagonal(N).n_cells() == 2 * (1 << (2 * N)));
}

TEST_CASE("crisscross family counts") {
    CHECK(build_crisscross(0).n_cells() == 4);
    CHECK(build_crisscross(0).n_vertices() == 5);
    CHECK(build_crisscross(2).n_cells() == 64);
    CHECK(build_crisscross(2).n_vertices() == 41);
    for (int N = 0; N <= 4; ++N) {
        Mesh m = build_crisscross(N);
        int n = 1 << N;
        CHECK(m.n_cells() == 4 * n * n);
        CHECK(m.n_vertices() == (n + 1) * (n + 1) + n * n);
    }
}

TEST_CASE("crisscross cells are congruent quarters of subsquares") {
    Mesh m = build_crisscross(3);
    for (int c = 0; c < m.n_cells(); ++c)
        CHECK(m.cell_area(c) == Catch::Approx(1.0 / 256.0).epsilon(1e-14));
}

TEST_CASE("Euler count against independently enumerated topology") {
    for (const Mesh& m : {build_diagonal(1), build_diagonal(3), build_crisscross(2)}) {
        std::set<std::array<int, 2>> edge_set;
        for (auto& c : m.cells)
            for (int k = 0; k < 3; ++k) {
                int a = c[k], b = c[(k + 1) % 3];
                edge_set.insert({std::min(a, b), std::max(a, b)});
            }
        CHECK(m.n_edges() == static_cast<int>(edge_set.size()));
        CHECK(m.n_vertices() - static_cast<int>(edge_set.size()) + m.n_cells() == 1);
    }
    Mesh m = build_diagonal(1);
    CHECK(m.n_vertices() == 9);
    CHECK(m.n_edges() == 16);
    CHECK(m.n_cells() == 8);
}

TEST_CASE("edge adjacency and boundary placement") {
    for (const Mesh& m : {build_diagonal(2), build_crisscross(2)}) {
        for (int e = 0; e < m.n_edges(); ++e) {
            CHECK(m.edge_cells[e][0] >= 0);
            if (m.edge_boundary[e]) {
                CHECK(m.edge_cells[e][1] == -1);
                Vec2 a = m.vertices[m.edges[e][0]], b = m.vertices[m.edges[e][1]];
                Vec2 mid = 0.5 * (a + b);
                bool on_box = mid.x == 0.0 || mid.x == 1.0 || mid.y == 0.0 || mid.y == 1.0;
                CHECK(on_box);
            } else {
                CHECK(m.edge_cells[e][1] >= 0);
            }
        }
    }
}

TEST_CASE("all cells positively oriented") {
    for (const Mesh& m : {build_diagonal(3), build_crisscross(3)})
        for (int c = 0; c < m.n_cells(); ++c) CHECK(m.cell_area(c) > 0.0);
}

TEST_CASE("shape parameter is refinement independent") {
    double ref = 2.0 + 2.0 * std::sqrt(2.0);
    for (int N = 0; N <= 4; ++N) {
        CHECK(build_diagonal(N).shape_parameter == Catch::Approx(ref).margin(1e-12));
        CHECK(build_crisscross(N).shape_parameter == Catch::Approx(ref).margin(1e-12));
    }
}

TEST_CASE("barycentric refinement of the reference triangle") {
    Mesh m = build_from({{0, 0}, {1, 0}, {0, 1}}, {{{0, 1, 2}}});
    RefinedCell r = barycentric_refine(m, 0);
    CHECK(r.barycenter.x == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(r.barycenter.y == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
    for (int k = 0; k < 3; ++k) CHECK(r.sub_area(k) == Catch::Approx(1.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("barycentric refinement partitions every cell") {
    Mesh m = build_crisscross(2);
    for (int c = 0; c < m.n_cells(); ++c) {
        RefinedCell r = barycentric_refine(m, c);
        double sum = r.sub_area(0) + r.sub_area(1) + r.sub_area(2);
        CHECK(sum == Catch::Approx(m.cell_area(c)).epsilon(1e-14));
        for (int k = 0; k < 3; ++k) CHECK(r.sub_area(k) > 0.0);
    }
}

TEST_CASE("reference sub-triangle lookup is consistent with its maps") {
    const Vec2 pts[] = {{0.1, 0.1}, {0.6, 0.2}, {0.2, 0.6}, {1.0 / 3.0, 1.0 / 3.0}, {0.05, 0.9}};
    for (Vec2 q : pts) {
        int k = locate_sub_triangle(q);
        Vec2 s = sub_reference_point(k, q);
        CHECK(s.x >= -1e-12);
        CHECK(s.y >= -1e-12);
        CHECK(s.x + s.y <= 1.0 + 1e-12);
        Vec2 back = parent_reference_point(k, s);
        CHECK(back.x == Catch::Approx(q.x).margin(1e-14));
        CHECK(back.y == Catch::Approx(q.y).margin(1e-14));
    }
}

TEST_CASE("clockwise cells are rejected") {
    CHECK_THROWS_AS(build_from({{0, 0}, {1, 0}, {0, 1}}, {{{0, 2, 1}}}), std::invalid_argument);
}

TEST_CASE("dump and load round trip") {
    Mesh m = build_crisscross(1);
    std::string path = "mesh_roundtrip.txt";
    dump_mesh(m, path);
    Mesh r = load_mesh(path);
    REQUIRE(r.n_vertices() == m.n_vertices());
    REQUIRE(r.n_cells() == m.n_cells());
    CHECK(r.n_edges() == m.n_edges());
    for (int v = 0; v < m.n_vertices(); ++v) {
        CHECK(r.vertices[v].x == m.vertices[v].x);
        CHECK(r.vertices[v].y == m.vertices[v].y);
        CHECK(r.vertex_boundary[v] == m.vertex_boundary[v]);
    }
    for (int c = 0; c < m.n_cells(); ++c) CHECK(r.cells[c] == m.cells[c]);
    std::remove(path.c_str());
}

TEST_CASE("loading a malformed file fails") {
    std::string path = "mesh_bad.txt";
    {
        std::ofstream out(path);
        out << "3 1\n";
    }
    CHECK_THROWS_AS(load_mesh(path), std::runtime_error);
    std::remove(path.c_str());
}
