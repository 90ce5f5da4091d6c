#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stokes_qopr/core.hpp"

namespace stokes_qopr {

// Face-to-face triangulation of a simply connected planar domain.
// Cells are stored counterclockwise; edges as sorted vertex pairs.
struct Mesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> cells;
    std::vector<std::array<int, 2>> edges;       // v0 < v1
    std::vector<std::array<int, 2>> edge_cells;  // adjacent cells, second = -1 on boundary
    std::vector<std::array<int, 3>> cell_edges;  // edge k joins local vertices k and (k+1)%3
    std::vector<unsigned char> vertex_boundary;
    std::vector<unsigned char> edge_boundary;
    double shape_parameter = 0.0;  // max over cells of diameter / inradius

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_cells() const { return static_cast<int>(cells.size()); }
    int n_edges() const { return static_cast<int>(edges.size()); }

    std::array<Vec2, 3> cell_coords(int c) const {
        return {vertices[cells[c][0]], vertices[cells[c][1]], vertices[cells[c][2]]};
    }
    // affine map x = v0 + J * xref from conv{(0,0),(1,0),(0,1)}
    Mat2 cell_jacobian(int c) const {
        auto p = cell_coords(c);
        return {p[1].x - p[0].x, p[2].x - p[0].x, p[1].y - p[0].y, p[2].y - p[0].y};
    }
    double cell_area(int c) const { return 0.5 * cell_jacobian(c).det(); }
    Vec2 map_to_physical(int c, Vec2 ref) const {
        auto p = cell_coords(c);
        return p[0] + cell_jacobian(c).apply(ref);
    }
    Vec2 map_to_reference(int c, Vec2 phys) const {
        auto p = cell_coords(c);
        return cell_jacobian(c).inverse().apply(phys - p[0]);
    }
};

namespace detail {

inline double triangle_aspect(const std::array<Vec2, 3>& p) {
    double a = norm(p[1] - p[0]), b = norm(p[2] - p[1]), c = norm(p[0] - p[2]);
    double area = 0.5 * cross(p[1] - p[0], p[2] - p[0]);
    double inradius = area / (0.5 * (a + b + c));
    return std::max({a, b, c}) / inradius;
}

}  // namespace detail

// Derives edges, adjacency, boundary flags and the shape parameter from raw
// vertex/cell arrays. Throws if a cell is degenerate or clockwise, or if an
// edge is shared by more than two cells.
inline Mesh build_from(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> cells) {
    Mesh m;
    m.vertices = std::move(vertices);
    m.cells = std::move(cells);

    std::map<std::array<int, 2>, int> edge_index;
    m.cell_edges.resize(m.cells.size());
    for (int c = 0; c < m.n_cells(); ++c) {
        auto p = m.cell_coords(c);
        if (cross(p[1] - p[0], p[2] - p[0]) <= 0.0)
            throw std::invalid_argument("cell " + std::to_string(c) + " is not counterclockwise");
        for (int k = 0; k < 3; ++k) {
            int a = m.cells[c][k], b = m.cells[c][(k + 1) % 3];
            std::array<int, 2> key{std::min(a, b), std::max(a, b)};
            auto it = edge_index.find(key);
            int e;
            if (it == edge_index.end()) {
                e = m.n_edges();
                edge_index.emplace(key, e);
                m.edges.push_back(key);
                m.edge_cells.push_back({c, -1});
            } else {
                e = it->second;
                if (m.edge_cells[e][1] != -1)
                    throw std::invalid_argument("edge shared by more than two cells");
                m.edge_cells[e][1] = c;
            }
            m.cell_edges[c][k] = e;
        }
    }

    m.edge_boundary.resize(m.edges.size());
    m.vertex_boundary.assign(m.vertices.size(), 0);
    for (int e = 0; e < m.n_edges(); ++e) {
        m.edge_boundary[e] = (m.edge_cells[e][1] == -1) ? 1 : 0;
        if (m.edge_boundary[e]) {
            m.vertex_boundary[m.edges[e][0]] = 1;
            m.vertex_boundary[m.edges[e][1]] = 1;
        }
    }

    m.shape_parameter = 0.0;
    for (int c = 0; c < m.n_cells(); ++c)
        m.shape_parameter = std::max(m.shape_parameter, detail::triangle_aspect(m.cell_coords(c)));
    return m;
}

// Unit square split into 2^N x 2^N subsquares, each cut by the positive-slope
// diagonal. Vertices numbered lexicographically by (row, column).
inline Mesh build_diagonal(int N) {
    if (N < 0) throw std::invalid_argument("refinement level must be nonnegative");
    int n = 1 << N;
    double h = 1.0 / n;
    std::vector<Vec2> verts;
    verts.reserve(static_cast<size_t>(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) verts.push_back({i * h, j * h});
    auto vid = [n](int i, int j) { return j * (n + 1) + i; };
    std::vector<std::array<int, 3>> cells;
    cells.reserve(static_cast<size_t>(2) * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            cells.push_back({v00, v10, v11});
            cells.push_back({v00, v11, v01});
        }
    }
    return build_from(std::move(verts), std::move(cells));
}

// Unit square subsquares cut by both diagonals; centers appended after the
// grid vertices, subsquares in (row, column) order.
inline Mesh build_crisscross(int N) {
    if (N < 0) throw std::invalid_argument("refinement level must be nonnegative");
    int n = 1 << N;
    double h = 1.0 / n;
    std::vector<Vec2> verts;
    verts.reserve(static_cast<size_t>(n + 1) * (n + 1) + static_cast<size_t>(n) * n);
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) verts.push_back({i * h, j * h});
    int grid = (n + 1) * (n + 1);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) verts.push_back({(i + 0.5) * h, (j + 0.5) * h});
    auto vid = [n](int i, int j) { return j * (n + 1) + i; };
    auto cid = [n, grid](int i, int j) { return grid + j * n + i; };
    std::vector<std::array<int, 3>> cells;
    cells.reserve(static_cast<size_t>(4) * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            int c = cid(i, j);
            cells.push_back({v00, v10, c});
            cells.push_back({v10, v11, c});
            cells.push_back({v11, v01, c});
            cells.push_back({v01, v00, c});
        }
    }
    return build_from(std::move(verts), std::move(cells));
}

enum class MeshFamily { Diagonal, Crisscross };

inline Mesh build_family(MeshFamily f, int N) {
    return f == MeshFamily::Diagonal ? build_diagonal(N) : build_crisscross(N);
}

inline const char* family_name(MeshFamily f) {
    return f == MeshFamily::Diagonal ? "diagonal" : "crisscross";
}

// Split of one cell into the 3 triangles joining its vertices to the
// barycenter. Sub-triangle k has vertices (p_k, p_{k+1}, barycenter), which
// keeps the parent orientation.
struct RefinedCell {
    int parent = -1;
    Vec2 barycenter;
    std::array<std::array<Vec2, 3>, 3> tri;

    Mat2 sub_jacobian(int k) const {
        return {tri[k][1].x - tri[k][0].x, tri[k][2].x - tri[k][0].x,
                tri[k][1].y - tri[k][0].y, tri[k][2].y - tri[k][0].y};
    }
    double sub_area(int k) const { return 0.5 * sub_jacobian(k).det(); }
};

inline RefinedCell barycentric_refine(const Mesh& mesh, int cell) {
    auto p = mesh.cell_coords(cell);
    RefinedCell r;
    r.parent = cell;
    r.barycenter = {(p[0].x + p[1].x + p[2].x) / 3.0, (p[0].y + p[1].y + p[2].y) / 3.0};
    for (int k = 0; k < 3; ++k) r.tri[k] = {p[k], p[(k + 1) % 3], r.barycenter};
    return r;
}

// The same split in reference coordinates. Locating a reference point in it
// is geometry-free because barycentric refinement commutes with affine maps.
inline int locate_sub_triangle(Vec2 ref) {
    const Vec2 rv[3] = {{0, 0}, {1, 0}, {0, 1}};
    const Vec2 z{1.0 / 3.0, 1.0 / 3.0};
    int best = 0;
    double best_min = -1e30;
    for (int k = 0; k < 3; ++k) {
        Vec2 a = rv[k], b = rv[(k + 1) % 3];
        double det = cross(b - a, z - a);
        double l2 = cross(ref - a, z - a) / det;
        double l3 = cross(b - a, ref - a) / det;
        double m = std::min({l2, l3, 1.0 - l2 - l3});
        if (m > best_min) {
            best_min = m;
            best = k;
        }
    }
    return best;
}

// Reference coordinates within sub-triangle k of the reference split.
inline Vec2 sub_reference_point(int k, Vec2 ref) {
    const Vec2 rv[3] = {{0, 0}, {1, 0}, {0, 1}};
    const Vec2 z{1.0 / 3.0, 1.0 / 3.0};
    Vec2 a = rv[k], b = rv[(k + 1) % 3];
    Mat2 J{b.x - a.x, z.x - a.x, b.y - a.y, z.y - a.y};
    return J.inverse().apply(ref - a);
}

// Maps a point given in sub-triangle-k reference coordinates back to parent
// reference coordinates.
inline Vec2 parent_reference_point(int k, Vec2 subref) {
    const Vec2 rv[3] = {{0, 0}, {1, 0}, {0, 1}};
    const Vec2 z{1.0 / 3.0, 1.0 / 3.0};
    Vec2 a = rv[k], b = rv[(k + 1) % 3];
    return a + subref.x * (b - a) + subref.y * (z - a);
}

// Plain-text dump: header "V E T", V lines "x y boundary_flag", T lines
// "v0 v1 v2". Edges are reconstructed on load.
inline void dump_mesh(const Mesh& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.precision(17);
    out << m.n_vertices() << ' ' << m.n_edges() << ' ' << m.n_cells() << '\n';
    for (int v = 0; v < m.n_vertices(); ++v)
        out << m.vertices[v].x << ' ' << m.vertices[v].y << ' ' << int(m.vertex_boundary[v]) << '\n';
    for (auto& c : m.cells) out << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

inline Mesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    int nv, ne, nt;
    if (!(in >> nv >> ne >> nt)) throw std::runtime_error("malformed mesh header in " + path);
    std::vector<Vec2> verts(nv);
    std::vector<int> flags(nv);
    for (int v = 0; v < nv; ++v)
        if (!(in >> verts[v].x >> verts[v].y >> flags[v]))
            throw std::runtime_error("malformed vertex line in " + path);
    std::vector<std::array<int, 3>> cells(nt);
    for (int c = 0; c < nt; ++c)
        if (!(in >> cells[c][0] >> cells[c][1] >> cells[c][2]))
            throw std::runtime_error("malformed cell line in " + path);
    Mesh m = build_from(std::move(verts), std::move(cells));
    if (m.n_edges() != ne) throw std::runtime_error("edge count mismatch in " + path);
    for (int v = 0; v < nv; ++v)
        if (int(m.vertex_boundary[v]) != flags[v])
            throw std::runtime_error("boundary flag mismatch in " + path);
    return m;
}

}  // namespace stokes_qopr
