#pragma once

// Conforming polygonal meshes in two dimensions: generic construction from
// vertex loops, the rectangular and quadrilateral-pentagonal-hexagonal grid
// families, summary statistics and a plain-text exchange format.

#include "sfwg/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

namespace sfwg {

/// An edge stored with canonical orientation `vertices[0] < vertices[1]`.
struct Edge {
    std::array<Index, 2> vertices{};
    /// Incident cells; `cells[1] == -1` on the boundary.
    std::array<Index, 2> cells{-1, -1};
    double length = 0.0;

    bool is_boundary() const noexcept { return cells[1] < 0; }
};

struct Cell {
    /// Counterclockwise vertex loop.
    std::vector<Index> vertices;
    /// `edges[i]` joins `vertices[i]` and `vertices[i+1]`.
    std::vector<Index> edges;
    /// +1 when the counterclockwise traversal agrees with the edge's canonical orientation.
    std::vector<int> edge_signs;
    /// Outward unit normal of each local edge.
    std::vector<Point> normals;
    double area = 0.0;
    Point centroid = Point::Zero();
    double diameter = 0.0;

    std::size_t num_edges() const noexcept { return edges.size(); }
};

class PolygonalMesh {
public:
    PolygonalMesh() = default;

    /// Builds the edge structure from counterclockwise vertex loops.
    /// Throws GeometryError on clockwise, degenerate or non-conforming input.
    PolygonalMesh(std::vector<Point> vertices, const std::vector<std::vector<Index>>& loops)
        : vertices_(std::move(vertices))
    {
        build(loops);
    }

    const std::vector<Point>& vertices() const noexcept { return vertices_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<Cell>& cells() const noexcept { return cells_; }

    const Point& vertex(Index i) const { return vertices_[static_cast<std::size_t>(i)]; }
    const Edge& edge(Index i) const { return edges_[static_cast<std::size_t>(i)]; }
    const Cell& cell(Index i) const { return cells_[static_cast<std::size_t>(i)]; }

    Index num_vertices() const noexcept { return static_cast<Index>(vertices_.size()); }
    Index num_edges() const noexcept { return static_cast<Index>(edges_.size()); }
    Index num_cells() const noexcept { return static_cast<Index>(cells_.size()); }

    /// h = max_T h_T.
    double mesh_size() const noexcept { return mesh_size_; }

    /// Area enclosed by the boundary edges, computed independently of the cell areas.
    double boundary_enclosed_area() const
    {
        double twice = 0.0;
        for (const auto& cell : cells_) {
            const std::size_t n = cell.vertices.size();
            for (std::size_t i = 0; i < n; ++i) {
                if (!edges_[static_cast<std::size_t>(cell.edges[i])].is_boundary())
                    continue;
                const Point& a = vertex(cell.vertices[i]);
                const Point& b = vertex(cell.vertices[(i + 1) % n]);
                twice += a.x() * b.y() - b.x() * a.y();
            }
        }
        return 0.5 * twice;
    }

    double total_cell_area() const noexcept
    {
        double sum = 0.0;
        for (const auto& c : cells_)
            sum += c.area;
        return sum;
    }

    /// True when every fan triangle (centroid, v_i, v_{i+1}) has positive area.
    bool is_star_shaped(Index c) const
    {
        const Cell& cell = this->cell(c);
        const std::size_t n = cell.vertices.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Point a = vertex(cell.vertices[i]) - cell.centroid;
            const Point b = vertex(cell.vertices[(i + 1) % n]) - cell.centroid;
            if (a.x() * b.y() - a.y() * b.x() <= 0.0)
                return false;
        }
        return true;
    }

    /// Radius of the largest disc centred at the centroid that stays inside the cell.
    double centroid_inradius(Index c) const
    {
        const Cell& cell = this->cell(c);
        const std::size_t n = cell.vertices.size();
        double r = std::numeric_limits<double>::max();
        for (std::size_t i = 0; i < n; ++i) {
            const Point& a = vertex(cell.vertices[i]);
            const Point& b = vertex(cell.vertices[(i + 1) % n]);
            r = std::min(r, segment_distance(cell.centroid, a, b));
        }
        return r;
    }

private:
    static double segment_distance(const Point& p, const Point& a, const Point& b)
    {
        const Point ab = b - a;
        const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        return (p - (a + t * ab)).norm();
    }

    void build(const std::vector<std::vector<Index>>& loops)
    {
        std::map<std::pair<Index, Index>, Index> edge_ids;
        cells_.reserve(loops.size());
        for (std::size_t c = 0; c < loops.size(); ++c) {
            const auto& loop = loops[c];
            const std::size_t n = loop.size();
            if (n < 3)
                throw GeometryError("cell " + std::to_string(c) + " has fewer than 3 vertices");
            Cell cell;
            cell.vertices = loop;
            for (Index v : loop)
                if (v < 0 || v >= num_vertices())
                    throw GeometryError("cell " + std::to_string(c) + " references a missing vertex");

            double twice_area = 0.0;
            double cx = 0.0;
            double cy = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const Point& a = vertex(loop[i]);
                const Point& b = vertex(loop[(i + 1) % n]);
                const double cross = a.x() * b.y() - b.x() * a.y();
                twice_area += cross;
                cx += (a.x() + b.x()) * cross;
                cy += (a.y() + b.y()) * cross;
            }
            if (!(twice_area > 0.0))
                throw GeometryError("cell " + std::to_string(c) + " is not counterclockwise or is degenerate");
            cell.area = 0.5 * twice_area;
            cell.centroid = Point(cx / (3.0 * twice_area), cy / (3.0 * twice_area));

            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = a + 1; b < n; ++b)
                    cell.diameter = std::max(cell.diameter, (vertex(loop[a]) - vertex(loop[b])).norm());

            for (std::size_t i = 0; i < n; ++i) {
                const Index va = loop[i];
                const Index vb = loop[(i + 1) % n];
                if (va == vb)
                    throw GeometryError("cell " + std::to_string(c) + " repeats a vertex");
                const auto key = std::minmax(va, vb);
                auto [it, inserted] = edge_ids.try_emplace({key.first, key.second}, num_edges());
                if (inserted) {
                    Edge e;
                    e.vertices = {key.first, key.second};
                    e.cells = {static_cast<Index>(c), -1};
                    e.length = (vertex(vb) - vertex(va)).norm();
                    edges_.push_back(e);
                } else {
                    Edge& e = edges_[static_cast<std::size_t>(it->second)];
                    if (e.cells[1] >= 0 || e.cells[0] == static_cast<Index>(c))
                        throw GeometryError("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                                            ") is shared by more than two cells or repeated in one cell");
                    e.cells[1] = static_cast<Index>(c);
                }
                const Point t = vertex(vb) - vertex(va);
                cell.edges.push_back(it->second);
                cell.edge_signs.push_back(va < vb ? 1 : -1);
                cell.normals.push_back(Point(t.y(), -t.x()) / t.norm());
            }
            mesh_size_ = std::max(mesh_size_, cell.diameter);
            cells_.push_back(std::move(cell));
        }

        // Two incident cells must traverse a shared edge in opposite directions.
        for (const auto& e : edges_) {
            if (e.is_boundary())
                continue;
            int sum = 0;
            for (Index c : e.cells) {
                const Cell& cell = this->cell(c);
                for (std::size_t i = 0; i < cell.edges.size(); ++i)
                    if (&edges_[static_cast<std::size_t>(cell.edges[i])] == &e)
                        sum += cell.edge_signs[i];
            }
            if (sum != 0)
                throw GeometryError("inconsistent orientation on a shared edge");
        }
    }

    std::vector<Point> vertices_;
    std::vector<Edge> edges_;
    std::vector<Cell> cells_;
    double mesh_size_ = 0.0;
};

/// Uniform grid of 2^(level-1) x 2^(level-1) rectangles.
inline PolygonalMesh make_rect_grid(int level, const Rectangle& domain = {})
{
    if (level < 1)
        throw InvalidArgument("grid level must be >= 1");
    const Index m = Index{1} << (level - 1);
    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>((m + 1) * (m + 1)));
    for (Index j = 0; j <= m; ++j)
        for (Index i = 0; i <= m; ++i)
            vertices.emplace_back(domain.x0 + domain.width() * static_cast<double>(i) / static_cast<double>(m),
                                  domain.y0 + domain.height() * static_cast<double>(j) / static_cast<double>(m));
    const auto id = [m](Index i, Index j) { return j * (m + 1) + i; };
    std::vector<std::vector<Index>> loops;
    loops.reserve(static_cast<std::size_t>(m * m));
    for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < m; ++i)
            loops.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    return PolygonalMesh(std::move(vertices), loops);
}

/// Interior points of one macro-cell of the quadrilateral-pentagonal-hexagonal
/// grid, as fractions of the macro-cell sides.
inline constexpr std::array<std::array<double, 2>, 6> qph_interior_fractions{{
    {9.0 / 25.0, 6.0 / 25.0},
    {16.0 / 25.0, 6.0 / 25.0},
    {23.0 / 100.0, 1.0 / 2.0},
    {77.0 / 100.0, 1.0 / 2.0},
    {9.0 / 25.0, 19.0 / 25.0},
    {16.0 / 25.0, 19.0 / 25.0},
}};

/// 2^(level-1) x 2^(level-1) macro-cells, each split into a bottom and top
/// quadrilateral, a left and right pentagon and a central hexagon.
inline PolygonalMesh make_qph_grid(int level, const Rectangle& domain = {})
{
    if (level < 1)
        throw InvalidArgument("grid level must be >= 1");
    const Index m = Index{1} << (level - 1);
    const double hx = domain.width() / static_cast<double>(m);
    const double hy = domain.height() / static_cast<double>(m);

    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>((m + 1) * (m + 1) + 6 * m * m));
    for (Index j = 0; j <= m; ++j)
        for (Index i = 0; i <= m; ++i)
            vertices.emplace_back(domain.x0 + domain.width() * static_cast<double>(i) / static_cast<double>(m),
                                  domain.y0 + domain.height() * static_cast<double>(j) / static_cast<double>(m));
    const auto corner = [m](Index i, Index j) { return j * (m + 1) + i; };

    std::vector<std::vector<Index>> loops;
    loops.reserve(static_cast<std::size_t>(5 * m * m));
    for (Index j = 0; j < m; ++j) {
        for (Index i = 0; i < m; ++i) {
            std::array<Index, 6> p{};
            for (std::size_t q = 0; q < 6; ++q) {
                p[q] = static_cast<Index>(vertices.size());
                vertices.emplace_back(domain.x0 + (static_cast<double>(i) + qph_interior_fractions[q][0]) * hx,
                                      domain.y0 + (static_cast<double>(j) + qph_interior_fractions[q][1]) * hy);
            }
            const Index sw = corner(i, j);
            const Index se = corner(i + 1, j);
            const Index ne = corner(i + 1, j + 1);
            const Index nw = corner(i, j + 1);
            loops.push_back({sw, se, p[1], p[0]});             // bottom quadrilateral
            loops.push_back({p[4], p[5], ne, nw});             // top quadrilateral
            loops.push_back({sw, p[0], p[2], p[4], nw});       // left pentagon
            loops.push_back({se, ne, p[5], p[3], p[1]});       // right pentagon
            loops.push_back({p[0], p[1], p[3], p[5], p[4], p[2]}); // hexagon
        }
    }
    return PolygonalMesh(std::move(vertices), loops);
}

struct MeshStatistics {
    Index num_vertices = 0;
    Index num_edges = 0;
    Index num_boundary_edges = 0;
    Index num_cells = 0;
    double h = 0.0;
    double min_diameter = 0.0;
    double max_diameter = 0.0;
    /// max_T h_T / rho_T with rho_T the centroid inradius.
    double shape_regularity = 0.0;
    /// Histogram of cell edge counts, indexed by edge count.
    std::vector<Index> cells_by_edge_count;
};

inline MeshStatistics mesh_statistics(const PolygonalMesh& mesh)
{
    MeshStatistics s;
    s.num_vertices = mesh.num_vertices();
    s.num_edges = mesh.num_edges();
    s.num_cells = mesh.num_cells();
    s.h = mesh.mesh_size();
    s.min_diameter = std::numeric_limits<double>::max();
    for (const auto& e : mesh.edges())
        s.num_boundary_edges += e.is_boundary() ? 1 : 0;
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const Cell& cell = mesh.cell(c);
        s.min_diameter = std::min(s.min_diameter, cell.diameter);
        s.max_diameter = std::max(s.max_diameter, cell.diameter);
        s.shape_regularity = std::max(s.shape_regularity, cell.diameter / mesh.centroid_inradius(c));
        const std::size_t n = cell.num_edges();
        if (s.cells_by_edge_count.size() <= n)
            s.cells_by_edge_count.resize(n + 1, 0);
        ++s.cells_by_edge_count[n];
    }
    if (mesh.num_cells() == 0)
        s.min_diameter = 0.0;
    return s;
}

inline std::ostream& operator<<(std::ostream& os, const MeshStatistics& s)
{
    os << "cells " << s.num_cells << ", edges " << s.num_edges << " (" << s.num_boundary_edges
       << " boundary), vertices " << s.num_vertices << ", h " << s.h << ", h_T in [" << s.min_diameter << ", "
       << s.max_diameter << "], shape " << s.shape_regularity;
    return os;
}

/// Writes the plain-text mesh format: vertex count, "x y" lines, cell count,
/// "m v1 ... vm" lines with 0-based indices.
inline void write_mesh(std::ostream& os, const PolygonalMesh& mesh)
{
    std::ostringstream buf;
    buf << std::setprecision(17);
    buf << mesh.num_vertices() << '\n';
    for (const auto& v : mesh.vertices())
        buf << v.x() << ' ' << v.y() << '\n';
    buf << mesh.num_cells() << '\n';
    for (const auto& c : mesh.cells()) {
        buf << c.vertices.size();
        for (Index v : c.vertices)
            buf << ' ' << v;
        buf << '\n';
    }
    os << buf.str();
}

inline PolygonalMesh read_mesh(std::istream& is)
{
    const auto fail = [](const std::string& what) { throw InvalidArgument("mesh file: " + what); };
    long long nv = -1;
    if (!(is >> nv) || nv < 0)
        fail("bad vertex count");
    std::vector<Point> vertices(static_cast<std::size_t>(nv));
    for (auto& v : vertices)
        if (!(is >> v.x() >> v.y()))
            fail("truncated vertex list");
    long long nc = -1;
    if (!(is >> nc) || nc < 0)
        fail("bad cell count");
    std::vector<std::vector<Index>> loops(static_cast<std::size_t>(nc));
    for (auto& loop : loops) {
        long long m = 0;
        if (!(is >> m) || m < 3)
            fail("bad cell size");
        loop.resize(static_cast<std::size_t>(m));
        for (auto& v : loop) {
            long long idx = -1;
            if (!(is >> idx))
                fail("truncated cell list");
            v = static_cast<Index>(idx);
        }
    }
    return PolygonalMesh(std::move(vertices), loops);
}

} // namespace sfwg
