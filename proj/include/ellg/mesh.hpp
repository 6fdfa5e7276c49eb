#pragma once

// Structured tetrahedral meshes of the unit cube and their boundary surfaces.
//
// The cube is meshed by the Freudenthal/Kuhn subdivision: every grid cell is
// split into 6 tetrahedra sharing the cell's main diagonal, which yields a
// shape-regular family with analytically checkable entity counts. Edges are
// stored with the global low-index -> high-index orientation; this single
// convention is shared by the FEM and coupled-space modules.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ellg {

using Vec3 = Eigen::Vector3d;

struct BoundaryFace {
    std::array<int, 3> v;  // volume vertex indices, ordered so that
                           // (v1-v0)x(v2-v0) points out of the domain
    Vec3 normal;           // outward unit normal
    double area = 0.0;
};

struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 4>> tets;        // positive orientation
    std::vector<std::array<int, 2>> edges;       // (a,b) with a < b
    std::vector<std::array<int, 6>> tet_edges;   // global edge ids, local order
                                                 // (0,1)(0,2)(0,3)(1,2)(1,3)(2,3)
    std::vector<std::array<int, 6>> tet_edge_signs;  // +1 iff local low->high
    std::vector<BoundaryFace> boundary_faces;
    std::vector<int> boundary_vertices;  // sorted
    std::vector<int> boundary_edges;     // sorted edge ids
    std::vector<double> tet_volumes;
    double mesh_size_h = 0.0;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_tets() const { return static_cast<int>(tets.size()); }
    int n_edges() const { return static_cast<int>(edges.size()); }

    bool is_boundary_vertex(int v) const {
        return std::binary_search(boundary_vertices.begin(), boundary_vertices.end(), v);
    }
    bool is_boundary_edge(int e) const {
        return std::binary_search(boundary_edges.begin(), boundary_edges.end(), e);
    }
};

struct SurfaceMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;  // surface vertex ids, oriented
                                                // so the right-hand normal is outward
    std::vector<Vec3> normals;
    std::vector<double> areas;
    std::vector<int> parent_vertex;  // surface vertex -> volume vertex

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }
};

namespace detail {

inline double tet_signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    return (b - a).cross(c - a).dot(d - a) / 6.0;
}

// Enumerate edges, tet-edge incidence and boundary topology of an arbitrary
// tet mesh whose vertices/tets are already filled in.
inline void finalize_connectivity(Mesh& mesh) {
    static constexpr std::array<std::array<int, 2>, 6> kLocalEdges = {
        {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
    static constexpr std::array<std::array<int, 3>, 4> kLocalFaces = {
        {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};

    mesh.tet_volumes.resize(mesh.tets.size());
    double h = 0.0;
    for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
        auto& tet = mesh.tets[t];
        double vol = tet_signed_volume(mesh.vertices[tet[0]], mesh.vertices[tet[1]],
                                       mesh.vertices[tet[2]], mesh.vertices[tet[3]]);
        if (vol < 0.0) {
            std::swap(tet[2], tet[3]);
            vol = -vol;
        }
        if (!(vol > 1e-14)) {
            throw std::runtime_error("degenerate tetrahedron " + std::to_string(t));
        }
        mesh.tet_volumes[t] = vol;
        for (auto& le : kLocalEdges) {
            h = std::max(h, (mesh.vertices[tet[le[0]]] - mesh.vertices[tet[le[1]]]).norm());
        }
    }
    mesh.mesh_size_h = h;

    std::map<std::array<int, 2>, int> edge_id;
    mesh.edges.clear();
    mesh.tet_edges.assign(mesh.tets.size(), {});
    mesh.tet_edge_signs.assign(mesh.tets.size(), {});
    for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
        const auto& tet = mesh.tets[t];
        for (int le = 0; le < 6; ++le) {
            int a = tet[kLocalEdges[le][0]];
            int b = tet[kLocalEdges[le][1]];
            int sign = a < b ? 1 : -1;
            std::array<int, 2> key{std::min(a, b), std::max(a, b)};
            auto [it, inserted] = edge_id.try_emplace(key, static_cast<int>(mesh.edges.size()));
            if (inserted) mesh.edges.push_back(key);
            mesh.tet_edges[t][le] = it->second;
            mesh.tet_edge_signs[t][le] = sign;
        }
    }

    // Faces shared by exactly one tet form the boundary.
    std::map<std::array<int, 3>, std::pair<int, int>> face_count;  // -> (count, opposite vtx)
    for (const auto& tet : mesh.tets) {
        for (int lf = 0; lf < 4; ++lf) {
            std::array<int, 3> f{tet[kLocalFaces[lf][0]], tet[kLocalFaces[lf][1]],
                                 tet[kLocalFaces[lf][2]]};
            std::sort(f.begin(), f.end());
            auto [it, inserted] = face_count.try_emplace(f, std::make_pair(0, tet[lf]));
            it->second.first++;
            if (!inserted) it->second.second = -1;
        }
    }
    mesh.boundary_faces.clear();
    std::vector<char> on_boundary(mesh.vertices.size(), 0);
    for (const auto& [f, info] : face_count) {
        if (info.first != 1) continue;
        BoundaryFace bf;
        bf.v = f;
        const Vec3& a = mesh.vertices[f[0]];
        const Vec3& b = mesh.vertices[f[1]];
        const Vec3& c = mesh.vertices[f[2]];
        Vec3 n = (b - a).cross(c - a);
        // orient away from the opposite vertex of the owning tet
        if (n.dot(mesh.vertices[info.second] - a) > 0.0) {
            std::swap(bf.v[1], bf.v[2]);
            n = -n;
        }
        bf.area = 0.5 * n.norm();
        bf.normal = n.normalized();
        mesh.boundary_faces.push_back(bf);
        for (int v : f) on_boundary[v] = 1;
    }

    mesh.boundary_vertices.clear();
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        if (on_boundary[v]) mesh.boundary_vertices.push_back(v);
    }

    std::map<std::array<int, 2>, int> bedge;
    for (const auto& bf : mesh.boundary_faces) {
        for (int i = 0; i < 3; ++i) {
            int a = bf.v[i], b = bf.v[(i + 1) % 3];
            bedge.try_emplace({std::min(a, b), std::max(a, b)}, 0);
        }
    }
    mesh.boundary_edges.clear();
    for (const auto& [key, unused] : bedge) {
        (void)unused;
        mesh.boundary_edges.push_back(edge_id.at(key));
    }
    std::sort(mesh.boundary_edges.begin(), mesh.boundary_edges.end());
}

}  // namespace detail

// Uniform Freudenthal/Kuhn mesh of D = [0,1]^3 with n cells per axis:
// (n+1)^3 vertices, 6 n^3 tets, mesh_size_h = sqrt(3)/n.
inline Mesh build_cube_mesh(int n_per_axis) {
    if (n_per_axis < 1) {
        throw std::invalid_argument("build_cube_mesh: n_per_axis must be >= 1");
    }
    const int n = n_per_axis;
    Mesh mesh;
    const int nv = n + 1;
    auto vid = [nv](int i, int j, int k) { return (k * nv + j) * nv + i; };
    mesh.vertices.reserve(static_cast<std::size_t>(nv) * nv * nv);
    for (int k = 0; k <= n; ++k)
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i)
                mesh.vertices.emplace_back(double(i) / n, double(j) / n, double(k) / n);

    // 6 tets per cell: vertex paths from cell origin to the far corner,
    // one per permutation of the axes.
    static constexpr std::array<std::array<int, 3>, 6> kPerms = {
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    mesh.tets.reserve(static_cast<std::size_t>(6) * n * n * n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                for (const auto& p : kPerms) {
                    std::array<int, 3> c{i, j, k};
                    std::array<int, 4> tet;
                    tet[0] = vid(c[0], c[1], c[2]);
                    for (int s = 0; s < 3; ++s) {
                        c[p[s]] += 1;
                        tet[s + 1] = vid(c[0], c[1], c[2]);
                    }
                    mesh.tets.push_back(tet);
                }

    detail::finalize_connectivity(mesh);
    return mesh;
}

inline SurfaceMesh extract_boundary(const Mesh& mesh) {
    SurfaceMesh surf;
    std::vector<int> vol2surf(mesh.vertices.size(), -1);
    surf.parent_vertex = mesh.boundary_vertices;
    surf.vertices.reserve(surf.parent_vertex.size());
    for (std::size_t s = 0; s < surf.parent_vertex.size(); ++s) {
        vol2surf[surf.parent_vertex[s]] = static_cast<int>(s);
        surf.vertices.push_back(mesh.vertices[surf.parent_vertex[s]]);
    }
    for (const auto& bf : mesh.boundary_faces) {
        surf.triangles.push_back({vol2surf[bf.v[0]], vol2surf[bf.v[1]], vol2surf[bf.v[2]]});
        surf.normals.push_back(bf.normal);
        surf.areas.push_back(bf.area);
    }
    return surf;
}

// Every surface edge must be shared by exactly two triangles.
inline bool surface_is_closed(const SurfaceMesh& surf) {
    std::map<std::array<int, 2>, int> count;
    for (const auto& tri : surf.triangles) {
        for (int i = 0; i < 3; ++i) {
            int a = tri[i], b = tri[(i + 1) % 3];
            count[{std::min(a, b), std::max(a, b)}]++;
        }
    }
    for (const auto& [e, c] : count) {
        (void)e;
        if (c != 2) return false;
    }
    return true;
}

struct EntityGeometry {
    std::vector<double> tet_volumes;
    std::vector<Vec3> edge_tangents;  // x_b - x_a for edge (a,b)
    std::vector<double> face_areas;
    std::vector<Vec3> face_normals;
};

inline EntityGeometry entity_geometry(const Mesh& mesh) {
    EntityGeometry g;
    g.tet_volumes = mesh.tet_volumes;
    for (double v : g.tet_volumes) {
        if (!(v > 1e-14)) throw std::runtime_error("entity_geometry: degenerate tetrahedron");
    }
    g.edge_tangents.reserve(mesh.edges.size());
    for (const auto& e : mesh.edges) {
        g.edge_tangents.push_back(mesh.vertices[e[1]] - mesh.vertices[e[0]]);
    }
    for (const auto& bf : mesh.boundary_faces) {
        g.face_areas.push_back(bf.area);
        g.face_normals.push_back(bf.normal);
    }
    return g;
}

// Icosphere on the unit sphere; refinement level L has 20 * 4^L triangles.
// Used by the BEM analytic-sphere oracles (parent map is the identity).
inline SurfaceMesh build_icosphere(int level) {
    if (level < 0) throw std::invalid_argument("build_icosphere: level must be >= 0");
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
    for (auto& v : verts) v.normalize();
    std::vector<std::array<int, 3>> tris = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

    for (int l = 0; l < level; ++l) {
        std::map<std::array<int, 2>, int> midpoint;
        auto mid = [&](int a, int b) {
            std::array<int, 2> key{std::min(a, b), std::max(a, b)};
            auto [it, inserted] = midpoint.try_emplace(key, static_cast<int>(verts.size()));
            if (inserted) verts.push_back((verts[a] + verts[b]).normalized());
            return it->second;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(tris.size() * 4);
        for (const auto& t : tris) {
            int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
            next.push_back({t[0], ab, ca});
            next.push_back({t[1], bc, ab});
            next.push_back({t[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        tris = std::move(next);
    }

    SurfaceMesh surf;
    surf.vertices = verts;
    surf.parent_vertex.resize(verts.size());
    for (std::size_t i = 0; i < verts.size(); ++i) surf.parent_vertex[i] = static_cast<int>(i);
    for (const auto& t : tris) {
        const Vec3& a = verts[t[0]];
        Vec3 n = (verts[t[1]] - a).cross(verts[t[2]] - a);
        std::array<int, 3> tri = t;
        if (n.dot(a) < 0.0) {  // outward = radial
            std::swap(tri[1], tri[2]);
            n = -n;
        }
        surf.triangles.push_back(tri);
        surf.areas.push_back(0.5 * n.norm());
        surf.normals.push_back(n.normalized());
    }
    return surf;
}

}  // namespace ellg
