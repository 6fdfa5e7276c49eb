#pragma once

// The constrained space X_h = {(xi, zeta) in ND^1 x S^1(Gamma) :
// n x xi|_Gamma = n x grad_Gamma zeta}, realized through its degrees of
// freedom: all interior edges plus all boundary nodes. The prolongation P
// maps an X_h coefficient vector to all-edge coefficients; boundary-edge
// coefficients are nodal differences zeta(z_b) - zeta(z_a) with the global
// a < b edge orientation.

#include <stdexcept>
#include <vector>

#include "ellg/mesh.hpp"
#include "ellg/numerics.hpp"

namespace ellg {

struct XhSpace {
    std::vector<int> interior_edges;  // global edge ids, ascending
    std::vector<int> boundary_nodes;  // global vertex ids, ascending (matches
                                      // SurfaceMesh parent order)
    SparseMatrix P;                   // (n_edges x dim): XhVector -> all-edge coefficients
    std::vector<int> edge_to_xh;      // interior edge -> xh index, -1 for boundary edges
    std::vector<int> node_to_xh;      // boundary vertex -> xh index (offset included), else -1

    int n_interior() const { return static_cast<int>(interior_edges.size()); }
    int n_boundary_nodes() const { return static_cast<int>(boundary_nodes.size()); }
    int dim() const { return n_interior() + n_boundary_nodes(); }

    Vector boundary_values(const Vector& x) const { return x.tail(n_boundary_nodes()); }
};

inline XhSpace build_xh_space(const Mesh& mesh, const SurfaceMesh& surface) {
    if (static_cast<int>(surface.parent_vertex.size()) !=
        static_cast<int>(mesh.boundary_vertices.size())) {
        throw std::invalid_argument("build_xh_space: mesh/surface pair is inconsistent");
    }
    XhSpace sp;
    sp.edge_to_xh.assign(mesh.n_edges(), -1);
    for (int e = 0; e < mesh.n_edges(); ++e) {
        if (!mesh.is_boundary_edge(e)) {
            sp.edge_to_xh[e] = static_cast<int>(sp.interior_edges.size());
            sp.interior_edges.push_back(e);
        }
    }
    sp.boundary_nodes = mesh.boundary_vertices;
    sp.node_to_xh.assign(mesh.n_vertices(), -1);
    const int ni = sp.n_interior();
    for (int b = 0; b < sp.n_boundary_nodes(); ++b) {
        sp.node_to_xh[sp.boundary_nodes[b]] = ni + b;
    }

    std::vector<Triplet> tp;
    for (int e = 0; e < mesh.n_edges(); ++e) {
        if (sp.edge_to_xh[e] >= 0) {
            tp.emplace_back(e, sp.edge_to_xh[e], 1.0);
        } else {
            const int a = mesh.edges[e][0], b = mesh.edges[e][1];
            tp.emplace_back(e, sp.node_to_xh[b], 1.0);
            tp.emplace_back(e, sp.node_to_xh[a], -1.0);
        }
    }
    sp.P.resize(mesh.n_edges(), sp.dim());
    sp.P.setFromTriplets(tp.begin(), tp.end());
    return sp;
}

struct EmbeddedPair {
    Vector edge_field;      // all-edge ND^1 coefficients
    Vector boundary_nodal;  // values on boundary nodes, XhSpace order
};

inline EmbeddedPair embed(const Vector& x, const XhSpace& space) {
    if (x.size() != space.dim()) throw std::invalid_argument("embed: dimension mismatch");
    return {space.P * x, space.boundary_values(x)};
}

// Q^T A_full Q for A_full on (edges + boundary nodes), Q = [P; selector].
inline SparseMatrix reduce_matrix(const SparseMatrix& A_full, const XhSpace& space) {
    const int E = static_cast<int>(space.P.rows());
    const int B = space.n_boundary_nodes();
    if (A_full.rows() != E + B || A_full.cols() != E + B) {
        throw std::invalid_argument("reduce_matrix: block dimensions mismatch");
    }
    std::vector<Triplet> tq;
    for (int col = 0; col < space.dim(); ++col) {
        for (SparseMatrix::InnerIterator it(space.P, col); it; ++it) {
            tq.emplace_back(static_cast<int>(it.row()), col, it.value());
        }
    }
    for (int b = 0; b < B; ++b) tq.emplace_back(E + b, space.n_interior() + b, 1.0);
    SparseMatrix Q(E + B, space.dim());
    Q.setFromTriplets(tq.begin(), tq.end());
    return SparseMatrix(Q.transpose() * A_full * Q);
}

}  // namespace ellg
