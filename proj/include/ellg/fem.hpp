#pragma once

// P1 nodal and first-order Nedelec edge elements on tetrahedra:
// interpolation operators and the volume Galerkin matrices. All local
// integrands are polynomial on affine elements, so the matrices are exact
// (closed-form local integrals, no quadrature).

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "ellg/mesh.hpp"
#include "ellg/numerics.hpp"

namespace ellg {

// Nodal vector field in S^1(T_h)^3: flat vector, component c of node i at 3*i+c.
// Edge field in ND^1(T_h): one coefficient per global edge, coeff(e) = int_e xi.tau ds
// with the edge oriented low-index -> high-index.

struct FemMatrices {
    SparseMatrix M_scalar;  // P1 mass (N x N); the vector mass is the 3x block expansion
    SparseMatrix K_scalar;  // P1 stiffness (N x N)
    SparseMatrix M_ND;      // edge mass <xi, psi>_D (E x E)
    SparseMatrix C_ND;      // curl-curl <curl xi, curl psi>_D (E x E)
    SparseMatrix X_mix;     // nodal-vector x edge mass <phi, xi>_D (3N x E)
};

namespace detail {

struct TetGeometry {
    std::array<Vec3, 4> grad;  // gradients of the barycentric coordinates
    double volume;
};

inline TetGeometry tet_geometry(const Mesh& mesh, int t) {
    TetGeometry g;
    const auto& tet = mesh.tets[t];
    Eigen::Matrix3d J;
    for (int i = 0; i < 3; ++i) J.col(i) = mesh.vertices[tet[i + 1]] - mesh.vertices[tet[0]];
    g.volume = mesh.tet_volumes[t];
    Eigen::Matrix3d Jinv = J.inverse();
    for (int i = 0; i < 3; ++i) g.grad[i + 1] = Jinv.row(i);
    g.grad[0] = -(g.grad[1] + g.grad[2] + g.grad[3]);
    return g;
}

// int_tet lambda_i lambda_j = V/10 (i==j), V/20 otherwise
inline double bary2(int i, int j, double vol) { return (i == j) ? vol / 10.0 : vol / 20.0; }

// int_tet lambda_i lambda_j lambda_k: V/20 (all equal), V/60 (two equal), V/120 (distinct)
inline double bary3(int i, int j, int k, double vol) {
    if (i == j && j == k) return vol / 20.0;
    if (i == j || j == k || i == k) return vol / 60.0;
    return vol / 120.0;
}

static constexpr std::array<std::array<int, 2>, 6> kLocalEdges = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

// Local node pair (a,b) of edge `le`, reordered so the global index of a is
// smaller; the Whitney function lambda_a grad lambda_b - lambda_b grad lambda_a
// then carries the global orientation directly.
inline std::array<int, 2> oriented_local_edge(const Mesh& mesh, int t, int le) {
    const auto& tet = mesh.tets[t];
    int a = kLocalEdges[le][0], b = kLocalEdges[le][1];
    if (tet[a] > tet[b]) std::swap(a, b);
    return {a, b};
}

}  // namespace detail

inline Vector interpolate_nodal(const std::function<Vec3(const Vec3&)>& f, const Mesh& mesh) {
    Vector out(3 * mesh.n_vertices());
    for (int i = 0; i < mesh.n_vertices(); ++i) {
        Vec3 v = f(mesh.vertices[i]);
        if (!v.allFinite()) {
            throw std::runtime_error("interpolate_nodal: non-finite value at node " +
                                     std::to_string(i));
        }
        out.segment<3>(3 * i) = v;
    }
    return out;
}

// coeff(e) = int_e f.tau ds, 2-point Gauss per edge (exact for cubics).
inline Vector interpolate_edge(const std::function<Vec3(const Vec3&)>& f, const Mesh& mesh) {
    Vector out(mesh.n_edges());
    const double g = 1.0 / (2.0 * std::sqrt(3.0));
    for (int e = 0; e < mesh.n_edges(); ++e) {
        const Vec3& a = mesh.vertices[mesh.edges[e][0]];
        const Vec3& b = mesh.vertices[mesh.edges[e][1]];
        Vec3 mid = 0.5 * (a + b), d = b - a;
        out(e) = 0.5 * (f(mid - g * d).dot(d) + f(mid + g * d).dot(d));
    }
    return out;
}

inline FemMatrices assemble_fem_matrices(const Mesh& mesh) {
    const int N = mesh.n_vertices();
    const int E = mesh.n_edges();
    std::vector<Triplet> tm, tk, tmnd, tcnd, tx;

    for (int t = 0; t < mesh.n_tets(); ++t) {
        const auto g = detail::tet_geometry(mesh, t);
        const auto& tet = mesh.tets[t];
        const double vol = g.volume;

        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                tm.emplace_back(tet[i], tet[j], detail::bary2(i, j, vol));
                tk.emplace_back(tet[i], tet[j], vol * g.grad[i].dot(g.grad[j]));
            }
        }

        for (int le = 0; le < 6; ++le) {
            auto [a, b] = detail::oriented_local_edge(mesh, t, le);
            const int ge = mesh.tet_edges[t][le];
            const Vec3 curl_e = 2.0 * g.grad[a].cross(g.grad[b]);
            for (int lf = 0; lf < 6; ++lf) {
                auto [c, d] = detail::oriented_local_edge(mesh, t, lf);
                const int gf = mesh.tet_edges[t][lf];
                // <w_e, w_f> with w_e = la grad lb - lb grad la
                double m = detail::bary2(a, c, vol) * g.grad[b].dot(g.grad[d]) -
                           detail::bary2(a, d, vol) * g.grad[b].dot(g.grad[c]) -
                           detail::bary2(b, c, vol) * g.grad[a].dot(g.grad[d]) +
                           detail::bary2(b, d, vol) * g.grad[a].dot(g.grad[c]);
                tmnd.emplace_back(ge, gf, m);
                const Vec3 curl_f = 2.0 * g.grad[c].cross(g.grad[d]);
                tcnd.emplace_back(ge, gf, vol * curl_e.dot(curl_f));
            }
            // <phi_i e_c, w_e> = e_c . (int li la) grad lb - (int li lb) grad la
            for (int i = 0; i < 4; ++i) {
                const Vec3 moment =
                    detail::bary2(i, a, vol) * g.grad[b] - detail::bary2(i, b, vol) * g.grad[a];
                for (int c = 0; c < 3; ++c) tx.emplace_back(3 * tet[i] + c, ge, moment(c));
            }
        }
    }

    FemMatrices mats;
    mats.M_scalar.resize(N, N);
    mats.M_scalar.setFromTriplets(tm.begin(), tm.end());
    mats.K_scalar.resize(N, N);
    mats.K_scalar.setFromTriplets(tk.begin(), tk.end());
    mats.M_ND.resize(E, E);
    mats.M_ND.setFromTriplets(tmnd.begin(), tmnd.end());
    mats.C_ND.resize(E, E);
    mats.C_ND.setFromTriplets(tcnd.begin(), tcnd.end());
    mats.X_mix.resize(3 * N, E);
    mats.X_mix.setFromTriplets(tx.begin(), tx.end());
    return mats;
}

// y = (M_scalar (x) I3) x for a nodal vector field x of size 3N
inline Vector apply_vector_blocks(const SparseMatrix& A_scalar, const Vector& x) {
    const int N = static_cast<int>(A_scalar.rows());
    Vector y = Vector::Zero(3 * N);
    for (int col = 0; col < N; ++col) {
        for (SparseMatrix::InnerIterator it(A_scalar, col); it; ++it) {
            y.segment<3>(3 * it.row()) += it.value() * x.segment<3>(3 * col);
        }
    }
    return y;
}

struct FieldEnergies {
    double grad_m_l2 = 0.0;  // ||grad m||_{L2}
    double H_l2 = 0.0;       // ||H||_{L2}
    double curl_H_l2 = 0.0;  // ||curl H||_{L2}
};

inline FieldEnergies evaluate_energies(const Vector& m, const Vector& H, const FemMatrices& mats) {
    FieldEnergies e;
    e.grad_m_l2 = std::sqrt(std::max(0.0, m.dot(apply_vector_blocks(mats.K_scalar, m))));
    e.H_l2 = std::sqrt(std::max(0.0, H.dot(mats.M_ND * H)));
    e.curl_H_l2 = std::sqrt(std::max(0.0, H.dot(mats.C_ND * H)));
    return e;
}

// Elementwise-constant curl of an ND^1 field.
inline std::vector<Vec3> elementwise_curl(const Vector& H, const Mesh& mesh) {
    std::vector<Vec3> curl(mesh.n_tets(), Vec3::Zero());
    for (int t = 0; t < mesh.n_tets(); ++t) {
        const auto g = detail::tet_geometry(mesh, t);
        for (int le = 0; le < 6; ++le) {
            auto [a, b] = detail::oriented_local_edge(mesh, t, le);
            curl[t] += H(mesh.tet_edges[t][le]) * 2.0 * g.grad[a].cross(g.grad[b]);
        }
    }
    return curl;
}

// mumag standard problem #1 vortex initial magnetization (unit length nodewise).
inline Vec3 mumag_initial_m(const Vec3& x) {
    const double x1 = x(0) - 0.5, x2 = x(1) - 0.5;
    const double d = x1 * x1 + x2 * x2;
    if (d >= 0.25) return Vec3(0, 0, -1);
    const double A = std::pow(1.0 - 2.0 * std::sqrt(d), 4) / 4.0;
    Vec3 m(2.0 * A * x1, 2.0 * A * x2, A * A - d);
    return m / (A * A + d);
}

}  // namespace ellg
