#pragma once

// Galerkin assembly of the Laplace layer operators V, K, K', W on a closed
// triangulated surface, and the discrete Dirichlet-to-Neumann map by
// symmetric (default) or Johnson-Nedelec coupling.
//
// Inner panel integrals are evaluated in closed form (edge-log terms plus the
// van Oosterom-Strackee solid angle), so identical/edge/vertex-adjacent pairs
// need no special quadrature; only the outer integral uses a Gauss rule of
// order quad_order. W is assembled through the integration-by-parts identity
// <W lam, zet> = <V curl_G lam, curl_G zet> with curl_G piecewise constant.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ellg/mesh.hpp"
#include "ellg/numerics.hpp"

namespace ellg {

struct BemOperators {
    DenseMatrix V;   // P0 x P0 single layer
    DenseMatrix K;   // P0 test x S1 trial, principal-value double layer
    DenseMatrix Kp;  // K^T
    DenseMatrix W;   // S1 x S1 hypersingular (via the curl_G identity)
    DenseMatrix M0;  // P0 test x S1 trial mass on Gamma
    DenseMatrix MG;  // S1 x S1 mass on Gamma
};

struct DtnMatrix {
    DenseMatrix S;                 // S1(Gamma) x S1(Gamma)
    Eigen::LLT<DenseMatrix> V_llt; // single-layer factorization for re-solves
};

namespace bem_detail {

// 1D Gauss-Legendre on [0,1] by Newton iteration on P_n.
inline void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (t * p1 - p0) / (t * t - 1.0);
            double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (t * p1 - p0) / (t * t - 1.0);
        x[i] = 0.5 * (1.0 + t);
        w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
}

struct TriangleRule {
    std::vector<double> u, v, w;  // barycentric-style (u,v) on the unit triangle
};

// Collapsed tensor Gauss rule on {(u,v): u,v>=0, u+v<=1}; weights sum to 1/2.
inline TriangleRule triangle_rule(int order) {
    std::vector<double> gx, gw;
    gauss_legendre_01(order, gx, gw);
    TriangleRule r;
    for (int i = 0; i < order; ++i) {
        for (int j = 0; j < order; ++j) {
            r.u.push_back(gx[i]);
            r.v.push_back(gx[j] * (1.0 - gx[i]));
            r.w.push_back(gw[i] * gw[j] * (1.0 - gx[i]));
        }
    }
    return r;
}

struct Panel {
    std::array<Vec3, 3> p;       // CCW w.r.t. the outward normal
    Vec3 n;
    double area;
    std::array<Vec3, 3> grad;    // surface gradients of the P1 nodal basis
    std::array<Vec3, 3> u_hat;   // edge directions p_i -> p_{i+1}
    std::array<Vec3, 3> m_hat;   // in-plane outward edge normals
    std::array<int, 3> nodes;    // global surface node ids
    double diam;
};

inline Panel make_panel(const SurfaceMesh& surf, int t) {
    Panel P;
    const auto& tri = surf.triangles[t];
    for (int i = 0; i < 3; ++i) {
        P.p[i] = surf.vertices[tri[i]];
        P.nodes[i] = tri[i];
    }
    P.n = surf.normals[t];
    P.area = surf.areas[t];
    const Vec3 e1 = P.p[1] - P.p[0], e2 = P.p[2] - P.p[0];
    Eigen::Matrix2d G;
    G << e1.dot(e1), e1.dot(e2), e2.dot(e1), e2.dot(e2);
    Eigen::Matrix2d Gi = G.inverse();
    P.grad[1] = Gi(0, 0) * e1 + Gi(1, 0) * e2;
    P.grad[2] = Gi(0, 1) * e1 + Gi(1, 1) * e2;
    P.grad[0] = -(P.grad[1] + P.grad[2]);
    P.diam = 0.0;
    for (int i = 0; i < 3; ++i) {
        Vec3 e = P.p[(i + 1) % 3] - P.p[i];
        P.u_hat[i] = e.normalized();
        P.m_hat[i] = P.u_hat[i].cross(P.n);
        P.diam = std::max(P.diam, e.norm());
    }
    return P;
}

// Signed solid angle of the (oriented) panel seen from x.
inline double solid_angle(const Panel& P, const Vec3& x) {
    const Vec3 r1 = P.p[0] - x, r2 = P.p[1] - x, r3 = P.p[2] - x;
    const double R1 = r1.norm(), R2 = r2.norm(), R3 = r3.norm();
    const double num = r1.dot(r2.cross(r3));
    const double den = R1 * R2 * R3 + r1.dot(r2) * R3 + r1.dot(r3) * R2 + r2.dot(r3) * R1;
    return 2.0 * std::atan2(num, den);
}

struct PanelPotentials {
    double single_layer;  // int_s 1/(4 pi R) dA
    Vec3 edge_log_sum;    // sum_i m_hat_i * ln((R+ + l+)/(R- + l-))
    double omega;         // signed solid angle
    double d;             // n . (x - p0), height of x over the panel plane
    Vec3 rho;             // in-plane projection of x
};

inline PanelPotentials panel_potentials(const Panel& P, const Vec3& x) {
    PanelPotentials out;
    out.d = P.n.dot(x - P.p[0]);
    out.rho = x - out.d * P.n;
    out.omega = solid_angle(P, x);

    double sum_p0_log = 0.0;
    Vec3 mlog = Vec3::Zero();
    for (int i = 0; i < 3; ++i) {
        const Vec3& pm = P.p[i];
        const Vec3& pp = P.p[(i + 1) % 3];
        const double lm = P.u_hat[i].dot(pm - out.rho);
        const double lp = P.u_hat[i].dot(pp - out.rho);
        const double Rm = (pm - x).norm();
        const double Rp = (pp - x).norm();
        const double P0 = P.m_hat[i].dot(pm - out.rho);
        double L;
        if (lp + lm > 0.0) {
            L = std::log((Rp + lp) / (Rm + lm));
        } else {
            // (R+l)(R-l) = P0^2 + d^2: stable branch for l < 0
            const double a = Rm - lm, b = Rp - lp;
            L = (a > 0.0 && b > 0.0) ? std::log(a / b) : 0.0;
        }
        if (!std::isfinite(L)) L = 0.0;
        sum_p0_log += P0 * L;
        mlog += L * P.m_hat[i];
    }
    out.single_layer = (sum_p0_log - std::abs(out.d) * std::abs(out.omega)) / (4.0 * M_PI);
    out.edge_log_sum = mlog;
    return out;
}

// int_s phi_j(y) dn(y)G(x,y) dA for the three panel nodes; zero when x lies in
// the panel plane (principal value).
inline std::array<double, 3> panel_double_layer(const Panel& P, const Vec3& x,
                                                const PanelPotentials& pot) {
    std::array<double, 3> out{0.0, 0.0, 0.0};
    if (std::abs(pot.d) < 1e-13 * (P.diam + 1.0)) return out;
    const Vec3 E = -pot.edge_log_sum;  // int (y - rho)/R^3 dA
    for (int j = 0; j < 3; ++j) {
        const double phi_rho = (j == 0 ? 1.0 : 0.0) + P.grad[j].dot(pot.rho - P.p[0]);
        out[j] = (-pot.omega * phi_rho + pot.d * P.grad[j].dot(E)) / (4.0 * M_PI);
    }
    return out;
}

}  // namespace bem_detail

inline BemOperators assemble_layer_operators(const SurfaceMesh& surf, int quad_order = 4) {
    if (quad_order < 1) throw std::invalid_argument("assemble_layer_operators: quad_order >= 1");
    if (!surface_is_closed(surf)) {
        throw std::runtime_error("assemble_layer_operators: surface is not closed");
    }
    const int P = surf.n_triangles();
    const int B = surf.n_vertices();

    std::vector<bem_detail::Panel> panels;
    panels.reserve(P);
    for (int t = 0; t < P; ++t) panels.push_back(bem_detail::make_panel(surf, t));

    const auto rule = bem_detail::triangle_rule(quad_order);
    const int nq = static_cast<int>(rule.w.size());

    BemOperators ops;
    ops.V = DenseMatrix::Zero(P, P);
    ops.K = DenseMatrix::Zero(P, B);
    ops.M0 = DenseMatrix::Zero(P, B);
    ops.MG = DenseMatrix::Zero(B, B);

    for (int t = 0; t < P; ++t) {
        const auto& Pt = panels[t];
        for (int q = 0; q < nq; ++q) {
            const Vec3 x = Pt.p[0] + rule.u[q] * (Pt.p[1] - Pt.p[0]) + rule.v[q] * (Pt.p[2] - Pt.p[0]);
            const double wq = rule.w[q] * 2.0 * Pt.area;
            for (int s = 0; s < P; ++s) {
                const auto pot = bem_detail::panel_potentials(panels[s], x);
                if (s >= t) ops.V(t, s) += wq * pot.single_layer;
                const auto dl = bem_detail::panel_double_layer(panels[s], x, pot);
                for (int j = 0; j < 3; ++j) ops.K(t, panels[s].nodes[j]) += wq * dl[j];
            }
        }
        for (int j = 0; j < 3; ++j) ops.M0(t, Pt.nodes[j]) += Pt.area / 3.0;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                ops.MG(Pt.nodes[i], Pt.nodes[j]) += (i == j) ? Pt.area / 6.0 : Pt.area / 12.0;
            }
        }
    }
    // V was filled one-sided; mirror to the exact symmetric Galerkin matrix
    for (int t = 0; t < P; ++t)
        for (int s = 0; s < t; ++s) ops.V(t, s) = ops.V(s, t);

    // W = sum_c C_c^T V C_c with (C_c)_{t,j} = (n_t x grad phi_j)_c
    ops.W = DenseMatrix::Zero(B, B);
    DenseMatrix C(P, B);
    for (int c = 0; c < 3; ++c) {
        C.setZero();
        for (int t = 0; t < P; ++t) {
            for (int j = 0; j < 3; ++j) {
                C(t, panels[t].nodes[j]) = panels[t].n.cross(panels[t].grad[j])(c);
            }
        }
        ops.W.noalias() += C.transpose() * ops.V * C;
    }
    ops.W = 0.5 * (ops.W + ops.W.transpose()).eval();
    ops.Kp = ops.K.transpose();
    return ops;
}

// mu_h in P0 solving <V mu_h, nu> = <(K - 1/2) lam, nu> for all nu in P0.
inline Vector solve_density(const BemOperators& ops, const Vector& lambda) {
    Eigen::LLT<DenseMatrix> llt(ops.V);
    if (llt.info() != Eigen::Success) throw std::runtime_error("solve_density: V factorization failed");
    return llt.solve((ops.K - 0.5 * ops.M0) * lambda);
}

// Symmetric (Costabel) coupling: S = (M0/2 - K)^T V^{-1} (K - M0/2) - W.
inline DtnMatrix build_dtn_symmetric(const BemOperators& ops) {
    DtnMatrix dtn;
    dtn.V_llt.compute(ops.V);
    if (dtn.V_llt.info() != Eigen::Success) {
        throw std::runtime_error("build_dtn_symmetric: V factorization failed");
    }
    const DenseMatrix T = ops.K - 0.5 * ops.M0;
    dtn.S = -T.transpose() * dtn.V_llt.solve(T) - ops.W;
    dtn.S = 0.5 * (dtn.S + dtn.S.transpose()).eval();
    return dtn;
}

// Johnson-Nedelec coupling: <S lam, zet> = <mu_h, zet>; comparison only.
inline DtnMatrix build_dtn_johnson_nedelec(const BemOperators& ops) {
    DtnMatrix dtn;
    dtn.V_llt.compute(ops.V);
    if (dtn.V_llt.info() != Eigen::Success) {
        throw std::runtime_error("build_dtn_johnson_nedelec: V factorization failed");
    }
    dtn.S = ops.M0.transpose() * dtn.V_llt.solve(ops.K - 0.5 * ops.M0);
    return dtn;
}

}  // namespace ellg
