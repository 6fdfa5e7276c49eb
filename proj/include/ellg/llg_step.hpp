#pragma once

// One tangent-plane step for the LLG part: nodewise orthonormal tangent
// frames, the reduced (2 unknowns per node) Galerkin solve for the update
// velocity v, and the linear nodewise magnetization update m + k v.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ellg/fem.hpp"
#include "ellg/mesh.hpp"
#include "ellg/numerics.hpp"

namespace ellg {

struct TangentFrame {
    std::vector<Vec3> t1, t2;  // orthonormal, both orthogonal to m(z)
};

struct LlgStepParams {
    double alpha = 0.5;
    double Ce = 1.0;
    double theta = 1.0;
    double k = 0.01;

    void validate() const {
        if (!(alpha > 0.0)) throw std::invalid_argument("LlgStepParams: alpha > 0 required");
        if (!(Ce > 0.0)) throw std::invalid_argument("LlgStepParams: Ce > 0 required");
        if (!(k > 0.0)) throw std::invalid_argument("LlgStepParams: k > 0 required");
        if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("LlgStepParams: theta in [0,1]");
    }
};

// Deterministic frame: pivot on the smallest-magnitude component of m(z).
inline TangentFrame build_tangent_frame(const Vector& m) {
    const int N = static_cast<int>(m.size()) / 3;
    TangentFrame frame;
    frame.t1.resize(N);
    frame.t2.resize(N);
    for (int z = 0; z < N; ++z) {
        const Vec3 mz = m.segment<3>(3 * z);
        const double norm = mz.norm();
        if (norm < 1e-8) {
            throw std::runtime_error("build_tangent_frame: degenerate magnetization at node " +
                                     std::to_string(z));
        }
        const Vec3 u = mz / norm;
        int p = 0;
        if (std::abs(u(1)) < std::abs(u(p))) p = 1;
        if (std::abs(u(2)) < std::abs(u(p))) p = 2;
        Vec3 t1 = Vec3::Unit(p) - u(p) * u;
        frame.t1[z] = t1.normalized();
        frame.t2[z] = u.cross(frame.t1[z]);
    }
    return frame;
}

namespace llg_detail {

// Reduced system matrix in the tangent basis: per node pair the 3x3 block
// alpha M_ij I + Ce theta k K_ij I + sum_k c_ijk [m_k]_x projected by the frames.
inline SparseMatrix assemble_reduced_matrix(const Vector& m, const TangentFrame& frame,
                                            const Mesh& mesh, const LlgStepParams& p) {
    const int N = mesh.n_vertices();
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(mesh.n_tets()) * 64);
    for (int t = 0; t < mesh.n_tets(); ++t) {
        const auto g = detail::tet_geometry(mesh, t);
        const auto& tet = mesh.tets[t];
        const double vol = g.volume;
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                const double scal = p.alpha * detail::bary2(i, j, vol) +
                                    p.Ce * p.theta * p.k * vol * g.grad[i].dot(g.grad[j]);
                Eigen::Matrix3d blk = scal * Eigen::Matrix3d::Identity();
                for (int kk = 0; kk < 4; ++kk) {
                    const Vec3 mk = m.segment<3>(3 * tet[kk]);
                    Eigen::Matrix3d cross;
                    cross << 0, -mk(2), mk(1), mk(2), 0, -mk(0), -mk(1), mk(0), 0;
                    blk += detail::bary3(i, j, kk, vol) * cross;
                }
                const int gi = tet[i], gj = tet[j];
                Eigen::Matrix<double, 3, 2> Ti, Tj;
                Ti.col(0) = frame.t1[gi];
                Ti.col(1) = frame.t2[gi];
                Tj.col(0) = frame.t1[gj];
                Tj.col(1) = frame.t2[gj];
                const Eigen::Matrix2d red = Ti.transpose() * blk * Tj;
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        trip.emplace_back(2 * gi + a, 2 * gj + b, red(a, b));
            }
        }
    }
    SparseMatrix A(2 * N, 2 * N);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

}  // namespace llg_detail

// Solve eq. (tangent-plane step): find v in K_{m} with
// alpha<v,phi> + <m x v,phi> + Ce theta k <grad v,grad phi>
//   = -Ce<grad m,grad phi> + <H,phi>  for all phi in the reduced basis.
// H is given by its ND^1 edge coefficients.
inline Vector solve_llg_step(const Vector& m, const Vector& H, const TangentFrame& frame,
                             const FemMatrices& mats, const Mesh& mesh, const LlgStepParams& params,
                             const SolverConfig& solver = {}, SolveReport* report = nullptr) {
    params.validate();
    const int N = mesh.n_vertices();
    const SparseMatrix A = llg_detail::assemble_reduced_matrix(m, frame, mesh, params);

    Vector rhs_full = -params.Ce * apply_vector_blocks(mats.K_scalar, m);
    rhs_full += mats.X_mix * H;
    Vector rhs(2 * N);
    for (int z = 0; z < N; ++z) {
        const Vec3 r = rhs_full.segment<3>(3 * z);
        rhs(2 * z) = frame.t1[z].dot(r);
        rhs(2 * z + 1) = frame.t2[z].dot(r);
    }

    std::vector<IndexRange> blocks(N);
    for (int z = 0; z < N; ++z) blocks[z] = {2 * z, 2 * z + 2};
    BlockDiagonalPreconditioner precond(A, blocks);
    const Vector c = gmres_solve(A, rhs, precond.as_matvec(), solver, report);

    Vector v = Vector::Zero(3 * N);
    for (int z = 0; z < N; ++z) {
        v.segment<3>(3 * z) = c(2 * z) * frame.t1[z] + c(2 * z + 1) * frame.t2[z];
    }
    return v;
}

// Linear nodewise update m_h^{i+1}(z) = m_h^i(z) + k v_h^i(z); no renormalization.
inline Vector update_magnetization(const Vector& m, const Vector& v, double k) {
    return m + k * v;
}

}  // namespace ellg
