#pragma once

// One eddy-current step on X_h: the Gram matrix of a_h (edge mass minus the
// DtN form), the curl-curl form b scaled by 1/(sigma mu0), and the linear
// solve (A/k + B) x = A x_prev / k - <v, .>. The boundary-node block of A is
// dense (it carries -S); everything else stays sparse, and the system is
// applied matrix-free with a two-block (edge / boundary-node) preconditioner.

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "ellg/coupled_space.hpp"
#include "ellg/fem.hpp"
#include "ellg/bem.hpp"
#include "ellg/numerics.hpp"

namespace ellg {

struct EddyParams {
    double sigma = 1.0;
    double mu0 = 1.0;
    double k = 0.01;

    void validate() const {
        if (!(sigma > 0.0)) throw std::invalid_argument("EddyParams: sigma > 0 required");
        if (!(mu0 > 0.0)) throw std::invalid_argument("EddyParams: mu0 > 0 required");
        if (!(k > 0.0)) throw std::invalid_argument("EddyParams: k > 0 required");
    }
};

struct EddySystem {
    SparseMatrix A_sp;        // P^T M_ND P (dim x dim)
    DenseMatrix S;            // DtN matrix on boundary nodes; A_red = A_sp - R^T S R
    SparseMatrix B_sp;        // sigma^-1 mu0^-1 P^T C_ND P
    SparseMatrix load;        // dim x 3N, load * v = <v, xi_h>_D in X_h coordinates
    double k = 0.0;
    int n_interior = 0;
    int n_bnodes = 0;

    // block factorizations of the system matrix A_red/k + B_red
    // (shared_ptr: Eigen's sparse factorizations are not movable)
    std::shared_ptr<Eigen::SimplicialLLT<SparseMatrix>> edge_block;
    Eigen::LLT<DenseMatrix> bnode_block;

    int dim() const { return n_interior + n_bnodes; }

    Vector apply_A(const Vector& x) const {
        Vector y = A_sp * x;
        y.tail(n_bnodes).noalias() -= S * x.tail(n_bnodes);
        return y;
    }
    Vector apply_B(const Vector& x) const { return B_sp * x; }
    Vector apply_system(const Vector& x) const { return apply_A(x) / k + apply_B(x); }

    Vector apply_precond(const Vector& x) const {
        Vector y(x.size());
        y.head(n_interior) = edge_block->solve(x.head(n_interior));
        y.tail(n_bnodes) = bnode_block.solve(x.tail(n_bnodes));
        return y;
    }

    // Dense materializations for small instances and oracle tests.
    DenseMatrix dense_A() const {
        DenseMatrix A = DenseMatrix(A_sp);
        A.bottomRightCorner(n_bnodes, n_bnodes) -= S;
        return A;
    }
    DenseMatrix dense_system() const { return dense_A() / k + DenseMatrix(B_sp); }
};

inline EddySystem assemble_eddy_system(const XhSpace& space, const FemMatrices& mats,
                                       const DtnMatrix& dtn, const EddyParams& params) {
    params.validate();
    EddySystem sys;
    sys.k = params.k;
    sys.n_interior = space.n_interior();
    sys.n_bnodes = space.n_boundary_nodes();
    if (dtn.S.rows() != sys.n_bnodes) {
        throw std::invalid_argument("assemble_eddy_system: DtN size mismatch");
    }

    sys.A_sp = SparseMatrix(space.P.transpose() * mats.M_ND * space.P);
    sys.S = dtn.S;
    sys.B_sp = SparseMatrix(space.P.transpose() * mats.C_ND * space.P) /
               (params.sigma * params.mu0);
    sys.load = SparseMatrix(space.P.transpose() * SparseMatrix(mats.X_mix.transpose()));

    // System matrix blocks: edge block is sparse SPD, boundary block carries -S/k.
    SparseMatrix sys_sp = sys.A_sp / params.k + sys.B_sp;
    sys.edge_block = std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>();
    sys.edge_block->compute(SparseMatrix(sys_sp.topLeftCorner(sys.n_interior, sys.n_interior)));
    if (sys.edge_block->info() != Eigen::Success) {
        throw std::runtime_error("assemble_eddy_system: edge block not positive definite");
    }
    DenseMatrix bb = DenseMatrix(sys_sp.bottomRightCorner(sys.n_bnodes, sys.n_bnodes));
    bb -= sys.S / params.k;
    sys.bnode_block.compute(bb);
    if (sys.bnode_block.info() != Eigen::Success) {
        throw std::runtime_error(
            "assemble_eddy_system: boundary block indefinite (broken DtN sign?)");
    }
    return sys;
}

// Solves (A/k + B) x = A x_prev / k - load v.
inline Vector eddy_step(const EddySystem& sys, const Vector& A_prev, const Vector& v,
                        const SolverConfig& solver = {}, SolveReport* report = nullptr) {
    if (A_prev.size() != sys.dim()) throw std::invalid_argument("eddy_step: dimension mismatch");
    Vector rhs = sys.apply_A(A_prev) / sys.k;
    if (v.size() > 0) rhs -= sys.load * v;
    return gmres_solve([&sys](const Vector& x) { return sys.apply_system(x); }, rhs,
                       [&sys](const Vector& x) { return sys.apply_precond(x); }, solver, report);
}

// ||x||_h = sqrt(x^T A_red x) = (||xi||_L2^2 - <S zeta, zeta>)^{1/2}
inline double h_norm(const Vector& x, const EddySystem& sys) {
    return std::sqrt(std::max(0.0, x.dot(sys.apply_A(x))));
}

// E = sigma^-1 curl H elementwise (constant per tet).
inline std::vector<Vec3> recover_e_field(const Vector& H, double sigma, const Mesh& mesh) {
    if (!(sigma > 0.0)) throw std::invalid_argument("recover_e_field: sigma > 0 required");
    auto curls = elementwise_curl(H, mesh);
    for (auto& c : curls) c /= sigma;
    return curls;
}

}  // namespace ellg
