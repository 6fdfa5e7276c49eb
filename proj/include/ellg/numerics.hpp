#pragma once

// Shared linear algebra: restarted GMRES, block-diagonal preconditioning and
// a symmetric smallest-eigenvalue helper. Matrix storage is Eigen.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace ellg {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct SolverConfig {
    double tol = 1e-10;   // relative residual tolerance
    int max_iter = 5000;  // total Krylov iterations across restarts
    int restart = 100;

    void validate() const {
        if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("SolverConfig: tol must be in (0,1)");
        if (max_iter < 1) throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
    }
};

struct SolveReport {
    int iterations = 0;
    double residual = 0.0;  // achieved relative residual
};

class SolverFailure : public std::runtime_error {
  public:
    SolverFailure(const std::string& msg, double residual)
        : std::runtime_error(msg), final_residual(residual) {}
    double final_residual;
};

using MatVec = std::function<Vector(const Vector&)>;

// Right-preconditioned restarted GMRES. The returned x satisfies
// ||Ax-b|| / ||b|| <= cfg.tol; the relative residual is non-increasing
// across restarts by construction (each cycle starts from the last iterate).
inline Vector gmres_solve(const MatVec& apply_A, const Vector& b, const MatVec& apply_M,
                          const SolverConfig& cfg, SolveReport* report = nullptr) {
    cfg.validate();
    const int n = static_cast<int>(b.size());
    const double bnorm = b.norm();
    Vector x = Vector::Zero(n);
    if (bnorm == 0.0) {
        if (report) *report = {0, 0.0};
        return x;
    }

    int total_iters = 0;
    double rel = 1.0;
    const int m = std::min(cfg.restart, n);
    while (total_iters < cfg.max_iter) {
        Vector r = b - apply_A(x);
        double beta = r.norm();
        rel = beta / bnorm;
        if (rel <= cfg.tol) break;

        DenseMatrix Q(n, m + 1);
        DenseMatrix H = DenseMatrix::Zero(m + 1, m);
        Q.col(0) = r / beta;
        Vector g = Vector::Zero(m + 1);
        g(0) = beta;
        std::vector<double> cs(m), sn(m);

        int j = 0;
        for (; j < m && total_iters < cfg.max_iter; ++j, ++total_iters) {
            Vector w = apply_A(apply_M ? apply_M(Q.col(j)) : Vector(Q.col(j)));
            for (int i = 0; i <= j; ++i) {
                H(i, j) = Q.col(i).dot(w);
                w -= H(i, j) * Q.col(i);
            }
            H(j + 1, j) = w.norm();
            if (H(j + 1, j) > 0.0) Q.col(j + 1) = w / H(j + 1, j);

            for (int i = 0; i < j; ++i) {
                double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
                H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
                H(i, j) = t;
            }
            double denom = std::hypot(H(j, j), H(j + 1, j));
            cs[j] = denom > 0.0 ? H(j, j) / denom : 1.0;
            sn[j] = denom > 0.0 ? H(j + 1, j) / denom : 0.0;
            H(j, j) = denom;
            H(j + 1, j) = 0.0;
            g(j + 1) = -sn[j] * g(j);
            g(j) = cs[j] * g(j);

            rel = std::abs(g(j + 1)) / bnorm;
            if (rel <= cfg.tol) {
                ++j;
                ++total_iters;
                break;
            }
        }
        if (j > 0) {
            Vector y = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
            Vector z = Q.leftCols(j) * y;
            x += apply_M ? apply_M(z) : z;
        }
        if (rel <= cfg.tol) {
            // recompute the true residual once for the report
            rel = (b - apply_A(x)).norm() / bnorm;
            if (rel <= 10.0 * cfg.tol) break;
        }
        if (j == 0) break;  // stagnation
    }

    if (report) *report = {total_iters, rel};
    if (rel > 10.0 * cfg.tol) {
        throw SolverFailure("gmres_solve: no convergence after " + std::to_string(total_iters) +
                                " iterations, residual " + std::to_string(rel),
                            rel);
    }
    return x;
}

inline Vector gmres_solve(const DenseMatrix& A, const Vector& b, const MatVec& precond,
                          const SolverConfig& cfg, SolveReport* report = nullptr) {
    if (A.rows() != A.cols() || A.rows() != b.size())
        throw std::invalid_argument("gmres_solve: dimension mismatch");
    return gmres_solve([&A](const Vector& v) { return Vector(A * v); }, b, precond, cfg, report);
}

inline Vector gmres_solve(const SparseMatrix& A, const Vector& b, const MatVec& precond,
                          const SolverConfig& cfg, SolveReport* report = nullptr) {
    if (A.rows() != A.cols() || A.rows() != b.size())
        throw std::invalid_argument("gmres_solve: dimension mismatch");
    return gmres_solve([&A](const Vector& v) { return Vector(A * v); }, b, precond, cfg, report);
}

struct IndexRange {
    int begin = 0;
    int end = 0;  // exclusive
    int size() const { return end - begin; }
};

// Applies the inverse of the diagonal blocks of A, factorized once.
class BlockDiagonalPreconditioner {
  public:
    template <typename MatrixLike>
    BlockDiagonalPreconditioner(const MatrixLike& A, const std::vector<IndexRange>& blocks) {
        check_partition(static_cast<int>(A.rows()), blocks);
        ranges_ = blocks;
        factors_.reserve(blocks.size());
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            DenseMatrix blk = extract_block(A, blocks[b]);
            Eigen::PartialPivLU<DenseMatrix> lu(blk);
            if (std::abs(lu.determinant()) < 1e-300) {
                throw std::runtime_error("BlockDiagonalPreconditioner: singular block " +
                                         std::to_string(b));
            }
            factors_.push_back(std::move(lu));
        }
    }

    Vector apply(const Vector& v) const {
        Vector out(v.size());
        for (std::size_t b = 0; b < ranges_.size(); ++b) {
            out.segment(ranges_[b].begin, ranges_[b].size()) =
                factors_[b].solve(v.segment(ranges_[b].begin, ranges_[b].size()));
        }
        return out;
    }

    MatVec as_matvec() const {
        return [this](const Vector& v) { return apply(v); };
    }

  private:
    static void check_partition(int n, const std::vector<IndexRange>& blocks) {
        int covered = 0;
        for (const auto& r : blocks) {
            if (r.begin != covered) throw std::invalid_argument("block ranges must partition [0,n)");
            covered = r.end;
        }
        if (covered != n) throw std::invalid_argument("block ranges must partition [0,n)");
    }

    static DenseMatrix extract_block(const DenseMatrix& A, const IndexRange& r) {
        return A.block(r.begin, r.begin, r.size(), r.size());
    }
    static DenseMatrix extract_block(const SparseMatrix& A, const IndexRange& r) {
        DenseMatrix blk = DenseMatrix::Zero(r.size(), r.size());
        for (int col = r.begin; col < r.end; ++col) {
            for (SparseMatrix::InnerIterator it(A, col); it; ++it) {
                if (it.row() >= r.begin && it.row() < r.end) {
                    blk(it.row() - r.begin, col - r.begin) = it.value();
                }
            }
        }
        return blk;
    }

    std::vector<IndexRange> ranges_;
    std::vector<Eigen::PartialPivLU<DenseMatrix>> factors_;
};

inline double smallest_eigenvalue_symmetric(const DenseMatrix& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("smallest_eigenvalue_symmetric: not square");
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw std::invalid_argument("smallest_eigenvalue_symmetric: matrix is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(A, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

}  // namespace ellg
