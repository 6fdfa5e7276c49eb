#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ellg/numerics.hpp"

using namespace ellg;

namespace {

DenseMatrix random_spd(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    DenseMatrix B(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) B(i, j) = N(rng);
    return B * B.transpose() + n * DenseMatrix::Identity(n, n);
}

Vector random_vector(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = N(rng);
    return v;
}

}  // namespace

TEST_CASE("gmres solves an SPD system to tolerance") {
    const int n = 50;
    DenseMatrix A = random_spd(n, 11);
    Vector xtrue = random_vector(n, 12);
    Vector b = A * xtrue;
    SolveReport rep;
    Vector x = gmres_solve(A, b, nullptr, {}, &rep);
    CHECK((A * x - b).norm() / b.norm() <= 1e-9);
    CHECK((x - xtrue).norm() / xtrue.norm() <= 1e-7);
    CHECK(rep.iterations > 0);
    CHECK(rep.residual <= 1e-9);
}

TEST_CASE("gmres handles a nonsymmetric system") {
    const int n = 40;
    std::mt19937 rng(5);
    std::normal_distribution<double> N(0.0, 1.0);
    DenseMatrix A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = N(rng);
    A += 10.0 * DenseMatrix::Identity(n, n);
    Vector b = random_vector(n, 6);
    Vector x = gmres_solve(A, b, nullptr, {}, nullptr);
    CHECK((A * x - b).norm() / b.norm() <= 1e-9);
}

TEST_CASE("gmres zero right-hand side returns zero") {
    DenseMatrix A = random_spd(10, 3);
    SolveReport rep;
    Vector x = gmres_solve(A, Vector::Zero(10), nullptr, {}, &rep);
    CHECK(x.norm() == 0.0);
    CHECK(rep.iterations == 0);
}

TEST_CASE("gmres respects restart cycles") {
    const int n = 60;
    DenseMatrix A = random_spd(n, 21);
    Vector b = random_vector(n, 22);
    SolverConfig cfg;
    cfg.restart = 10;
    Vector x = gmres_solve(A, b, nullptr, cfg, nullptr);
    CHECK((A * x - b).norm() / b.norm() <= 1e-9);
}

TEST_CASE("gmres reports failure on iteration exhaustion") {
    // an orthogonal shift matrix needs n iterations; allow only a few
    const int n = 30;
    DenseMatrix A = DenseMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) A((i + 1) % n, i) = 1.0;
    Vector b = Vector::Unit(n, 0);
    SolverConfig cfg;
    cfg.max_iter = 5;
    cfg.restart = 5;
    REQUIRE_THROWS_AS(gmres_solve(A, b, nullptr, cfg, nullptr), SolverFailure);
    try {
        gmres_solve(A, b, nullptr, cfg, nullptr);
    } catch (const SolverFailure& e) {
        CHECK(e.final_residual > 0.0);
    }
}

TEST_CASE("solver config validation") {
    SolverConfig cfg;
    cfg.tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.max_iter = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("block preconditioner equals blockwise inverse") {
    DenseMatrix A = random_spd(8, 31);
    std::vector<IndexRange> blocks = {{0, 3}, {3, 5}, {5, 8}};
    BlockDiagonalPreconditioner P(A, blocks);
    Vector v = random_vector(8, 32);
    Vector out = P.apply(v);
    for (const auto& r : blocks) {
        DenseMatrix blk = A.block(r.begin, r.begin, r.size(), r.size());
        Vector expect = blk.lu().solve(v.segment(r.begin, r.size()));
        CHECK((out.segment(r.begin, r.size()) - expect).norm() <= 1e-12 * expect.norm());
    }
}

TEST_CASE("block preconditioner accelerates a block dominant system") {
    const int n = 30;
    DenseMatrix A = random_spd(n, 41);
    std::vector<IndexRange> blocks;
    for (int i = 0; i < n; i += 3) blocks.push_back({i, i + 3});
    BlockDiagonalPreconditioner P(A, blocks);
    Vector b = random_vector(n, 42);
    SolveReport plain, pre;
    gmres_solve(A, b, nullptr, {}, &plain);
    Vector x = gmres_solve(A, b, P.as_matvec(), {}, &pre);
    CHECK((A * x - b).norm() / b.norm() <= 1e-9);
    CHECK(pre.iterations <= plain.iterations);
}

TEST_CASE("block preconditioner rejects bad partitions and singular blocks") {
    DenseMatrix A = random_spd(6, 51);
    CHECK_THROWS_AS(BlockDiagonalPreconditioner(A, {{0, 2}, {3, 6}}), std::invalid_argument);
    CHECK_THROWS_AS(BlockDiagonalPreconditioner(A, {{0, 6}, {0, 6}}), std::invalid_argument);
    DenseMatrix Z = DenseMatrix::Zero(4, 4);
    CHECK_THROWS_AS(BlockDiagonalPreconditioner(Z, {{0, 2}, {2, 4}}), std::runtime_error);
}

TEST_CASE("sparse block extraction matches dense") {
    DenseMatrix A = random_spd(9, 61);
    SparseMatrix As = A.sparseView();
    std::vector<IndexRange> blocks = {{0, 4}, {4, 9}};
    BlockDiagonalPreconditioner Pd(A, blocks);
    BlockDiagonalPreconditioner Ps(As, blocks);
    Vector v = random_vector(9, 62);
    CHECK((Pd.apply(v) - Ps.apply(v)).norm() <= 1e-13 * v.norm());
}

TEST_CASE("smallest eigenvalue of known matrices") {
    DenseMatrix D = Vector::LinSpaced(5, 2.0, 6.0).asDiagonal();
    CHECK(smallest_eigenvalue_symmetric(D) == Catch::Approx(2.0).epsilon(1e-12));

    // 1D Laplacian eigenvalues 2 - 2cos(k pi / (n+1))
    const int n = 12;
    DenseMatrix L = DenseMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        L(i, i) = 2.0;
        if (i > 0) L(i, i - 1) = L(i - 1, i) = -1.0;
    }
    const double expect = 2.0 - 2.0 * std::cos(M_PI / (n + 1));
    CHECK(smallest_eigenvalue_symmetric(L) == Catch::Approx(expect).epsilon(1e-10));

    DenseMatrix Ind = -3.0 * DenseMatrix::Identity(4, 4);
    CHECK(smallest_eigenvalue_symmetric(Ind) == Catch::Approx(-3.0));
}

TEST_CASE("smallest eigenvalue rejects asymmetric input") {
    DenseMatrix A = DenseMatrix::Zero(3, 3);
    A(0, 1) = 1.0;
    CHECK_THROWS_AS(smallest_eigenvalue_symmetric(A), std::invalid_argument);
    CHECK_THROWS_AS(smallest_eigenvalue_symmetric(DenseMatrix::Zero(2, 3)), std::invalid_argument);
}
