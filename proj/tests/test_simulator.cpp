#include <catch2/catch_amalgamated.hpp>

#include "ellg/simulator.hpp"

using namespace ellg;

TEST_CASE("config validation") {
    SimConfig cfg;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // n, T, k unset
    cfg.n = 2;
    cfg.T = 0.1;
    cfg.k = 0.01;
    CHECK_NOTHROW(cfg.validate());
    cfg.theta = 1.2;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.theta = 1.0;
    cfg.init = "spiral";
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("initial data satisfies the constraints") {
    SimConfig cfg;
    cfg.n = 2;
    cfg.T = 0.01;
    cfg.k = 0.01;
    SimSetup setup(cfg);
    SimState st = initialize(setup);
    for (int z = 0; z < setup.mesh.n_vertices(); ++z) {
        CHECK(st.m.segment<3>(3 * z).norm() == Catch::Approx(1.0).epsilon(1e-12));
    }
    CHECK(xh_constraint_residual(st.A, setup.space, setup.mesh) <= 1e-10);
    // center node carries the vortex core, corners the downward state
    const int N = setup.mesh.n_vertices();
    for (int z = 0; z < N; ++z) {
        const Vec3& x = setup.mesh.vertices[z];
        if (x(0) == 0.5 && x(1) == 0.5) {
            CHECK((st.m.segment<3>(3 * z) - Vec3(0, 0, 1)).norm() <= 1e-13);
        }
        if (x(0) == 0.0 && x(1) == 0.0) {
            CHECK((st.m.segment<3>(3 * z) - Vec3(0, 0, -1)).norm() <= 1e-13);
        }
    }
}

TEST_CASE("uniform initial data is a stationary point") {
    SimConfig cfg;
    cfg.n = 2;
    cfg.T = 0.05;
    cfg.k = 0.01;
    cfg.init = "uniform";
    SimSetup setup(cfg);
    RunResult res = run(setup);
    const Vector m0 = res.m_history.front();
    for (const auto& m : res.m_history) CHECK((m - m0).norm() == 0.0);
    for (const auto& A : res.A_history) CHECK(A.norm() == 0.0);
    for (const auto& row : res.diag.rows) {
        CHECK(row.grad_m_l2 == 0.0);
        CHECK(row.H_l2 == 0.0);
        CHECK(row.mean_mz == Catch::Approx(1.0).epsilon(1e-12));
    }
    // all energy sums collapse to the (zero) initial values
    auto rep = check_energy_bound(setup, res, 1.0);
    CHECK(rep.pass);
    CHECK(rep.max_over_j <= 1e-20);
}

TEST_CASE("runs are bitwise deterministic") {
    SimConfig cfg;
    cfg.n = 2;
    cfg.T = 0.03;
    cfg.k = 0.01;
    SimSetup s1(cfg), s2(cfg);
    RunResult a = run(s1), b = run(s2);
    REQUIRE(a.diag.rows.size() == b.diag.rows.size());
    for (std::size_t i = 0; i < a.diag.rows.size(); ++i) {
        CHECK(a.diag.rows[i].grad_m_l2 == b.diag.rows[i].grad_m_l2);
        CHECK(a.diag.rows[i].H_l2 == b.diag.rows[i].H_l2);
        CHECK(a.diag.rows[i].mean_mz == b.diag.rows[i].mean_mz);
        CHECK(a.diag.rows[i].lambda_h12 == b.diag.rows[i].lambda_h12);
    }
    CHECK((a.state.m - b.state.m).norm() == 0.0);
    CHECK((a.state.A - b.state.A).norm() == 0.0);
}

TEST_CASE("trace constraint and finiteness hold along the run") {
    SimConfig cfg;
    cfg.n = 2;
    cfg.T = 0.05;
    cfg.k = 0.01;
    SimSetup setup(cfg);
    RunResult res = run(setup);
    for (const auto& A : res.A_history) {
        CHECK(A.allFinite());
        CHECK(xh_constraint_residual(A, setup.space, setup.mesh) <= 1e-12);
    }
    for (const auto& row : res.diag.rows) {
        CHECK(std::isfinite(row.H_hcurl));
        CHECK(row.lambda_h12 >= 0.0);
        CHECK(row.max_m_norm >= 1.0 - 1e-12);
    }
}

TEST_CASE("nodal magnitude ledger telescopes") {
    SimConfig cfg;
    cfg.n = 2;
    cfg.T = 0.05;
    cfg.k = 0.01;
    SimSetup setup(cfg);
    RunResult res = run(setup);
    const int N = setup.mesh.n_vertices();
    const int last = static_cast<int>(res.m_history.size()) - 1;
    // find the maximizing node of |m^last(z)|
    int zmax = 0;
    double best = 0.0;
    for (int z = 0; z < N; ++z) {
        const double nz = res.m_history[last].segment<3>(3 * z).norm();
        if (nz > best) {
            best = nz;
            zmax = z;
        }
    }
    double sum = 0.0;
    for (int j = 0; j < last; ++j) {
        sum += cfg.k * cfg.k * res.v_history[j].segment<3>(3 * zmax).squaredNorm();
    }
    CHECK(std::abs(best * best - 1.0 - sum) <= 1e-10);
}

TEST_CASE("velocities are tangent to the running magnetization") {
    SimConfig cfg;
    cfg.n = 2;
    cfg.T = 0.05;
    cfg.k = 0.01;
    SimSetup setup(cfg);
    RunResult res = run(setup);
    for (std::size_t i = 0; i < res.v_history.size(); ++i) {
        for (int z = 0; z < setup.mesh.n_vertices(); ++z) {
            CHECK(std::abs(res.m_history[i].segment<3>(3 * z)
                               .dot(res.v_history[i].segment<3>(3 * z))) <= 1e-10);
        }
    }
}

TEST_CASE("energy bound enforcement aborts over-cap runs") {
    SimConfig cfg;
    cfg.n = 2;
    cfg.T = 0.03;
    cfg.k = 0.01;
    cfg.energy_cap = 1e-12;
    SimSetup setup(cfg);
    CHECK_THROWS_AS(run(setup), std::runtime_error);
    cfg.energy_cap = 500.0;
    SimSetup ok(cfg);
    CHECK_NOTHROW(run(ok));
}

TEST_CASE("theta variants both stay bounded") {
    for (double theta : {1.0, 0.6}) {
        SimConfig cfg;
        cfg.n = 2;
        cfg.T = 0.05;
        cfg.k = 0.01;
        cfg.theta = theta;
        cfg.energy_bound_check = false;
        SimSetup setup(cfg);
        RunResult res = run(setup);
        auto rep = check_energy_bound(setup, res, 500.0);
        CHECK(rep.pass);
    }
}

TEST_CASE("step counting follows N = round(T/k)") {
    SimConfig cfg;
    cfg.n = 1;
    cfg.T = 0.1;
    cfg.k = 0.016;
    CHECK(cfg.n_steps() == 6);
    CHECK_FALSE(cfg.k_divides_T());
    cfg.k = 0.01;
    CHECK(cfg.n_steps() == 10);
    CHECK(cfg.k_divides_T());
}
