#pragma once

// Orchestration of the decoupled integrator: initial data, the N-step loop
// (tangent-plane solve, nodewise update, eddy solve), per-step diagnostics
// and the discrete energy-bound oracle.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ellg/bem.hpp"
#include "ellg/coupled_space.hpp"
#include "ellg/eddy_step.hpp"
#include "ellg/fem.hpp"
#include "ellg/llg_step.hpp"
#include "ellg/mesh.hpp"
#include "ellg/numerics.hpp"

namespace ellg {

struct SimConfig {
    int n = 0;            // cells per axis
    double T = 0.0;       // final time
    double k = 0.0;       // time step
    double theta = 1.0;
    double alpha = 0.5;
    double mu0 = 1.25667e-6;
    double Ce = 2.6e-11 / (1.25667e-6 * 6.4e11);
    double sigma = 1.0;
    std::string init = "mumag1";  // mumag1 | uniform
    double gmres_tol = 1e-10;
    int quad_order = 4;
    std::string out_dir = ".";
    double energy_cap = 500.0;
    bool energy_bound_check = true;
    bool johnson_nedelec = false;  // comparison only; symmetric coupling is the default

    int n_steps() const { return static_cast<int>(std::llround(T / k)); }
    bool k_divides_T() const { return std::abs(n_steps() * k - T) <= 1e-12 * std::max(1.0, T); }

    void validate() const {
        if (n < 1) throw std::invalid_argument("config: n must be >= 1");
        if (!(T > 0.0)) throw std::invalid_argument("config: T must be > 0");
        if (!(k > 0.0)) throw std::invalid_argument("config: k must be > 0");
        if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("config: theta in [0,1]");
        if (!(alpha > 0.0 && Ce > 0.0 && mu0 > 0.0 && sigma > 0.0))
            throw std::invalid_argument("config: alpha, Ce, mu0, sigma must be > 0");
        if (!(gmres_tol > 0.0 && gmres_tol < 1.0))
            throw std::invalid_argument("config: gmres_tol in (0,1)");
        if (quad_order < 1) throw std::invalid_argument("config: quad_order >= 1");
        if (init != "mumag1" && init != "uniform")
            throw std::invalid_argument("config: init must be mumag1 or uniform");
        if (n_steps() < 1) throw std::invalid_argument("config: T/k must round to >= 1 step");
    }
};

struct SimState {
    int step = 0;
    Vector m;  // nodal magnetization (3N)
    Vector A;  // XhVector carrying (H, lambda)
    Vector v;  // last tangent velocity (3N)
};

struct DiagnosticsRow {
    double t = 0.0;
    double grad_m_l2 = 0.0;
    double H_l2 = 0.0;
    double curl_H_l2 = 0.0;
    double H_hcurl = 0.0;
    double lambda_h12 = 0.0;  // sqrt(-lambda^T S lambda) surrogate
    double mean_mz = 0.0;
    double max_m_norm = 0.0;
    int gmres_llg = 0;
    int gmres_eddy = 0;
};

struct Diagnostics {
    std::vector<DiagnosticsRow> rows;
    double cum_v_l2_sq = 0.0;       // k sum ||v^i||^2
    double cum_curl_H_sq = 0.0;     // k sum ||curl H^{i+1}||^2
};

// Everything assembled once per (mesh, coupling, k) combination.
struct SimSetup {
    SimConfig cfg;
    Mesh mesh;
    SurfaceMesh surface;
    FemMatrices mats;
    BemOperators bem;
    DtnMatrix dtn;
    XhSpace space;
    EddySystem eddy;
    SolverConfig solver;
    double assembly_seconds = 0.0;
    double bem_seconds = 0.0;

    explicit SimSetup(const SimConfig& config) : cfg(config) {
        cfg.validate();
        if (cfg.theta <= 0.5) {
            const double h = std::sqrt(3.0) / cfg.n;
            const double limit = (cfg.theta < 0.5) ? h * h : h;
            if (cfg.k > limit) {
                std::cerr << "warning: theta=" << cfg.theta << " requires k = o("
                          << (cfg.theta < 0.5 ? "h^2" : "h") << "); k=" << cfg.k
                          << " exceeds " << limit << "\n";
            }
        }
        if (!cfg.k_divides_T()) {
            std::cerr << "warning: k does not divide T; running " << cfg.n_steps()
                      << " steps to t=" << cfg.n_steps() * cfg.k << "\n";
        }
        const auto t0 = std::chrono::steady_clock::now();
        mesh = build_cube_mesh(cfg.n);
        surface = extract_boundary(mesh);
        mats = assemble_fem_matrices(mesh);
        const auto t1 = std::chrono::steady_clock::now();
        bem = assemble_layer_operators(surface, cfg.quad_order);
        dtn = cfg.johnson_nedelec ? build_dtn_johnson_nedelec(bem) : build_dtn_symmetric(bem);
        const auto t2 = std::chrono::steady_clock::now();
        space = build_xh_space(mesh, surface);
        eddy = assemble_eddy_system(space, mats, dtn, {cfg.sigma, cfg.mu0, cfg.k});
        solver.tol = cfg.gmres_tol;
        assembly_seconds = std::chrono::duration<double>(t1 - t0).count() +
                           std::chrono::duration<double>(std::chrono::steady_clock::now() - t2).count();
        bem_seconds = std::chrono::duration<double>(t2 - t1).count();
    }
};

inline double xh_constraint_residual(const Vector& A, const XhSpace& space, const Mesh& mesh) {
    const auto pair = embed(A, space);
    double res = 0.0;
    for (int e : mesh.boundary_edges) {
        const int a = mesh.edges[e][0], b = mesh.edges[e][1];
        const double diff = pair.boundary_nodal(space.node_to_xh[b] - space.n_interior()) -
                            pair.boundary_nodal(space.node_to_xh[a] - space.n_interior());
        res = std::max(res, std::abs(pair.edge_field(e) - diff));
    }
    return res;
}

inline SimState initialize(const SimSetup& setup) {
    const SimConfig& cfg = setup.cfg;
    SimState st;
    st.step = 0;
    st.v = Vector::Zero(3 * setup.mesh.n_vertices());

    std::function<Vec3(const Vec3&)> m0;
    std::function<Vec3(const Vec3&)> H0;
    std::function<double(const Vec3&)> lam0;
    if (cfg.init == "mumag1") {
        m0 = [](const Vec3& x) { return mumag_initial_m(x); };
        H0 = [](const Vec3&) { return Vec3(0, 0, 3); };
        lam0 = [](const Vec3& x) { return 3.0 * x(2); };
    } else {  // uniform
        m0 = [](const Vec3&) { return Vec3(0, 0, 1); };
        H0 = [](const Vec3&) { return Vec3::Zero().eval(); };
        lam0 = [](const Vec3&) { return 0.0; };
    }

    st.m = interpolate_nodal(m0, setup.mesh);
    for (int z = 0; z < setup.mesh.n_vertices(); ++z) {
        st.m.segment<3>(3 * z).normalize();
    }

    const Vector Hc = interpolate_edge(H0, setup.mesh);
    st.A = Vector::Zero(setup.space.dim());
    for (int i = 0; i < setup.space.n_interior(); ++i) {
        st.A(i) = Hc(setup.space.interior_edges[i]);
    }
    for (int b = 0; b < setup.space.n_boundary_nodes(); ++b) {
        st.A(setup.space.n_interior() + b) =
            lam0(setup.mesh.vertices[setup.space.boundary_nodes[b]]);
    }

    const double res = xh_constraint_residual(st.A, setup.space, setup.mesh);
    const double hscale = std::max(1.0, Hc.cwiseAbs().maxCoeff());
    if (res > 1e-10 * hscale) {
        throw std::runtime_error("initialize: initial pair violates the X_h trace constraint (" +
                                 std::to_string(res) + ")");
    }
    return st;
}

inline DiagnosticsRow collect_row(const SimSetup& setup, const SimState& st, double t,
                                  int it_llg, int it_eddy) {
    DiagnosticsRow row;
    row.t = t;
    const auto pair = embed(st.A, setup.space);
    const auto en = evaluate_energies(st.m, pair.edge_field, setup.mats);
    row.grad_m_l2 = en.grad_m_l2;
    row.H_l2 = en.H_l2;
    row.curl_H_l2 = en.curl_H_l2;
    row.H_hcurl = std::sqrt(en.H_l2 * en.H_l2 + en.curl_H_l2 * en.curl_H_l2);
    const Vector lam = pair.boundary_nodal;
    row.lambda_h12 = std::sqrt(std::max(0.0, -lam.dot(setup.dtn.S * lam)));
    // volume averages and nodal magnitude ledger
    const int N = setup.mesh.n_vertices();
    Vector mz(N), ones = Vector::Ones(N);
    for (int z = 0; z < N; ++z) mz(z) = st.m(3 * z + 2);
    row.mean_mz = ones.dot(setup.mats.M_scalar * mz);  // |D| = 1
    row.max_m_norm = 0.0;
    for (int z = 0; z < N; ++z) {
        row.max_m_norm = std::max(row.max_m_norm, st.m.segment<3>(3 * z).norm());
    }
    row.gmres_llg = it_llg;
    row.gmres_eddy = it_eddy;
    return row;
}

struct RunResult {
    Diagnostics diag;
    SimState state;
    // per-step history for energy bounds and convergence studies
    std::vector<Vector> m_history;  // m^0 .. m^N
    std::vector<Vector> A_history;  // A^0 .. A^N
    std::vector<Vector> v_history;  // v^0 .. v^{N-1}
};

struct EnergyBoundReport {
    double max_over_j = 0.0;
    int argmax_j = 0;
    bool pass = true;
    std::vector<double> per_j;
};

inline EnergyBoundReport check_energy_bound(const SimSetup& setup, const RunResult& res,
                                            double cap);

inline RunResult run(const SimSetup& setup, bool keep_history = true) {
    const SimConfig& cfg = setup.cfg;
    const int N = cfg.n_steps();
    RunResult out;
    SimState st = initialize(setup);

    out.diag.rows.push_back(collect_row(setup, st, 0.0, 0, 0));
    if (keep_history) {
        out.m_history.push_back(st.m);
        out.A_history.push_back(st.A);
    }

    LlgStepParams llg_params{cfg.alpha, cfg.Ce, cfg.theta, cfg.k};
    for (int i = 0; i < N; ++i) {
        SolveReport rep_llg, rep_eddy;
        const auto pair = embed(st.A, setup.space);
        const auto frame = build_tangent_frame(st.m);
        Vector v;
        try {
            v = solve_llg_step(st.m, pair.edge_field, frame, setup.mats, setup.mesh, llg_params,
                               setup.solver, &rep_llg);
            st.m = update_magnetization(st.m, v, cfg.k);
            st.A = eddy_step(setup.eddy, st.A, v, setup.solver, &rep_eddy);
        } catch (const SolverFailure& e) {
            throw SolverFailure("step " + std::to_string(i) + ": " + e.what(), e.final_residual);
        }
        st.v = v;
        st.step = i + 1;
        if (!st.m.allFinite() || !st.A.allFinite()) {
            throw std::runtime_error("run: non-finite state at step " + std::to_string(i));
        }

        const auto en = evaluate_energies(st.m, embed(st.A, setup.space).edge_field, setup.mats);
        out.diag.cum_v_l2_sq += cfg.k * v.dot(apply_vector_blocks(setup.mats.M_scalar, v));
        out.diag.cum_curl_H_sq += cfg.k * en.curl_H_l2 * en.curl_H_l2;
        out.diag.rows.push_back(
            collect_row(setup, st, (i + 1) * cfg.k, rep_llg.iterations, rep_eddy.iterations));
        if (keep_history) {
            out.m_history.push_back(st.m);
            out.A_history.push_back(st.A);
            out.v_history.push_back(v);
        }
    }
    out.state = st;

    if (cfg.energy_bound_check && keep_history) {
        const auto report = check_energy_bound(setup, out, cfg.energy_cap);
        if (!report.pass) {
            throw std::runtime_error("run: energy bound exceeded (max " +
                                     std::to_string(report.max_over_j) + " > cap " +
                                     std::to_string(cfg.energy_cap) + ")");
        }
    }
    return out;
}

// Left-hand side of the discrete energy bound, evaluated for each j;
// H^{1/2} terms use the -<S zeta, zeta> surrogate.
inline EnergyBoundReport check_energy_bound(const SimSetup& setup, const RunResult& res,
                                            double cap) {
    EnergyBoundReport rep;
    const double k = setup.cfg.k;
    const double theta = setup.cfg.theta;
    const int N = static_cast<int>(res.v_history.size());
    const auto& mats = setup.mats;

    auto lam_of = [&](const Vector& A) { return Vector(A.tail(setup.space.n_boundary_nodes())); };
    auto h12_sq = [&](const Vector& lam) { return std::max(0.0, -lam.dot(setup.dtn.S * lam)); };
    auto edge_of = [&](const Vector& A) { return Vector(setup.space.P * A); };

    double sum_incr = 0.0, sum_curl = 0.0, sum_gradv = 0.0, sum_v = 0.0, sum_dt = 0.0,
           sum_curl_incr = 0.0;
    for (int j = 1; j <= N; ++j) {
        const Vector dH = edge_of(res.A_history[j]) - edge_of(res.A_history[j - 1]);
        const Vector dlam = lam_of(res.A_history[j]) - lam_of(res.A_history[j - 1]);
        const Vector Hj = edge_of(res.A_history[j]);
        const Vector& v = res.v_history[j - 1];

        sum_incr += dH.dot(mats.M_ND * dH) + h12_sq(dlam);
        sum_curl += k * Hj.dot(mats.C_ND * Hj);
        sum_gradv += std::max(2.0 * theta - 1.0, 0.0) * k * k *
                     v.dot(apply_vector_blocks(mats.K_scalar, v));
        sum_v += k * v.dot(apply_vector_blocks(mats.M_scalar, v));
        sum_dt += (dH.dot(mats.M_ND * dH) + h12_sq(dlam)) / k;  // k ||d_t .||^2 = ||incr||^2 / k
        sum_curl_incr += dH.dot(mats.C_ND * dH);

        const Vector& mj = res.m_history[j];
        const double grad_m_sq = mj.dot(apply_vector_blocks(mats.K_scalar, mj));
        const Vector lamj = lam_of(res.A_history[j]);
        const double total = sum_incr + sum_curl + Hj.dot(mats.M_ND * Hj) +
                             Hj.dot(mats.C_ND * Hj) + h12_sq(lamj) + grad_m_sq + sum_gradv +
                             sum_v + sum_dt + sum_curl_incr;
        rep.per_j.push_back(total);
        if (total > rep.max_over_j) {
            rep.max_over_j = total;
            rep.argmax_j = j;
        }
    }
    rep.pass = rep.max_over_j <= cap;
    return rep;
}

}  // namespace ellg
