// Command-line front end: `simulate <config>` runs the coupled integrator and
// writes CSV + VTK + a JSON manifest, `converge <config> --axis {h|k}` drives
// the self-convergence harness, `selftest` runs the analytic-sphere boundary
// operator checks and the structural invariants.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ellg/config.hpp"
#include "ellg/convergence.hpp"
#include "ellg/io.hpp"
#include "ellg/simulator.hpp"

#ifndef ELLG_BUILD_ID
#define ELLG_BUILD_ID "dev"
#endif

namespace {

constexpr int kExitSolverFailure = 2;
constexpr int kExitConfigError = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ellg::ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void apply_thread_env() {
    if (const char* s = std::getenv("ELLG_NUM_THREADS")) {
        const int n = std::atoi(s);
        if (n > 0) Eigen::setNbThreads(n);
    }
}

int cmd_simulate(const std::string& config_path) {
    ellg::SimConfig cfg = ellg::parse_config(read_file(config_path));
    ellg::SimSetup setup(cfg);

    const auto t0 = std::chrono::steady_clock::now();
    const ellg::RunResult res = ellg::run(setup, cfg.energy_bound_check);
    const double step_seconds = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - t0).count();

    std::filesystem::create_directories(cfg.out_dir);
    const std::string csv = cfg.out_dir + "/diagnostics.csv";
    const std::string vtk = cfg.out_dir + "/state_final.vtk";
    const std::string man_path = cfg.out_dir + "/manifest.json";
    ellg::write_diagnostics_csv(res.diag, csv);
    ellg::write_vtk(res.state.m, ellg::embed(res.state.A, setup.space).edge_field, setup.mesh,
                    cfg.sigma, vtk);
    ellg::RunManifest man;
    man.config = cfg;
    man.build_id = ELLG_BUILD_ID;
    man.phase_seconds = {{"assembly", setup.assembly_seconds},
                         {"bem", setup.bem_seconds},
                         {"steps", step_seconds}};
    man.output_paths = {csv, vtk, man_path};
    ellg::write_manifest(man, man_path);

    const auto& last = res.diag.rows.back();
    std::cout << "completed " << cfg.n_steps() << " steps to t=" << last.t
              << "; mean m_z " << res.diag.rows.front().mean_mz << " -> " << last.mean_mz << "\n";
    std::cout << "outputs: " << csv << ", " << vtk << ", " << man_path << "\n";
    return 0;
}

int cmd_converge(const std::string& config_path, const std::string& axis,
                 const std::vector<double>& params, double ref) {
    ellg::SimConfig cfg = ellg::parse_config(read_file(config_path));
    cfg.energy_bound_check = false;
    const auto study = ellg::run_convergence_study(cfg, axis[0], params, ref);
    std::cout << "axis=" << study.axis << " ref=" << study.ref_param << "\n";
    std::cout << "param,E_m,E_H\n";
    for (const auto& row : study.rows) {
        std::cout << row.param << "," << row.E_m << "," << row.E_H << "\n";
    }
    std::cout << "slope_m=" << study.slope_m << " slope_H=" << study.slope_H << "\n";
    return 0;
}

bool check(bool ok, const std::string& name, int& failures) {
    std::cout << (ok ? "pass" : "FAIL") << "  " << name << "\n";
    if (!ok) ++failures;
    return ok;
}

int cmd_selftest() {
    using namespace ellg;
    int failures = 0;

    double prev_res_1 = 1e30, prev_res_x3 = 1e30;
    for (int level = 1; level <= 2; ++level) {
        SurfaceMesh ico = build_icosphere(level);
        auto ops = assemble_layer_operators(ico, 4);
        Vector one_t = Vector::Ones(ico.n_triangles());
        Vector areas(ico.n_triangles());
        for (int t = 0; t < ico.n_triangles(); ++t) areas(t) = ico.areas[t];
        const double errV = (ops.V * one_t - areas).norm() / areas.norm();
        check(errV < (level == 1 ? 0.10 : 0.05),
              "sphere single layer, level " + std::to_string(level) + " (err " +
                  std::to_string(errV) + ")",
              failures);

        auto dtn = build_dtn_symmetric(ops);
        check((dtn.S - dtn.S.transpose()).norm() <= 1e-10 * dtn.S.norm(),
              "boundary map symmetric, level " + std::to_string(level), failures);
        check(smallest_eigenvalue_symmetric(DenseMatrix(-dtn.S)) > 0.0,
              "boundary map negative definite, level " + std::to_string(level), failures);

        Vector one_v = Vector::Ones(ico.n_vertices());
        Vector x3(ico.n_vertices());
        for (int i = 0; i < ico.n_vertices(); ++i) x3(i) = ico.vertices[i](2);
        const double r1 = (dtn.S * one_v + ops.MG * one_v).norm() / (ops.MG * one_v).norm();
        const double rx = (dtn.S * x3 + 2.0 * ops.MG * x3).norm() / (ops.MG * x3).norm();
        check(r1 < prev_res_1, "constant-trace residual decreasing, level " + std::to_string(level),
              failures);
        check(rx < prev_res_x3, "linear-trace residual decreasing, level " + std::to_string(level),
              failures);
        prev_res_1 = r1;
        prev_res_x3 = rx;
        check((ops.W * one_v).norm() <= 1e-10 * std::max(1.0, ops.W.norm()),
              "hypersingular kernel annihilates constants, level " + std::to_string(level),
              failures);
    }

    // structural invariants on a small cube instance
    SimConfig cfg;
    cfg.n = 2;
    cfg.T = 0.02;
    cfg.k = 0.01;
    SimSetup setup(cfg);
    const RunResult res = run(setup);
    check(res.diag.rows.back().max_m_norm >= 1.0, "nodal magnitudes grow monotonically", failures);
    double cres = 0.0;
    cres = xh_constraint_residual(res.state.A, setup.space, setup.mesh);
    check(cres <= 1e-12, "trace constraint preserved (res " + std::to_string(cres) + ")", failures);
    double tangency = 0.0;
    for (std::size_t i = 0; i < res.v_history.size(); ++i) {
        const Vector& m = res.m_history[i];
        const Vector& v = res.v_history[i];
        for (int z = 0; z < setup.mesh.n_vertices(); ++z) {
            tangency = std::max(tangency, std::abs(m.segment<3>(3 * z).dot(v.segment<3>(3 * z))));
        }
    }
    check(tangency <= 1e-10, "nodewise tangency (max " + std::to_string(tangency) + ")", failures);

    std::cout << (failures == 0 ? "selftest passed" : "selftest FAILED") << "\n";
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_env();
    CLI::App app{"coupled eddy-current / magnetization simulator"};
    app.require_subcommand(1);

    std::string config_path;
    auto* sim = app.add_subcommand("simulate", "run a simulation from a config file");
    sim->add_option("config", config_path, "key=value config file")->required();

    std::string conv_config, axis;
    std::vector<double> params;
    double ref = 0.0;
    auto* conv = app.add_subcommand("converge", "self-convergence study");
    conv->add_option("config", conv_config, "base config file")->required();
    conv->add_option("--axis", axis, "refinement axis: h or k")
        ->required()
        ->check(CLI::IsMember({"h", "k"}));
    conv->add_option("--params", params, "parameter list (k values or n values)")
        ->required()
        ->delimiter(',');
    conv->add_option("--ref", ref, "reference parameter (strictly finer)")->required();

    auto* self = app.add_subcommand("selftest", "boundary-operator and structural checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(config_path);
        if (conv->parsed()) return cmd_converge(conv_config, axis, params, ref);
        if (self->parsed()) return cmd_selftest();
    } catch (const ellg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const ellg::SolverFailure& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolverFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
