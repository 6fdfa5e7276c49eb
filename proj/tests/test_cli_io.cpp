#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ellg/config.hpp"
#include "ellg/convergence.hpp"
#include "ellg/io.hpp"

using namespace ellg;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("minimal config gets the standard defaults") {
    SimConfig cfg = parse_config("n=5\nT=5\nk=0.002\n");
    CHECK(cfg.n == 5);
    CHECK(cfg.T == 5.0);
    CHECK(cfg.k == 0.002);
    CHECK(cfg.theta == 1.0);
    CHECK(cfg.alpha == 0.5);
    CHECK(cfg.sigma == 1.0);
    CHECK(cfg.mu0 == Catch::Approx(1.25667e-6));
    CHECK(cfg.Ce == Catch::Approx(2.6e-11 / (1.25667e-6 * 6.4e11)));
    CHECK(cfg.init == "mumag1");
}

TEST_CASE("config parsing errors") {
    CHECK_THROWS_AS(parse_config(""), ConfigError);
    CHECK_THROWS_WITH(parse_config(""), Catch::Matchers::ContainsSubstring("missing required key n"));
    CHECK_THROWS_WITH(parse_config("n=2\nk=0.01\n"),
                      Catch::Matchers::ContainsSubstring("missing required key T"));
    CHECK_THROWS_WITH(parse_config("n=2\nT=1\nk=0.01\nbogus=3\n"),
                      Catch::Matchers::ContainsSubstring("unknown key 'bogus'"));
    CHECK_THROWS_WITH(parse_config("n=2\nT=1\nk=0.01\nbogus=3\n"),
                      Catch::Matchers::ContainsSubstring("line 4"));
    CHECK_THROWS_AS(parse_config("n=2\nT=1\nk=0.01\ntheta=1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("n=two\nT=1\nk=0.01\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("n=2 T=1\n"), ConfigError);
}

TEST_CASE("comments and blank lines are ignored") {
    SimConfig cfg = parse_config("# a comment\n\nn=3\nT=1\n k = 0.01 \n");
    CHECK(cfg.n == 3);
    CHECK(cfg.k == 0.01);
}

TEST_CASE("config round-trips through serialization") {
    SimConfig cfg = parse_config("n=4\nT=0.3\nk=0.003\ntheta=0.7\ninit=uniform\n"
                                 "gmres_tol=1e-9\nquad_order=5\nout_dir=/tmp/x\n"
                                 "energy_cap=123.5\nenergy_bound_check=off\n");
    SimConfig back = parse_config(serialize_config(cfg));
    CHECK(back.n == cfg.n);
    CHECK(back.T == cfg.T);
    CHECK(back.k == cfg.k);
    CHECK(back.theta == cfg.theta);
    CHECK(back.alpha == cfg.alpha);
    CHECK(back.Ce == cfg.Ce);
    CHECK(back.mu0 == cfg.mu0);
    CHECK(back.sigma == cfg.sigma);
    CHECK(back.init == cfg.init);
    CHECK(back.gmres_tol == cfg.gmres_tol);
    CHECK(back.quad_order == cfg.quad_order);
    CHECK(back.out_dir == cfg.out_dir);
    CHECK(back.energy_cap == cfg.energy_cap);
    CHECK(back.energy_bound_check == cfg.energy_bound_check);
}

TEST_CASE("diagnostics CSV format and round-trip") {
    Diagnostics diag;
    DiagnosticsRow r;
    r.t = 0.0;
    r.grad_m_l2 = 3.1866705273889779;
    r.mean_mz = -0.94245082371954957;
    r.gmres_llg = 0;
    diag.rows.push_back(r);
    r.t = 0.01;
    r.grad_m_l2 = 3.0;
    r.gmres_llg = 12;
    r.gmres_eddy = 7;
    diag.rows.push_back(r);

    const std::string path = temp_path("ellg_test_diag.csv");
    write_diagnostics_csv(diag, path);
    const std::string text = slurp(path);
    CHECK(text.rfind("t,grad_m_l2,H_l2,curl_H_l2,H_hcurl,lambda_h12,mean_mz,max_m_norm,"
                     "gmres_llg,gmres_eddy\n", 0) == 0);
    CHECK(text.find("\r") == std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);  // header + 2 rows

    Diagnostics back = read_diagnostics_csv(path);
    REQUIRE(back.rows.size() == 2);
    CHECK(back.rows[0].grad_m_l2 == diag.rows[0].grad_m_l2);
    CHECK(back.rows[0].mean_mz == diag.rows[0].mean_mz);
    CHECK(back.rows[1].gmres_llg == 12);
    CHECK(back.rows[1].gmres_eddy == 7);
    std::remove(path.c_str());
}

TEST_CASE("simulation CSV has one row per step plus the initial row") {
    SimConfig cfg;
    cfg.n = 1;
    cfg.T = 0.05;
    cfg.k = 0.01;
    SimSetup setup(cfg);
    RunResult res = run(setup);
    const std::string path = temp_path("ellg_test_run.csv");
    write_diagnostics_csv(res.diag, path);
    const std::string text = slurp(path);
    CHECK(std::count(text.begin(), text.end(), '\n') == cfg.n_steps() + 2);
    std::remove(path.c_str());
}

TEST_CASE("repeated runs produce byte-identical files") {
    SimConfig cfg;
    cfg.n = 1;
    cfg.T = 0.03;
    cfg.k = 0.01;
    const std::string p1 = temp_path("ellg_det_1.csv"), p2 = temp_path("ellg_det_2.csv");
    for (const std::string& p : {p1, p2}) {
        SimSetup setup(cfg);
        RunResult res = run(setup);
        write_diagnostics_csv(res.diag, p);
    }
    CHECK(slurp(p1) == slurp(p2));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("VTK output for the unit cell") {
    Mesh mesh = build_cube_mesh(1);
    Vector m = interpolate_nodal([](const Vec3&) { return Vec3(0, 0, 1); }, mesh);
    Vector H = interpolate_edge([](const Vec3&) { return Vec3(0, 0, 3); }, mesh);
    const std::string path = temp_path("ellg_test.vtk");
    write_vtk(m, H, mesh, 1.0, path);
    const std::string text = slurp(path);
    CHECK(text.rfind("# vtk DataFile Version 3.0\n", 0) == 0);
    CHECK(text.find("POINTS 8 double") != std::string::npos);
    CHECK(text.find("CELLS 6 30") != std::string::npos);
    CHECK(text.find("CELL_TYPES 6") != std::string::npos);
    CHECK(text.find("VECTORS m double") != std::string::npos);
    CHECK(text.find("VECTORS H_nodal double") != std::string::npos);
    CHECK(text.find("VECTORS H_curl_recovered double") != std::string::npos);
    // every cell is a tetrahedron
    std::size_t pos = text.find("CELL_TYPES 6");
    std::istringstream rest(text.substr(pos));
    std::string line;
    std::getline(rest, line);
    for (int i = 0; i < 6; ++i) {
        std::getline(rest, line);
        CHECK(line == "10");
    }
    // uniform magnetization appears verbatim
    CHECK(text.find("VECTORS m double\n0 0 1\n") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("nd averaging reproduces constant fields at nodes") {
    Mesh mesh = build_cube_mesh(2);
    Vector H = interpolate_edge([](const Vec3&) { return Vec3(1, -2, 0.5); }, mesh);
    for (const auto& v : nd_field_at_nodes(H, mesh)) {
        CHECK((v - Vec3(1, -2, 0.5)).norm() <= 1e-12);
    }
}

TEST_CASE("manifest lists config and outputs") {
    RunManifest man;
    man.config.n = 2;
    man.config.T = 0.1;
    man.config.k = 0.01;
    man.build_id = "test";
    man.phase_seconds = {{"assembly", 0.1}, {"bem", 0.2}, {"steps", 0.3}};
    man.output_paths = {"a.csv", "b.vtk"};
    const std::string path = temp_path("ellg_test_manifest.json");
    write_manifest(man, path);
    auto j = nlohmann::json::parse(slurp(path));
    CHECK(j["build_id"] == "test");
    CHECK(j["outputs"].size() == 2);
    CHECK(j["phase_seconds"]["bem"] == 0.2);
    SimConfig echo = parse_config(j["config"].get<std::string>());
    CHECK(echo.n == 2);
    std::remove(path.c_str());
}

TEST_CASE("convergence study input validation") {
    SimConfig base;
    base.n = 1;
    base.T = 0.02;
    base.k = 0.01;
    CHECK_THROWS_AS(run_convergence_study(base, 'x', {0.01}, 0.005), std::invalid_argument);
    CHECK_THROWS_AS(run_convergence_study(base, 'k', {}, 0.005), std::invalid_argument);
    // reference must be strictly finer
    CHECK_THROWS_AS(run_convergence_study(base, 'k', {0.01}, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(run_convergence_study(base, 'k', {0.01, 0.01}, 0.005), std::invalid_argument);
    // non-integer step ratio
    CHECK_THROWS_AS(run_convergence_study(base, 'k', {0.01}, 0.004), std::invalid_argument);
    // non-nested meshes on the h axis
    CHECK_THROWS_AS(run_convergence_study(base, 'h', {3.0}, 4.0), std::invalid_argument);
    CHECK_THROWS_AS(run_convergence_study(base, 'h', {2.0}, 2.0), std::invalid_argument);
}

TEST_CASE("tiny k-axis study runs and reports positive errors") {
    SimConfig base;
    base.n = 1;
    base.T = 0.04;
    base.k = 0.01;
    base.energy_bound_check = false;
    auto study = run_convergence_study(base, 'k', {0.02, 0.01}, 0.005);
    REQUIRE(study.rows.size() == 2);
    CHECK(study.rows[0].param == 0.02);
    CHECK(study.rows[1].param == 0.01);
    CHECK(study.rows[0].E_m > study.rows[1].E_m);
    CHECK(study.rows[0].E_m > 0.0);
    CHECK(study.rows[1].E_H >= 0.0);
}

TEST_CASE("study is invariant under parameter reordering") {
    SimConfig base;
    base.n = 1;
    base.T = 0.04;
    base.k = 0.01;
    base.energy_bound_check = false;
    auto a = run_convergence_study(base, 'k', {0.02, 0.01}, 0.005);
    auto b = run_convergence_study(base, 'k', {0.01, 0.02}, 0.005);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].param == b.rows[i].param);
        CHECK(a.rows[i].E_m == b.rows[i].E_m);
        CHECK(a.rows[i].E_H == b.rows[i].E_H);
    }
}
