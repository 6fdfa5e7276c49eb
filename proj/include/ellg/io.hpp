#pragma once

// File output: diagnostics CSV, legacy ASCII VTK unstructured grids and the
// per-run JSON manifest.

#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ellg/config.hpp"
#include "ellg/fem.hpp"
#include "ellg/mesh.hpp"
#include "ellg/simulator.hpp"

namespace ellg {

namespace io_detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: LF endings everywhere
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    return out;
}

}  // namespace io_detail

inline void write_diagnostics_csv(const Diagnostics& diag, const std::string& path) {
    auto out = io_detail::open_out(path);
    out << "t,grad_m_l2,H_l2,curl_H_l2,H_hcurl,lambda_h12,mean_mz,max_m_norm,gmres_llg,gmres_eddy\n";
    for (const auto& r : diag.rows) {
        out << io_detail::fmt17(r.t) << ',' << io_detail::fmt17(r.grad_m_l2) << ','
            << io_detail::fmt17(r.H_l2) << ',' << io_detail::fmt17(r.curl_H_l2) << ','
            << io_detail::fmt17(r.H_hcurl) << ',' << io_detail::fmt17(r.lambda_h12) << ','
            << io_detail::fmt17(r.mean_mz) << ',' << io_detail::fmt17(r.max_m_norm) << ','
            << r.gmres_llg << ',' << r.gmres_eddy << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline Diagnostics read_diagnostics_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    Diagnostics diag;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        DiagnosticsRow r;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%d,%d", &r.t, &r.grad_m_l2,
                        &r.H_l2, &r.curl_H_l2, &r.H_hcurl, &r.lambda_h12, &r.mean_mz,
                        &r.max_m_norm, &r.gmres_llg, &r.gmres_eddy) != 10) {
            throw std::runtime_error("malformed CSV row: " + line);
        }
        diag.rows.push_back(r);
    }
    return diag;
}

// ND^1 field averaged to nodes: per tet, the field value at each corner is
// sum_e coeff_e (lambda_a grad lambda_b - lambda_b grad lambda_a)(corner).
inline std::vector<Vec3> nd_field_at_nodes(const Vector& H, const Mesh& mesh) {
    std::vector<Vec3> acc(mesh.n_vertices(), Vec3::Zero());
    std::vector<int> count(mesh.n_vertices(), 0);
    for (int t = 0; t < mesh.n_tets(); ++t) {
        const auto g = detail::tet_geometry(mesh, t);
        const auto& tet = mesh.tets[t];
        for (int i = 0; i < 4; ++i) {
            Vec3 val = Vec3::Zero();
            for (int le = 0; le < 6; ++le) {
                auto [a, b] = detail::oriented_local_edge(mesh, t, le);
                const double c = H(mesh.tet_edges[t][le]);
                if (a == i) val += c * g.grad[b];
                if (b == i) val -= c * g.grad[a];
            }
            acc[tet[i]] += val;
            ++count[tet[i]];
        }
    }
    for (int z = 0; z < mesh.n_vertices(); ++z) acc[z] /= count[z];
    return acc;
}

inline void write_vtk(const Vector& m, const Vector& H_edges, const Mesh& mesh, double sigma,
                      const std::string& path) {
    auto out = io_detail::open_out(path);
    out << "# vtk DataFile Version 3.0\n";
    out << "ellg state\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.n_vertices() << " double\n";
    for (const auto& p : mesh.vertices) {
        out << io_detail::fmt17(p(0)) << ' ' << io_detail::fmt17(p(1)) << ' '
            << io_detail::fmt17(p(2)) << '\n';
    }
    out << "CELLS " << mesh.n_tets() << ' ' << 5 * mesh.n_tets() << '\n';
    for (const auto& t : mesh.tets) {
        out << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
    }
    out << "CELL_TYPES " << mesh.n_tets() << '\n';
    for (int t = 0; t < mesh.n_tets(); ++t) out << "10\n";

    out << "POINT_DATA " << mesh.n_vertices() << '\n';
    out << "VECTORS m double\n";
    for (int z = 0; z < mesh.n_vertices(); ++z) {
        out << io_detail::fmt17(m(3 * z)) << ' ' << io_detail::fmt17(m(3 * z + 1)) << ' '
            << io_detail::fmt17(m(3 * z + 2)) << '\n';
    }
    const auto Hn = nd_field_at_nodes(H_edges, mesh);
    out << "VECTORS H_nodal double\n";
    for (const auto& v : Hn) {
        out << io_detail::fmt17(v(0)) << ' ' << io_detail::fmt17(v(1)) << ' '
            << io_detail::fmt17(v(2)) << '\n';
    }

    const auto curls = elementwise_curl(H_edges, mesh);
    out << "CELL_DATA " << mesh.n_tets() << '\n';
    out << "VECTORS H_curl_recovered double\n";
    for (const auto& c : curls) {
        out << io_detail::fmt17(c(0) / sigma) << ' ' << io_detail::fmt17(c(1) / sigma) << ' '
            << io_detail::fmt17(c(2) / sigma) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

struct RunManifest {
    SimConfig config;
    std::string build_id = "dev";
    std::map<std::string, double> phase_seconds;  // assembly, bem, steps
    std::vector<std::string> output_paths;
};

inline void write_manifest(const RunManifest& man, const std::string& path) {
    nlohmann::json j;
    j["config"] = serialize_config(man.config);
    j["build_id"] = man.build_id;
    j["phase_seconds"] = man.phase_seconds;
    j["outputs"] = man.output_paths;
    auto out = io_detail::open_out(path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace ellg
