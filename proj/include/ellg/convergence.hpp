#pragma once

// Self-convergence studies against a finer reference run: time-step refinement
// on a shared mesh, or nested space refinement with the reference fields
// interpolated down to the coarse spaces. Error norms are
// E_m = max_i ||m_ref - m||_{H1} and E_H = (k sum_i ||H_ref - H||_{Hcurl}^2)^{1/2}.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ellg/simulator.hpp"

namespace ellg {

struct ConvergenceRow {
    double param = 0.0;  // k value or n value, depending on the axis
    double E_m = 0.0;
    double E_H = 0.0;
};

struct ConvergenceStudy {
    char axis = 'k';
    double ref_param = 0.0;
    std::vector<ConvergenceRow> rows;  // sorted coarse -> fine
    double slope_m = 0.0;              // log-log least-squares fit of E_m
    double slope_H = 0.0;
};

namespace conv_detail {

inline double h1_norm(const Vector& m, const FemMatrices& mats) {
    return std::sqrt(std::max(0.0, m.dot(apply_vector_blocks(mats.M_scalar, m)) +
                                       m.dot(apply_vector_blocks(mats.K_scalar, m))));
}

inline double hcurl_norm_sq(const Vector& H, const FemMatrices& mats) {
    return std::max(0.0, H.dot(mats.M_ND * H) + H.dot(mats.C_ND * H));
}

// Least-squares slope of log(err) against log(x); refinement means smaller x
// for the k-axis and larger n for the h-axis, so the h-axis caller passes h(n).
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& err) {
    const int n = static_cast<int>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(std::max(err[i], 1e-300));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-30) return 0.0;
    return (n * sxy - sx * sy) / denom;
}

// Restriction of fine nodal/edge fields to a nested coarse mesh (n_f = r n_c).
struct NestedRestriction {
    std::vector<int> node_map;                 // coarse node -> fine node
    std::vector<std::vector<std::pair<int, double>>> edge_map;  // coarse edge -> fine (edge, sign)

    Vector restrict_nodal(const Vector& mf) const {
        Vector mc(3 * node_map.size());
        for (std::size_t z = 0; z < node_map.size(); ++z) {
            mc.segment<3>(3 * z) = mf.segment<3>(3 * node_map[z]);
        }
        return mc;
    }
    Vector restrict_edge(const Vector& Hf) const {
        Vector Hc = Vector::Zero(edge_map.size());
        for (std::size_t e = 0; e < edge_map.size(); ++e) {
            for (const auto& [fe, s] : edge_map[e]) Hc(e) += s * Hf(fe);
        }
        return Hc;
    }
};

inline NestedRestriction build_restriction(const Mesh& coarse, const Mesh& fine, int n_c, int n_f) {
    if (n_f % n_c != 0 || n_f <= n_c) {
        throw std::invalid_argument("build_restriction: meshes are not nested");
    }
    const int r = n_f / n_c;
    const int nvf = n_f + 1;
    auto fine_vid = [&](const Vec3& p) {
        const int i = static_cast<int>(std::llround(p(0) * n_f));
        const int j = static_cast<int>(std::llround(p(1) * n_f));
        const int k = static_cast<int>(std::llround(p(2) * n_f));
        return (k * nvf + j) * nvf + i;
    };

    NestedRestriction R;
    R.node_map.resize(coarse.n_vertices());
    for (int z = 0; z < coarse.n_vertices(); ++z) {
        const int fz = fine_vid(coarse.vertices[z]);
        if ((fine.vertices[fz] - coarse.vertices[z]).norm() > 1e-12) {
            throw std::runtime_error("build_restriction: node mismatch");
        }
        R.node_map[z] = fz;
    }

    std::map<std::array<int, 2>, int> fine_edge_id;
    for (int e = 0; e < fine.n_edges(); ++e) fine_edge_id[fine.edges[e]] = e;

    R.edge_map.resize(coarse.n_edges());
    for (int e = 0; e < coarse.n_edges(); ++e) {
        const Vec3& a = coarse.vertices[coarse.edges[e][0]];
        const Vec3& b = coarse.vertices[coarse.edges[e][1]];
        for (int t = 0; t < r; ++t) {
            const Vec3 p = a + (double(t) / r) * (b - a);
            const Vec3 q = a + (double(t + 1) / r) * (b - a);
            int u = fine_vid(p), v = fine_vid(q);
            double sign = 1.0;
            if (u > v) {
                std::swap(u, v);
                sign = -1.0;
            }
            auto it = fine_edge_id.find({u, v});
            if (it == fine_edge_id.end()) {
                throw std::runtime_error("build_restriction: coarse edge not resolved by fine edges");
            }
            R.edge_map[e].emplace_back(it->second, sign);
        }
    }
    return R;
}

// Exact prolongation of coarse fields into a nested fine mesh: nested P1 and
// Nedelec spaces are subspaces, so the prolonged fields represent the same
// functions and fine-space norms of differences are true norms.
struct NestedProlongation {
    const Mesh* coarse = nullptr;
    int n_c = 0;

    struct Location {
        int tet;
        std::array<double, 4> bary;
    };

    Location locate(const Vec3& x) const {
        auto clampi = [&](double c) {
            return std::min(n_c - 1, std::max(0, static_cast<int>(std::floor(c * n_c))));
        };
        const int ci = clampi(x(0)), cj = clampi(x(1)), ck = clampi(x(2));
        const int base = 6 * ((ck * n_c + cj) * n_c + ci);
        for (int p = 0; p < 6; ++p) {
            const int t = base + p;
            const auto g = detail::tet_geometry(*coarse, t);
            const auto& tet = coarse->tets[t];
            std::array<double, 4> lam{};
            double lmin = 1.0;
            for (int i = 0; i < 4; ++i) {
                // lambda_i(x) = lambda_i(v0) + grad_i . (x - v0); lambda at v0 is delta_i0
                lam[i] = (i == 0 ? 1.0 : 0.0) + g.grad[i].dot(x - coarse->vertices[tet[0]]);
                lmin = std::min(lmin, lam[i]);
            }
            if (lmin >= -1e-10) return {t, lam};
        }
        throw std::runtime_error("NestedProlongation: point location failed");
    }

    Vec3 eval_nodal(const Vector& mc, const Location& loc) const {
        Vec3 val = Vec3::Zero();
        for (int i = 0; i < 4; ++i) {
            val += loc.bary[i] * mc.segment<3>(3 * coarse->tets[loc.tet][i]);
        }
        return val;
    }

    Vec3 eval_edge_field(const Vector& Hc, const Vec3& x) const {
        const Location loc = locate(x);
        const auto g = detail::tet_geometry(*coarse, loc.tet);
        Vec3 val = Vec3::Zero();
        for (int le = 0; le < 6; ++le) {
            auto [a, b] = detail::oriented_local_edge(*coarse, loc.tet, le);
            val += Hc(coarse->tet_edges[loc.tet][le]) *
                   (loc.bary[a] * g.grad[b] - loc.bary[b] * g.grad[a]);
        }
        return val;
    }

    Vector prolong_nodal(const Vector& mc, const Mesh& fine) const {
        Vector mf(3 * fine.n_vertices());
        for (int z = 0; z < fine.n_vertices(); ++z) {
            mf.segment<3>(3 * z) = eval_nodal(mc, locate(fine.vertices[z]));
        }
        return mf;
    }

    Vector prolong_edge(const Vector& Hc, const Mesh& fine) const {
        Vector Hf(fine.n_edges());
        const double g = 1.0 / (2.0 * std::sqrt(3.0));
        for (int e = 0; e < fine.n_edges(); ++e) {
            const Vec3& a = fine.vertices[fine.edges[e][0]];
            const Vec3& b = fine.vertices[fine.edges[e][1]];
            const Vec3 mid = 0.5 * (a + b), d = b - a;
            Hf(e) = 0.5 * (eval_edge_field(Hc, mid - g * d).dot(d) +
                           eval_edge_field(Hc, mid + g * d).dot(d));
        }
        return Hf;
    }
};

}  // namespace conv_detail

inline ConvergenceStudy run_convergence_study(const SimConfig& base, char axis,
                                              std::vector<double> params, double ref_param) {
    if (axis != 'h' && axis != 'k') {
        throw std::invalid_argument("run_convergence_study: axis must be 'h' or 'k'");
    }
    if (params.empty()) throw std::invalid_argument("run_convergence_study: empty parameter list");
    std::sort(params.begin(), params.end());
    if (std::adjacent_find(params.begin(), params.end()) != params.end()) {
        throw std::invalid_argument("run_convergence_study: duplicate parameters");
    }

    ConvergenceStudy study;
    study.axis = axis;
    study.ref_param = ref_param;

    if (axis == 'k') {
        if (!(ref_param < params.front())) {
            throw std::invalid_argument(
                "run_convergence_study: reference k must be strictly smaller than every parameter");
        }
        SimConfig ref_cfg = base;
        ref_cfg.k = ref_param;
        ref_cfg.energy_bound_check = false;
        SimSetup ref_setup(ref_cfg);
        const RunResult ref = run(ref_setup);

        // coarse runs sorted coarse -> fine; all share the reference mesh
        for (auto it = params.rbegin(); it != params.rend(); ++it) {
            const double k = *it;
            const double ratio = k / ref_param;
            const int r = static_cast<int>(std::llround(ratio));
            if (std::abs(ratio - r) > 1e-9 || r < 2) {
                throw std::invalid_argument("run_convergence_study: k=" + std::to_string(k) +
                                            " is not an integer multiple of the reference k");
            }
            SimConfig cfg = base;
            cfg.k = k;
            cfg.energy_bound_check = false;
            SimSetup setup(cfg);
            const RunResult res = run(setup);

            ConvergenceRow row;
            row.param = k;
            double hsum = 0.0;
            // compare only at time points present in both grids
            for (std::size_t i = 0; i < res.m_history.size() && i * r < ref.m_history.size(); ++i) {
                const std::size_t iref = i * r;
                const Vector dm = res.m_history[i] - ref.m_history[iref];
                row.E_m = std::max(row.E_m, conv_detail::h1_norm(dm, setup.mats));
                if (i > 0) {
                    const Vector dH = embed(res.A_history[i], setup.space).edge_field -
                                      embed(ref.A_history[iref], ref_setup.space).edge_field;
                    hsum += k * conv_detail::hcurl_norm_sq(dH, setup.mats);
                }
            }
            row.E_H = std::sqrt(hsum);
            study.rows.push_back(row);
        }
    } else {
        const int n_ref = static_cast<int>(std::llround(ref_param));
        if (!(n_ref > static_cast<int>(std::llround(params.back())))) {
            throw std::invalid_argument(
                "run_convergence_study: reference n must be strictly larger than every parameter");
        }
        SimConfig ref_cfg = base;
        ref_cfg.n = n_ref;
        ref_cfg.energy_bound_check = false;
        SimSetup ref_setup(ref_cfg);
        const RunResult ref = run(ref_setup);

        for (double p : params) {
            const int n = static_cast<int>(std::llround(p));
            if (n < 1 || n_ref % n != 0) {
                throw std::invalid_argument("run_convergence_study: n=" + std::to_string(n) +
                                            " is not nested in the reference mesh");
            }
            SimConfig cfg = base;
            cfg.n = n;
            cfg.energy_bound_check = false;
            SimSetup setup(cfg);
            const RunResult res = run(setup);
            conv_detail::NestedProlongation P{&setup.mesh, n};

            // errors measured in the reference space: the coarse spaces are
            // subspaces of the reference spaces on nested meshes, so the
            // prolonged difference carries the true H1 / H(curl) norms
            ConvergenceRow row;
            row.param = n;
            double hsum = 0.0;
            for (std::size_t i = 0; i < res.m_history.size(); ++i) {
                const Vector dm =
                    P.prolong_nodal(res.m_history[i], ref_setup.mesh) - ref.m_history[i];
                row.E_m = std::max(row.E_m, conv_detail::h1_norm(dm, ref_setup.mats));
                if (i > 0) {
                    const Vector dH =
                        P.prolong_edge(embed(res.A_history[i], setup.space).edge_field,
                                       ref_setup.mesh) -
                        embed(ref.A_history[i], ref_setup.space).edge_field;
                    hsum += cfg.k * conv_detail::hcurl_norm_sq(dH, ref_setup.mats);
                }
            }
            row.E_H = std::sqrt(hsum);
            study.rows.push_back(row);
        }
    }

    std::vector<double> xs, em, eh;
    for (const auto& row : study.rows) {
        xs.push_back(axis == 'k' ? row.param : std::sqrt(3.0) / row.param);
        em.push_back(row.E_m);
        eh.push_back(row.E_H);
    }
    study.slope_m = conv_detail::fit_slope(xs, em);
    study.slope_H = conv_detail::fit_slope(xs, eh);
    return study;
}

}  // namespace ellg
