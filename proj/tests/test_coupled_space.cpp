#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ellg/coupled_space.hpp"
#include "ellg/fem.hpp"

using namespace ellg;

TEST_CASE("degree-of-freedom count") {
    for (int n : {1, 2, 3}) {
        Mesh mesh = build_cube_mesh(n);
        SurfaceMesh surf = extract_boundary(mesh);
        XhSpace sp = build_xh_space(mesh, surf);
        const int expect = mesh.n_edges() - static_cast<int>(mesh.boundary_edges.size()) +
                           static_cast<int>(mesh.boundary_vertices.size());
        CHECK(sp.dim() == expect);
        CHECK(sp.n_interior() + static_cast<int>(mesh.boundary_edges.size()) == mesh.n_edges());
    }
}

TEST_CASE("prolongation is the identity on interior edges") {
    Mesh mesh = build_cube_mesh(2);
    XhSpace sp = build_xh_space(mesh, extract_boundary(mesh));
    for (int i = 0; i < sp.n_interior(); ++i) {
        Vector x = Vector::Zero(sp.dim());
        x(i) = 1.0;
        Vector edges = sp.P * x;
        CHECK(edges(sp.interior_edges[i]) == 1.0);
        CHECK(edges.cwiseAbs().sum() == 1.0);
    }
}

TEST_CASE("trace constraint holds for every coefficient vector") {
    Mesh mesh = build_cube_mesh(2);
    XhSpace sp = build_xh_space(mesh, extract_boundary(mesh));
    std::mt19937 rng(17);
    std::normal_distribution<double> N(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        Vector x(sp.dim());
        for (int i = 0; i < x.size(); ++i) x(i) = N(rng);
        EmbeddedPair pair = embed(x, sp);
        for (int e : mesh.boundary_edges) {
            const int a = mesh.edges[e][0], b = mesh.edges[e][1];
            const double za = pair.boundary_nodal(sp.node_to_xh[a] - sp.n_interior());
            const double zb = pair.boundary_nodal(sp.node_to_xh[b] - sp.n_interior());
            CHECK(std::abs(pair.edge_field(e) - (zb - za)) <= 1e-14);
        }
    }
}

TEST_CASE("boundary node order matches the surface mesh") {
    Mesh mesh = build_cube_mesh(2);
    SurfaceMesh surf = extract_boundary(mesh);
    XhSpace sp = build_xh_space(mesh, surf);
    REQUIRE(sp.boundary_nodes.size() == surf.parent_vertex.size());
    for (std::size_t i = 0; i < sp.boundary_nodes.size(); ++i) {
        CHECK(sp.boundary_nodes[i] == surf.parent_vertex[i]);
    }
}

TEST_CASE("embedding of a gradient pair is curl free") {
    Mesh mesh = build_cube_mesh(2);
    FemMatrices mats = assemble_fem_matrices(mesh);
    XhSpace sp = build_xh_space(mesh, extract_boundary(mesh));
    // xi = (0,0,3) = grad(3 x3), zeta = 3 x3 on the boundary
    Vector Hc = interpolate_edge([](const Vec3&) { return Vec3(0, 0, 3); }, mesh);
    Vector x = Vector::Zero(sp.dim());
    for (int i = 0; i < sp.n_interior(); ++i) x(i) = Hc(sp.interior_edges[i]);
    for (int b = 0; b < sp.n_boundary_nodes(); ++b) {
        x(sp.n_interior() + b) = 3.0 * mesh.vertices[sp.boundary_nodes[b]](2);
    }
    EmbeddedPair pair = embed(x, sp);
    CHECK((pair.edge_field - Hc).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK(std::abs(pair.edge_field.dot(mats.C_ND * pair.edge_field)) <= 1e-12);
}

TEST_CASE("reduced volume Gram matrix is PSD with the constant-trace kernel") {
    Mesh mesh = build_cube_mesh(2);
    FemMatrices mats = assemble_fem_matrices(mesh);
    XhSpace sp = build_xh_space(mesh, extract_boundary(mesh));
    SparseMatrix G(sp.P.transpose() * mats.M_ND * sp.P);
    DenseMatrix Gd(G);
    CHECK((Gd - Gd.transpose()).cwiseAbs().maxCoeff() <= 1e-13);
    // a constant boundary trace with zero interior edges embeds to the zero
    // edge field, so the volume part alone is only positive semidefinite
    Vector kernel = Vector::Zero(sp.dim());
    kernel.tail(sp.n_boundary_nodes()).setOnes();
    CHECK((sp.P * kernel).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(Gd, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues()(0) >= -1e-12);
    CHECK(es.eigenvalues()(1) > 1e-10);  // rank deficiency is exactly one
}

TEST_CASE("matrix reduction commutes with multiplication") {
    Mesh mesh = build_cube_mesh(1);
    XhSpace sp = build_xh_space(mesh, extract_boundary(mesh));
    const int E = mesh.n_edges();
    const int B = sp.n_boundary_nodes();
    std::mt19937 rng(3);
    std::normal_distribution<double> N(0.0, 1.0);
    DenseMatrix Ad(E + B, E + B);
    for (int i = 0; i < E + B; ++i)
        for (int j = 0; j < E + B; ++j) Ad(i, j) = N(rng);
    SparseMatrix A = Ad.sparseView();
    SparseMatrix R = reduce_matrix(A, sp);
    Vector x(sp.dim()), y(sp.dim());
    for (int i = 0; i < sp.dim(); ++i) {
        x(i) = N(rng);
        y(i) = N(rng);
    }
    // y^T (Q^T A Q) x = (Qy)^T A (Qx)
    Vector Qx(E + B), Qy(E + B);
    Qx.head(E) = sp.P * x;
    Qx.tail(B) = x.tail(B);
    Qy.head(E) = sp.P * y;
    Qy.tail(B) = y.tail(B);
    CHECK(y.dot(R * x) == Catch::Approx(Qy.dot(Ad * Qx)).epsilon(1e-12));
}

TEST_CASE("dimension mismatches rejected") {
    Mesh mesh = build_cube_mesh(1);
    XhSpace sp = build_xh_space(mesh, extract_boundary(mesh));
    CHECK_THROWS_AS(embed(Vector::Zero(sp.dim() + 1), sp), std::invalid_argument);
    SparseMatrix wrong(3, 3);
    CHECK_THROWS_AS(reduce_matrix(wrong, sp), std::invalid_argument);
}
