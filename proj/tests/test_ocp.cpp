#include <doctest.h>

#include <cmath>
#include <random>

#include "ocpamr/benchmark.hpp"
#include "ocpamr/ocp.hpp"
#include "oracles.hpp"

using namespace ocpamr;

namespace {

OcpProblem smooth_problem(const Mesh& mesh, double lambda, double a, double b) {
    OcpProblem pb;
    pb.f = [](double x, double y) { return 10.0 * std::sin(M_PI * x) * (y + 0.2); };
    pb.y_omega = [](double x, double y) { return std::cos(M_PI * x) * y; };
    pb.lambda = lambda;
    pb.a = a;
    pb.b = b;
    pb.mesh = &mesh;
    return pb;
}

void check_complementarity(const OcpSolution& sol, const OcpProblem& pb, double tol) {
    const auto map = dirichlet_map(*pb.mesh);
    for (int v = 0; v < pb.mesh->vertex_count(); ++v) {
        const double u = sol.u.values[v];
        CHECK(u >= pb.a - 1e-12);
        CHECK(u <= pb.b + 1e-12);
        if (pb.mesh->boundary_vertex[v]) CHECK(u == 0.0);
    }
    for (int i = 0; i < map.interior_count(); ++i) {
        const int v = map.interior[i];
        const double u = sol.u.values[v];
        const double mu = sol.multiplier[i];
        if (u <= pb.a + tol) {
            CHECK(mu >= -tol);
        } else if (u >= pb.b - tol) {
            CHECK(mu <= tol);
        } else {
            CHECK(std::abs(mu) <= tol);
        }
    }
}

} // namespace

TEST_CASE("clamp projection") {
    CHECK(clamp_projection(0.5, 0.0, 1.0) == 0.5);
    CHECK(clamp_projection(-0.3, 0.0, 1.0) == 0.0);
    CHECK(clamp_projection(7.0, 0.0, 1.0) == 1.0);
    CHECK_THROWS_AS((void)clamp_projection(0.0, 1.0, -1.0), InputError);
}

TEST_CASE("clamp is nonexpansive and monotone on random pairs") {
    std::mt19937 rng(1234);
    std::uniform_real_distribution<double> value(-3.0, 3.0);
    std::uniform_real_distribution<double> bound(-1.5, 1.5);
    for (int rep = 0; rep < 100000; ++rep) {
        double a = bound(rng), b = bound(rng);
        if (a > b) std::swap(a, b);
        const double w1 = value(rng), w2 = value(rng);
        CHECK(std::abs(clamp_projection(w1, a, b) - clamp_projection(w2, a, b)) <=
              std::abs(w1 - w2));
        const double lo = std::min(w1, w2), hi = std::max(w1, w2);
        CHECK(clamp_projection(lo, a, b) <= clamp_projection(hi, a, b));
    }
}

TEST_CASE("degenerate bounds pin the control to zero") {
    Mesh mesh = initial_lshape_mesh();
    mesh = refine(mesh, {0, 1, 2, 3});
    const OcpProblem pb = smooth_problem(mesh, 1.0, 0.0, 0.0);
    const OcpSolution sol = solve_ocp(pb);
    CHECK(sol.u.values.lpNorm<Eigen::Infinity>() == 0.0);

    // (y, p) coincide with the plain Poisson state/adjoint solves.
    const auto map = dirichlet_map(mesh);
    const auto quad = Quadrature::seven_point();
    SparseSpdSystem state;
    state.matrix = assemble_stiffness_interior(mesh, map);
    state.rhs = restrict_interior(assemble_load(mesh, pb.f, quad), map);
    const Vector y = solve_spd(state, 1e-12);
    const auto mass = assemble_mass(mesh);
    SparseSpdSystem adjoint;
    adjoint.matrix = state.matrix;
    adjoint.rhs = restrict_interior(mass.consistent, map) * y -
                  restrict_interior(assemble_load(mesh, pb.y_omega, quad), map);
    const Vector p = solve_spd(adjoint, 1e-12);
    CHECK((restrict_interior(sol.y.values, map) - y).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK((restrict_interior(sol.p.values, map) - p).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("inactive bounds reproduce the unconstrained KKT solution") {
    Mesh mesh = initial_lshape_mesh();
    mesh = refine(mesh, {4, 5, 6, 7});
    REQUIRE(mesh.vertex_count() <= 50);
    const OcpProblem pb = smooth_problem(mesh, 0.7, -1e6, 1e6);
    const OcpSolution sol = solve_ocp(pb, 1e-12);
    const auto oracle = oracles::dense_kkt_unconstrained(pb);
    const auto map = dirichlet_map(mesh);
    CHECK((restrict_interior(sol.y.values, map) - oracle.y).lpNorm<Eigen::Infinity>() <=
          1e-9);
    CHECK((restrict_interior(sol.p.values, map) - oracle.p).lpNorm<Eigen::Infinity>() <=
          1e-9);
    CHECK((restrict_interior(sol.u.values, map) - oracle.u).lpNorm<Eigen::Infinity>() <=
          1e-9);
    // No node is active, so u = -p / lambda throughout.
    for (int i = 0; i < map.interior_count(); ++i) {
        const int v = map.interior[i];
        CHECK(sol.u.values[v] ==
              doctest::Approx(-sol.p.values[v] / pb.lambda).epsilon(1e-12));
    }
}

TEST_CASE("benchmark problem on the initial mesh agrees with projected gradient") {
    const Benchmark bench = make_lshape_paper(1.0);
    const OcpProblem pb = bench.problem_on(bench.initial_mesh);
    const OcpSolution sol = solve_ocp(pb, 1e-12);
    check_complementarity(sol, pb, 1e-9);
    CHECK(vi_residual(sol, pb) >= -1e-9);

    const auto oracle = oracles::projected_gradient(pb, 1e-13);
    const auto map = dirichlet_map(bench.initial_mesh);
    CHECK((restrict_interior(sol.u.values, map) - oracle.u).lpNorm<Eigen::Infinity>() <=
          1e-8);
    CHECK((restrict_interior(sol.y.values, map) - oracle.y).lpNorm<Eigen::Infinity>() <=
          1e-8);
    CHECK((restrict_interior(sol.p.values, map) - oracle.p).lpNorm<Eigen::Infinity>() <=
          1e-8);
}

TEST_CASE("active bounds on a refined mesh: solver matches projected gradient") {
    Mesh mesh = initial_lshape_mesh();
    std::vector<int> everything(mesh.element_count());
    std::iota(everything.begin(), everything.end(), 0);
    mesh = refine(mesh, everything);
    everything.resize(mesh.element_count());
    std::iota(everything.begin(), everything.end(), 0);
    mesh = refine(mesh, everything);
    REQUIRE(mesh.vertex_count() <= 50);

    const Benchmark bench = make_lshape_paper(1.0);
    OcpProblem pb = bench.problem_on(mesh);
    // Tight bounds so both constraints activate.
    OcpProblem tight = pb;
    tight.a = -0.005;
    tight.b = 0.01;
    const OcpSolution sol = solve_ocp(tight, 1e-12);
    check_complementarity(sol, tight, 1e-9);
    CHECK(vi_residual(sol, tight) >= -1e-10);

    const auto oracle = oracles::projected_gradient(tight, 1e-13);
    const auto map = dirichlet_map(mesh);
    CHECK((restrict_interior(sol.u.values, map) - oracle.u).lpNorm<Eigen::Infinity>() <=
          1e-8);
}

TEST_CASE("converged control is the nodal clamp of the scaled adjoint") {
    const Benchmark bench = make_lshape_paper(1.0);
    Mesh mesh = refine(bench.initial_mesh, {0, 1, 2, 3, 4, 5});
    const OcpProblem pb = bench.problem_on(mesh);
    const OcpSolution sol = solve_ocp(pb);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        if (mesh.boundary_vertex[v]) continue;
        CHECK(sol.u.values[v] ==
              doctest::Approx(clamp_projection(-sol.p.values[v] / pb.lambda, pb.a, pb.b))
                  .epsilon(1e-12));
    }
}

TEST_CASE("the independent optimizer's solution also certifies the VI") {
    const Benchmark bench = make_lshape_paper(1.0);
    const OcpProblem pb = bench.problem_on(bench.initial_mesh);
    const auto oracle = oracles::projected_gradient(pb, 1e-14);
    const auto map = dirichlet_map(bench.initial_mesh);
    OcpSolution sol;
    sol.y.mesh_id = sol.p.mesh_id = sol.u.mesh_id = bench.initial_mesh.id;
    sol.y.values = expand_interior(oracle.y, map, bench.initial_mesh.vertex_count());
    sol.p.values = expand_interior(oracle.p, map, bench.initial_mesh.vertex_count());
    sol.u.values = expand_interior(oracle.u, map, bench.initial_mesh.vertex_count());
    CHECK(vi_residual(sol, pb) >= -1e-10);
}

TEST_CASE("a constructed violation makes the VI residual negative") {
    const Benchmark bench = make_lshape_paper(1.0);
    const OcpProblem pb = bench.problem_on(bench.initial_mesh);
    OcpSolution sol = solve_ocp(pb, 1e-12);
    const auto map = dirichlet_map(bench.initial_mesh);
    const auto mass = assemble_mass(bench.initial_mesh);

    // Find an inactive interior node and push u above its stationary value.
    int node = -1;
    for (int i = 0; i < map.interior_count(); ++i) {
        const int v = map.interior[i];
        if (sol.u.values[v] > pb.a + 1e-6 && sol.u.values[v] < pb.b - 1e-6) node = v;
    }
    REQUIRE(node >= 0);
    const double delta = 1e-3;
    sol.u.values[node] += delta; // now p + lambda u = lambda * delta > 0 there
    const double residual = vi_residual(sol, pb);
    CHECK(residual < 0.0);
    const double expected =
        mass.lumped[node] * pb.lambda * delta * (pb.a - sol.u.values[node]);
    CHECK(residual == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("zero data gives the zero solution") {
    Mesh mesh = initial_lshape_mesh();
    OcpProblem pb;
    pb.f = [](double, double) { return 0.0; };
    pb.y_omega = [](double, double) { return 0.0; };
    pb.lambda = 2.0;
    pb.a = -1.0;
    pb.b = 1.0;
    pb.mesh = &mesh;
    const OcpSolution sol = solve_ocp(pb);
    CHECK(sol.y.values.lpNorm<Eigen::Infinity>() <= 1e-14);
    CHECK(sol.p.values.lpNorm<Eigen::Infinity>() <= 1e-14);
    CHECK(sol.u.values.lpNorm<Eigen::Infinity>() <= 1e-14);
}

TEST_CASE("invalid problems are rejected") {
    Mesh mesh = initial_lshape_mesh();
    const Benchmark bench = make_lshape_paper(1.0);
    OcpProblem pb = bench.problem_on(mesh);

    OcpProblem bad = pb;
    bad.lambda = 0.0;
    CHECK_THROWS_AS((void)solve_ocp(bad), InputError);
    bad = pb;
    bad.a = 2.0;
    bad.b = 1.0;
    CHECK_THROWS_AS((void)solve_ocp(bad), InputError);
    bad = pb;
    bad.a = 0.5; // violates a <= 0 <= b
    CHECK_THROWS_AS((void)solve_ocp(bad), InputError);
    CHECK_THROWS_AS((void)solve_ocp(pb, 1e-10, 0), NumericalError);
}
