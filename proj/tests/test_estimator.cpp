#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ocpamr/benchmark.hpp"
#include "ocpamr/estimator.hpp"
#include "ocpamr/ocp.hpp"
#include "oracles.hpp"

using namespace ocpamr;

namespace {

// Independent recomputation of the state indicator: frozen decimal quadrature
// table (Radon's degree-5 rule as tabulated in the literature), explicit
// barycentric gradients and per-side jump formulas.
struct FrozenRule {
    double l0, l1, l2, w;
};

const FrozenRule frozen_deg5[7] = {
    {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225},
    {0.059715871789770, 0.470142064105115, 0.470142064105115, 0.132394152788506},
    {0.470142064105115, 0.059715871789770, 0.470142064105115, 0.132394152788506},
    {0.470142064105115, 0.470142064105115, 0.059715871789770, 0.132394152788506},
    {0.797426985353087, 0.101286507323456, 0.101286507323456, 0.125939180544827},
    {0.101286507323456, 0.797426985353087, 0.101286507323456, 0.125939180544827},
    {0.101286507323456, 0.101286507323456, 0.797426985353087, 0.125939180544827},
};

void gradient_oracle(const Mesh& mesh, const FeFunction& fe, int t, double& gx,
                     double& gy) {
    const auto& tri = mesh.elements[t];
    const Point& p0 = mesh.vertices[tri[0]];
    const Point& p1 = mesh.vertices[tri[1]];
    const Point& p2 = mesh.vertices[tri[2]];
    const double two_area =
        (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    const double f0 = fe.values[tri[0]], f1 = fe.values[tri[1]], f2 = fe.values[tri[2]];
    gx = ((p1.y - p2.y) * f0 + (p2.y - p0.y) * f1 + (p0.y - p1.y) * f2) / two_area;
    gy = ((p2.x - p1.x) * f0 + (p0.x - p2.x) * f1 + (p1.x - p0.x) * f2) / two_area;
}

Vector indicator_state_oracle(const Mesh& mesh, const SideTable& sides,
                              const FeFunction& y, const FeFunction& u,
                              const ScalarField& f) {
    // Per-side jumps via explicit normals.
    std::vector<double> jumps(sides.sides.size());
    for (std::size_t s = 0; s < sides.sides.size(); ++s) {
        const Point& a = mesh.vertices[sides.sides[s][0]];
        const Point& b = mesh.vertices[sides.sides[s][1]];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        double jump = 0.0;
        for (int side = 0; side < 2; ++side) {
            const int t = sides.neighbors[s][side];
            double gx, gy;
            gradient_oracle(mesh, y, t, gx, gy);
            double nx = (b.y - a.y) / len, ny = (a.x - b.x) / len;
            // orient outward: away from the element centroid
            const auto& tri = mesh.elements[t];
            const double cx =
                (mesh.vertices[tri[0]].x + mesh.vertices[tri[1]].x + mesh.vertices[tri[2]].x) /
                3.0;
            const double cy =
                (mesh.vertices[tri[0]].y + mesh.vertices[tri[1]].y + mesh.vertices[tri[2]].y) /
                3.0;
            if (nx * (cx - a.x) + ny * (cy - a.y) > 0.0) {
                nx = -nx;
                ny = -ny;
            }
            jump += nx * gx + ny * gy;
        }
        jumps[s] = jump;
    }

    Vector eta(mesh.element_count());
    for (int t = 0; t < mesh.element_count(); ++t) {
        const auto& tri = mesh.elements[t];
        const Point& p0 = mesh.vertices[tri[0]];
        const Point& p1 = mesh.vertices[tri[1]];
        const Point& p2 = mesh.vertices[tri[2]];
        const double area = std::abs(oracles::tri_area(p0, p1, p2));
        const double h = std::max({std::hypot(p1.x - p0.x, p1.y - p0.y),
                                   std::hypot(p2.x - p1.x, p2.y - p1.y),
                                   std::hypot(p0.x - p2.x, p0.y - p2.y)});
        double sum = 0.0;
        for (const auto& node : frozen_deg5) {
            const double x = node.l0 * p0.x + node.l1 * p1.x + node.l2 * p2.x;
            const double yy = node.l0 * p0.y + node.l1 * p1.y + node.l2 * p2.y;
            const double uh = node.l0 * u.values[tri[0]] + node.l1 * u.values[tri[1]] +
                              node.l2 * u.values[tri[2]];
            const double v = f(x, yy) + uh;
            sum += node.w * v * v;
        }
        double jump_max = 0.0;
        for (int s : sides.element_sides[t]) {
            jump_max = std::max(jump_max, std::abs(jumps[s]));
        }
        eta[t] = h * std::sqrt(area * sum) + h * jump_max;
    }
    return eta;
}

} // namespace

TEST_CASE("jump vanishes for globally linear functions") {
    Mesh mesh = initial_lshape_mesh();
    mesh = refine(mesh, {0, 3, 8, 11});
    const SideTable sides = build_side_table(mesh);
    const FeFunction linear = FeFunction::interpolate(
        mesh, [](double x, double y) { return 1.5 * x - 0.4 * y + 0.7; });
    for (std::size_t s = 0; s < sides.sides.size(); ++s) {
        CHECK(std::abs(side_jump(mesh, sides, linear, static_cast<int>(s))) <= 1e-12);
    }
}

TEST_CASE("jump on two right triangles matches the hand computation") {
    const Mesh mesh = make_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}});
    const SideTable sides = build_side_table(mesh);
    REQUIRE(sides.sides.size() == 1);
    FeFunction fe = FeFunction::zero(mesh);
    fe.values[1] = 1.0; // the vertex belonging to the first triangle only
    // grad on T0 is (1, -1); outward normal on the diagonal from T0 is
    // (-1, 1)/sqrt(2); T1 contributes nothing.
    const double expected = -std::sqrt(2.0);
    CHECK(side_jump(mesh, sides, fe, 0) == doctest::Approx(expected).epsilon(1e-14));

    // Swapping the element labels leaves the value unchanged.
    const Mesh swapped =
        make_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 2, 3}, {0, 1, 2}});
    const SideTable swapped_sides = build_side_table(swapped);
    FeFunction fe2 = FeFunction::zero(swapped);
    fe2.values[1] = 1.0;
    CHECK(side_jump(swapped, swapped_sides, fe2, 0) ==
          doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("state indicator vanishes for zero residuals") {
    Mesh mesh = initial_lshape_mesh();
    mesh = refine(mesh, {1, 5});
    const SideTable sides = build_side_table(mesh);
    const FeFunction zero = FeFunction::zero(mesh);
    const Vector eta = indicator_state(
        mesh, sides, zero, zero, [](double, double) { return 0.0; },
        Quadrature::seven_point());
    CHECK(eta.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("constant residual without jumps gives h c sqrt(area)") {
    const Mesh mesh = initial_lshape_mesh();
    const SideTable sides = build_side_table(mesh);
    const FeFunction zero = FeFunction::zero(mesh);
    const double c = 2.25;
    const Vector eta = indicator_state(
        mesh, sides, zero, zero, [c](double, double) { return c; },
        Quadrature::seven_point());
    for (int t = 0; t < mesh.element_count(); ++t) {
        const double expected =
            element_diameter(mesh, t) * c * std::sqrt(element_area(mesh, t));
        CHECK(eta[t] == doctest::Approx(expected).epsilon(1e-13));
    }

    // Same shape for the adjoint indicator with y - y_omega constant.
    const Vector eta_p = indicator_adjoint(
        mesh, sides, zero, zero, [c](double, double) { return -c; },
        Quadrature::seven_point());
    for (int t = 0; t < mesh.element_count(); ++t) {
        const double expected =
            element_diameter(mesh, t) * c * std::sqrt(element_area(mesh, t));
        CHECK(eta_p[t] == doctest::Approx(expected).epsilon(1e-13));
    }
}

TEST_CASE("adjoint indicator vanishes when the state matches the target") {
    const Mesh mesh = initial_lshape_mesh();
    const SideTable sides = build_side_table(mesh);
    const auto target = [](double x, double y) { return 0.25 * x - 0.1 * y; };
    const FeFunction y = FeFunction::interpolate(mesh, target);
    const FeFunction p = FeFunction::zero(mesh);
    const Vector eta =
        indicator_adjoint(mesh, sides, p, y, target, Quadrature::seven_point());
    CHECK(eta.lpNorm<Eigen::Infinity>() <= 1e-13);
}

TEST_CASE("benchmark indicators match an independent recomputation") {
    const Benchmark bench = make_lshape_paper(1.0);
    const Mesh& mesh = bench.initial_mesh;
    const SideTable sides = build_side_table(mesh);
    const OcpSolution sol = solve_ocp(bench.problem_on(mesh), 1e-12);

    const Vector eta = indicator_state(mesh, sides, sol.y, sol.u, bench.f,
                                       Quadrature::seven_point());
    const Vector oracle = indicator_state_oracle(mesh, sides, sol.y, sol.u, bench.f);
    for (int t = 0; t < mesh.element_count(); ++t) {
        CHECK(eta[t] == doctest::Approx(oracle[t]).epsilon(1e-8));
    }

    // Cross-degree sanity: a much finer rule moves the data term only mildly.
    const Vector eta_fine = indicator_state(mesh, sides, sol.y, sol.u, bench.f,
                                            Quadrature::collapsed_gauss(12));
    for (int t = 0; t < mesh.element_count(); ++t) {
        CHECK(eta_fine[t] == doctest::Approx(eta[t]).epsilon(0.05));
    }
}

TEST_CASE("control indicator: clamp-inactive and fully clamped cases vanish") {
    const Mesh mesh = make_mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
    const double lambda = 1.0, a = 0.0, b = 1.0;
    FeFunction p = FeFunction::zero(mesh);
    p.values << -0.2, -0.9, -0.6; // -p in (a, b) on the whole element
    FeFunction u = FeFunction::zero(mesh);
    u.values = -p.values / lambda;
    CHECK(indicator_control(mesh, u, p, lambda, a, b)[0] == 0.0);

    p.values << 0.5, 1.5, 0.5; // -p <= a everywhere
    u.values.setZero();
    CHECK(indicator_control(mesh, u, p, lambda, a, b)[0] == 0.0);
}

TEST_CASE("control indicator equals dense sampling on the pinned example") {
    const Mesh mesh = make_mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
    const double lambda = 1.0, a = 0.0, b = 1.0;
    FeFunction p = FeFunction::zero(mesh);
    p.values << -0.5, -1.5, -0.5;
    FeFunction u = FeFunction::zero(mesh);
    for (int v = 0; v < 3; ++v) {
        u.values[v] = clamp_projection(-p.values[v] / lambda, a, b);
    }
    const double eta = indicator_control(mesh, u, p, lambda, a, b)[0];
    CHECK(eta == doctest::Approx(0.25).epsilon(1e-14));

    const std::array<double, 3> w{0.5, 1.5, 0.5};
    const std::array<double, 3> uh{0.5, 1.0, 0.5};
    // ~1e5 lattice points; the breakpoints are dyadic so the sample is exact.
    const double dense = oracles::control_gap_dense_sample(w, uh, a, b, 446);
    CHECK(eta == doctest::Approx(dense).epsilon(1e-10));
}

TEST_CASE("control indicator matches the exact edge oracle on random data") {
    std::mt19937 rng(777);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::uniform_real_distribution<double> nodal(-2.0, 2.0);
    std::uniform_real_distribution<double> lam(0.5, 2.0);
    int tested = 0;
    while (tested < 1000) {
        const Point p0{coord(rng), coord(rng)};
        const Point p1{coord(rng), coord(rng)};
        const Point p2{coord(rng), coord(rng)};
        if (oracles::tri_area(p0, p1, p2) < 0.05) continue;
        ++tested;
        const Mesh mesh = make_mesh({p0, p1, p2}, {{0, 1, 2}});
        const double lambda = lam(rng);
        double a = nodal(rng) * 0.4, b = nodal(rng) * 0.4;
        if (a > b) std::swap(a, b);
        FeFunction p = FeFunction::zero(mesh);
        FeFunction u = FeFunction::zero(mesh);
        std::array<double, 3> w, uv;
        for (int v = 0; v < 3; ++v) {
            p.values[v] = nodal(rng);
            u.values[v] = nodal(rng);
            w[v] = -p.values[v] / lambda;
            uv[v] = u.values[v];
        }
        const double eta = indicator_control(mesh, u, p, lambda, a, b)[0];
        const double oracle = oracles::control_gap_edge_oracle(w, uv, a, b);
        CHECK(eta == doctest::Approx(oracle).epsilon(1e-10));
        // Dense lattice sampling never exceeds the exact sup.
        const double dense = oracles::control_gap_dense_sample(w, uv, a, b, 60);
        CHECK(dense <= eta + 1e-12);
    }
}

TEST_CASE("control indicator rejects invalid bounds and weights") {
    const Mesh mesh = make_mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
    const FeFunction zero = FeFunction::zero(mesh);
    CHECK_THROWS_AS((void)indicator_control(mesh, zero, zero, 1.0, 1.0, -1.0), InputError);
    CHECK_THROWS_AS((void)indicator_control(mesh, zero, zero, 0.0, 0.0, 1.0), InputError);
}

TEST_CASE("control indicator is positively homogeneous") {
    const Mesh mesh = make_mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
    FeFunction p = FeFunction::zero(mesh);
    p.values << -0.5, -1.5, 0.3;
    FeFunction u = FeFunction::zero(mesh);
    u.values << 0.5, 1.0, -0.2;
    const double lambda = 1.0, a = -0.25, b = 1.0, c = 3.5;
    const double base = indicator_control(mesh, u, p, lambda, a, b)[0];
    FeFunction pc = p, uc = u;
    pc.values *= c;
    uc.values *= c;
    const double scaled = indicator_control(mesh, uc, pc, lambda, c * a, c * b)[0];
    CHECK(scaled == doctest::Approx(c * base).epsilon(1e-12));
}

TEST_CASE("combine applies the Pythagorean rule and the log factor") {
    const Mesh mesh = initial_lshape_mesh(); // every h_T = 1
    const int n = mesh.element_count();
    Vector ey = Vector::Zero(n), ep = Vector::Zero(n), eu = Vector::Zero(n);
    ey[0] = 3.0;
    ep[0] = 4.0;
    const IndicatorField field = combine(mesh, ey, ep, eu);
    CHECK(field.combined[0] == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(field.log_factor == 0.0);
    CHECK(field.global == doctest::Approx(5.0).epsilon(1e-14));

    std::mt19937 rng(5);
    std::uniform_real_distribution<double> val(0.0, 2.0);
    for (int t = 0; t < n; ++t) {
        ey[t] = val(rng);
        ep[t] = val(rng);
        eu[t] = val(rng);
    }
    const IndicatorField random_field = combine(mesh, ey, ep, eu);
    double my = 0, mp = 0, mu = 0;
    for (int t = 0; t < n; ++t) {
        CHECK(random_field.combined[t] ==
              doctest::Approx(std::sqrt(ey[t] * ey[t] + ep[t] * ep[t] + eu[t] * eu[t]))
                  .epsilon(1e-12));
        my = std::max(my, ey[t]);
        mp = std::max(mp, ep[t]);
        mu = std::max(mu, eu[t]);
    }
    CHECK(random_field.global_state == my);
    CHECK(random_field.global_adjoint == mp);
    CHECK(random_field.global_control == mu);
    CHECK(random_field.global ==
          doctest::Approx(std::sqrt(my * my + mp * mp + mu * mu)).epsilon(1e-12));
}

TEST_CASE("log factor tracks the finest element and grows under refinement") {
    // Two elements with diameters 2 and 1: the factor follows the finest one.
    const Mesh mesh =
        make_mesh({{0, 0}, {2, 0}, {0.4, 1.0}, {2.0, 1.0}}, {{0, 1, 2}, {1, 3, 2}});
    const double h_min = std::min(element_diameter(mesh, 0), element_diameter(mesh, 1));
    const Vector zero = Vector::Zero(2);
    const IndicatorField field = combine(mesh, zero, zero, zero);
    CHECK(field.log_factor == doctest::Approx(std::abs(std::log(1.0 / h_min))));

    // Monotone under uniform refinement once diameters drop below one.
    Mesh lshape = initial_lshape_mesh();
    double previous = 0.0;
    for (int round = 0; round < 4; ++round) {
        std::vector<int> everything(lshape.element_count());
        std::iota(everything.begin(), everything.end(), 0);
        lshape = refine(lshape, everything);
        const int n = lshape.element_count();
        const Vector z = Vector::Zero(n);
        const double ell = combine(lshape, z, z, z).log_factor;
        CHECK(ell >= previous);
        previous = ell;
    }
}

TEST_CASE("indicators are invariant under element relabeling") {
    const Benchmark bench = make_lshape_paper(1.0);
    Mesh mesh = refine(bench.initial_mesh, {0, 6});
    const SideTable sides = build_side_table(mesh);
    const OcpSolution sol = solve_ocp(bench.problem_on(mesh), 1e-12);
    const Vector ey =
        indicator_state(mesh, sides, sol.y, sol.u, bench.f, Quadrature::seven_point());
    const Vector eu =
        indicator_control(mesh, sol.u, sol.p, bench.lambda, bench.a, bench.b);

    // Rebuild the mesh with elements in reverse order.
    std::vector<std::array<int, 3>> reversed(mesh.elements.rbegin(), mesh.elements.rend());
    const Mesh permuted = make_mesh(mesh.vertices, reversed);
    const SideTable permuted_sides = build_side_table(permuted);
    FeFunction y2 = sol.y, u2 = sol.u, p2 = sol.p;
    y2.mesh_id = u2.mesh_id = p2.mesh_id = permuted.id;
    const Vector ey2 = indicator_state(permuted, permuted_sides, y2, u2, bench.f,
                                       Quadrature::seven_point());
    const Vector eu2 =
        indicator_control(permuted, u2, p2, bench.lambda, bench.a, bench.b);
    const int n = mesh.element_count();
    for (int t = 0; t < n; ++t) {
        CHECK(ey2[n - 1 - t] == doctest::Approx(ey[t]).epsilon(1e-12));
        CHECK(eu2[n - 1 - t] == doctest::Approx(eu[t]).epsilon(1e-12));
    }
}

TEST_CASE("oscillation of polynomial data") {
    SUBCASE("linear data oscillates not at all") {
        Mesh mesh = initial_lshape_mesh();
        mesh = refine(mesh, {3, 4});
        const SideTable sides = build_side_table(mesh);
        const auto osc = oscillation(
            mesh, sides, [](double x, double y) { return 2.0 * x - y + 0.5; },
            Quadrature::seven_point());
        CHECK(osc.per_element_sq.lpNorm<Eigen::Infinity>() <= 1e-26);
        CHECK(osc.max_patch <= 1e-12);
    }
    SUBCASE("zero data") {
        const Mesh mesh = initial_lshape_mesh();
        const SideTable sides = build_side_table(mesh);
        const auto osc = oscillation(mesh, sides, [](double, double) { return 0.0; },
                                     Quadrature::seven_point());
        CHECK(osc.per_element_sq.lpNorm<Eigen::Infinity>() == 0.0);
    }
    SUBCASE("x^2 on the reference triangle matches the symbolic projection") {
        const Mesh mesh = make_mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
        const SideTable sides = build_side_table(mesh);
        const auto osc = oscillation(mesh, sides, [](double x, double) { return x * x; },
                                     Quadrature::seven_point());
        // ||x^2 - P(x^2)||^2 = 1/600 on the reference triangle; h^2 = 2.
        CHECK(osc.per_element_sq[0] == doctest::Approx(2.0 / 600.0).epsilon(1e-13));
        // Nonnegative by construction.
        CHECK(osc.per_element_sq[0] >= 0.0);
    }
}

TEST_CASE("efficiency ratios: degenerate and scaling behavior") {
    const Mesh mesh = initial_lshape_mesh();
    const SideTable sides = build_side_table(mesh);
    const int n = mesh.element_count();
    const Vector zero = Vector::Zero(n);
    const Vector ones = Vector::Ones(n);

    const IndicatorField zero_field = combine(mesh, zero, zero, zero);
    OscillationField no_osc;
    no_osc.per_element_sq = Vector::Zero(n);
    const Vector ratios =
        efficiency_ratios(mesh, sides, zero_field, ones, ones, ones, no_osc, no_osc);
    for (int t = 0; t < n; ++t) CHECK(ratios[t] == 0.0);

    const IndicatorField unit_field = combine(mesh, ones, zero, zero);
    const Vector base =
        efficiency_ratios(mesh, sides, unit_field, ones, ones, ones, no_osc, no_osc);
    const Vector doubled = efficiency_ratios(mesh, sides, unit_field, 2.0 * ones,
                                             2.0 * ones, 2.0 * ones, no_osc, no_osc);
    for (int t = 0; t < n; ++t) {
        CHECK(doubled[t] == doctest::Approx(0.5 * base[t]).epsilon(1e-13));
        CHECK(std::isfinite(base[t]));
    }

    // Zero denominator reports not-applicable.
    const Vector nan_ratios =
        efficiency_ratios(mesh, sides, unit_field, zero, zero, zero, no_osc, no_osc);
    for (int t = 0; t < n; ++t) CHECK(std::isnan(nan_ratios[t]));
}
