#include "ocpamr/fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <string>

namespace ocpamr {

namespace {

struct ElementGeometry {
    std::array<Point, 3> corner;
    double area;
    std::array<double, 3> grad_x; // gradients of the barycentric coordinates
    std::array<double, 3> grad_y;
};

ElementGeometry element_geometry(const Mesh& mesh, int t) {
    const auto& tri = mesh.elements[t];
    ElementGeometry g;
    for (int k = 0; k < 3; ++k) g.corner[k] = mesh.vertices[tri[k]];
    g.area = element_area(mesh, t);
    if (g.area <= 0.0) {
        throw StructuralError("fem: element " + std::to_string(t) +
                              " has nonpositive area");
    }
    for (int k = 0; k < 3; ++k) {
        const Point& a = g.corner[(k + 1) % 3];
        const Point& b = g.corner[(k + 2) % 3];
        g.grad_x[k] = (a.y - b.y) / (2.0 * g.area);
        g.grad_y[k] = (b.x - a.x) / (2.0 * g.area);
    }
    return g;
}

Point map_barycentric(const ElementGeometry& g, const std::array<double, 3>& bary) {
    return {bary[0] * g.corner[0].x + bary[1] * g.corner[1].x + bary[2] * g.corner[2].x,
            bary[0] * g.corner[0].y + bary[1] * g.corner[1].y + bary[2] * g.corner[2].y};
}

// Gauss-Legendre nodes/weights on [0,1] by Newton iteration on P_n.
void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5)); // on [-1,1]
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double dp = n * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = 0.5 * (x + 1.0);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
}

} // namespace

Quadrature Quadrature::midpoint() {
    Quadrature q;
    q.points = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
    q.weights = {1.0};
    q.degree = 1;
    return q;
}

Quadrature Quadrature::three_point() {
    Quadrature q;
    q.points = {{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
                {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
                {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}};
    q.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    q.degree = 2;
    return q;
}

Quadrature Quadrature::seven_point() {
    Quadrature q;
    const double s = std::sqrt(15.0);
    const double b1 = (6.0 + s) / 21.0, w1 = (155.0 + s) / 1200.0;
    const double b2 = (6.0 - s) / 21.0, w2 = (155.0 - s) / 1200.0;
    q.points = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
                {1.0 - 2.0 * b1, b1, b1},
                {b1, 1.0 - 2.0 * b1, b1},
                {b1, b1, 1.0 - 2.0 * b1},
                {1.0 - 2.0 * b2, b2, b2},
                {b2, 1.0 - 2.0 * b2, b2},
                {b2, b2, 1.0 - 2.0 * b2}};
    q.weights = {9.0 / 40.0, w1, w1, w1, w2, w2, w2};
    q.degree = 5;
    return q;
}

Quadrature Quadrature::collapsed_gauss(int n) {
    if (n < 1) throw InputError("fem: collapsed_gauss needs n >= 1");
    std::vector<double> nodes, weights;
    gauss_legendre_unit(n, nodes, weights);
    Quadrature q;
    q.degree = 2 * n - 2;
    q.points.reserve(static_cast<std::size_t>(n) * n);
    q.weights.reserve(static_cast<std::size_t>(n) * n);
    // (u, v) on the unit square maps to (x, y) = (u, v(1-u)) on the reference
    // triangle with Jacobian (1-u); the factor 2 normalizes the weight sum.
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double u = nodes[i], v = nodes[j];
            const double x = u, y = v * (1.0 - u);
            q.points.push_back({1.0 - x - y, x, y});
            q.weights.push_back(2.0 * weights[i] * weights[j] * (1.0 - u));
        }
    }
    return q;
}

FeFunction FeFunction::zero(const Mesh& mesh) {
    FeFunction fe;
    fe.mesh_id = mesh.id;
    fe.values = Vector::Zero(mesh.vertex_count());
    return fe;
}

FeFunction FeFunction::interpolate(const Mesh& mesh, const ScalarField& g) {
    FeFunction fe;
    fe.mesh_id = mesh.id;
    fe.values.resize(mesh.vertex_count());
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        fe.values[v] = g(mesh.vertices[v].x, mesh.vertices[v].y);
    }
    return fe;
}

DirichletMap dirichlet_map(const Mesh& mesh) {
    DirichletMap map;
    map.vertex_to_interior.assign(mesh.vertex_count(), -1);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        if (!mesh.boundary_vertex[v]) {
            map.vertex_to_interior[v] = static_cast<int>(map.interior.size());
            map.interior.push_back(v);
        }
    }
    return map;
}

SparseMatrix assemble_stiffness_full(const Mesh& mesh) {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(mesh.elements.size() * 9);
    for (int t = 0; t < mesh.element_count(); ++t) {
        const auto g = element_geometry(mesh, t);
        const auto& tri = mesh.elements[t];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const double k_ij =
                    g.area * (g.grad_x[i] * g.grad_x[j] + g.grad_y[i] * g.grad_y[j]);
                triplets.emplace_back(tri[i], tri[j], k_ij);
            }
        }
    }
    SparseMatrix matrix(mesh.vertex_count(), mesh.vertex_count());
    matrix.setFromTriplets(triplets.begin(), triplets.end());
    return matrix;
}

SparseMatrix assemble_stiffness_interior(const Mesh& mesh, const DirichletMap& map) {
    return restrict_interior(assemble_stiffness_full(mesh), map);
}

MassMatrices assemble_mass(const Mesh& mesh) {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(mesh.elements.size() * 9);
    for (int t = 0; t < mesh.element_count(); ++t) {
        const double area = element_area(mesh, t);
        if (area <= 0.0) {
            throw StructuralError("fem: element " + std::to_string(t) +
                                  " has nonpositive area");
        }
        const auto& tri = mesh.elements[t];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                triplets.emplace_back(tri[i], tri[j], area / 12.0 * (i == j ? 2.0 : 1.0));
            }
        }
    }
    MassMatrices mass;
    mass.consistent.resize(mesh.vertex_count(), mesh.vertex_count());
    mass.consistent.setFromTriplets(triplets.begin(), triplets.end());
    mass.lumped = mass.consistent * Vector::Ones(mesh.vertex_count());
    return mass;
}

Vector assemble_load(const Mesh& mesh, const ScalarField& g, const Quadrature& quad) {
    Vector load = Vector::Zero(mesh.vertex_count());
    for (int t = 0; t < mesh.element_count(); ++t) {
        const auto geom = element_geometry(mesh, t);
        const auto& tri = mesh.elements[t];
        for (std::size_t q = 0; q < quad.points.size(); ++q) {
            const Point x = map_barycentric(geom, quad.points[q]);
            const double gx = g(x.x, x.y);
            if (!std::isfinite(gx)) {
                throw NumericalError("fem: non-finite integrand on element " +
                                     std::to_string(t));
            }
            const double scaled = geom.area * quad.weights[q] * gx;
            for (int i = 0; i < 3; ++i) load[tri[i]] += scaled * quad.points[q][i];
        }
    }
    return load;
}

SparseMatrix restrict_interior(const SparseMatrix& full, const DirichletMap& map) {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(full.nonZeros());
    for (int col = 0; col < full.outerSize(); ++col) {
        const int jc = map.vertex_to_interior[col];
        if (jc < 0) continue;
        for (SparseMatrix::InnerIterator it(full, col); it; ++it) {
            const int ir = map.vertex_to_interior[it.row()];
            if (ir >= 0) triplets.emplace_back(ir, jc, it.value());
        }
    }
    SparseMatrix reduced(map.interior_count(), map.interior_count());
    reduced.setFromTriplets(triplets.begin(), triplets.end());
    return reduced;
}

Vector restrict_interior(const Vector& full, const DirichletMap& map) {
    Vector reduced(map.interior_count());
    for (int i = 0; i < map.interior_count(); ++i) reduced[i] = full[map.interior[i]];
    return reduced;
}

Vector expand_interior(const Vector& reduced, const DirichletMap& map, int vertex_count) {
    Vector full = Vector::Zero(vertex_count);
    for (int i = 0; i < map.interior_count(); ++i) full[map.interior[i]] = reduced[i];
    return full;
}

Vector solve_spd(const SparseSpdSystem& system, double tol) {
    const double rhs_norm = system.rhs.norm();
    if (rhs_norm == 0.0) return Vector::Zero(system.rhs.size());

    Eigen::SimplicialLDLT<SparseMatrix> ldlt(system.matrix);
    if (ldlt.info() == Eigen::Success) {
        Vector x = ldlt.solve(system.rhs);
        const double residual = (system.matrix * x - system.rhs).norm() / rhs_norm;
        if (residual <= tol) return x;
    }
    // Factorization failed or lost too much accuracy: fall back to CG.
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg(system.matrix);
    cg.setTolerance(tol * 0.1);
    cg.setMaxIterations(10000);
    Vector x = cg.solve(system.rhs);
    const double residual = (system.matrix * x - system.rhs).norm() / rhs_norm;
    if (residual > tol) {
        throw NumericalError("fem: SPD solve stalled at relative residual " +
                             std::to_string(residual));
    }
    return x;
}

double evaluate(const Mesh& mesh, const FeFunction& fe, Point x) {
    if (fe.mesh_id != mesh.id) {
        throw InputError("fem: FeFunction bound to a different mesh generation");
    }
    constexpr double tol = 1e-12;
    for (int t = 0; t < mesh.element_count(); ++t) {
        const auto& tri = mesh.elements[t];
        const Point& p0 = mesh.vertices[tri[0]];
        const Point& p1 = mesh.vertices[tri[1]];
        const Point& p2 = mesh.vertices[tri[2]];
        const double area = element_area(mesh, t);
        const double l0 =
            0.5 * ((p1.x - x.x) * (p2.y - x.y) - (p2.x - x.x) * (p1.y - x.y)) / area;
        const double l1 =
            0.5 * ((p2.x - x.x) * (p0.y - x.y) - (p0.x - x.x) * (p2.y - x.y)) / area;
        const double l2 = 1.0 - l0 - l1;
        if (l0 >= -tol && l1 >= -tol && l2 >= -tol) {
            return l0 * fe.values[tri[0]] + l1 * fe.values[tri[1]] + l2 * fe.values[tri[2]];
        }
    }
    throw DomainError("fem: point outside the mesh");
}

LinfDistance linf_distance_sampled(const Mesh& mesh, const FeFunction& fe,
                                   const ScalarField& g, int sample_order) {
    if (sample_order < 1) throw InputError("fem: sample_order must be >= 1");
    if (fe.mesh_id != mesh.id) {
        throw InputError("fem: FeFunction bound to a different mesh generation");
    }
    const int k = sample_order;
    LinfDistance result;
    result.per_element = Vector::Zero(mesh.element_count());
    for (int t = 0; t < mesh.element_count(); ++t) {
        const auto& tri = mesh.elements[t];
        const Point& p0 = mesh.vertices[tri[0]];
        const Point& p1 = mesh.vertices[tri[1]];
        const Point& p2 = mesh.vertices[tri[2]];
        double worst = 0.0;
        for (int i = 0; i <= k; ++i) {
            for (int j = 0; j <= k - i; ++j) {
                const double l0 = static_cast<double>(i) / k;
                const double l1 = static_cast<double>(j) / k;
                const double l2 = 1.0 - l0 - l1;
                const Point x{l0 * p0.x + l1 * p1.x + l2 * p2.x,
                              l0 * p0.y + l1 * p1.y + l2 * p2.y};
                const double fe_val =
                    l0 * fe.values[tri[0]] + l1 * fe.values[tri[1]] + l2 * fe.values[tri[2]];
                worst = std::max(worst, std::abs(fe_val - g(x.x, x.y)));
            }
        }
        result.per_element[t] = worst;
        result.global = std::max(result.global, worst);
    }
    return result;
}

} // namespace ocpamr
