#pragma once

#include <string>

#include "ocpamr/fem.hpp"
#include "ocpamr/mesh.hpp"
#include "ocpamr/ocp.hpp"

namespace ocpamr {

/// Closed-form solution triple of a manufactured problem.
struct ExactSolution {
    ScalarField y;
    ScalarField p;
    ScalarField u; ///< clamp(-p/lambda)
    double lambda = 1.0;
    double a = 0.0;
    double b = 1.0;
};

/// A named problem instance: initial mesh, data, bounds and the exact solution
/// the data was manufactured from.
struct Benchmark {
    std::string name;
    Mesh initial_mesh;
    ScalarField f;
    ScalarField y_omega;
    double lambda = 1.0;
    double a = 0.0;
    double b = 1.0;
    ExactSolution exact;

    OcpProblem problem_on(const Mesh& mesh) const {
        return OcpProblem{f, y_omega, lambda, a, b, &mesh};
    }
};

/// The L-shaped corner-singularity problem: exact state
/// (1 - r^2 cos^2 t)(1 - r^2 sin^2 t) r^(2/3) sin(2t/3) and exact adjoint
/// sin(2 pi x) sin(2 pi y) r^(2/3) sin(2t/3), polar angle t in [0, 3pi/2],
/// bounds [0, 1]. Data f and y_omega are derived from the optimality system.
Benchmark make_lshape_paper(double lambda = 1.0);

/// Smooth validation problem on the unit square with partially active bounds.
Benchmark make_square_smooth(double lambda = 1.0);

/// Benchmark lookup by CLI name ("lshape-paper" | "square-smooth").
Benchmark make_benchmark(const std::string& name, double lambda);

/// Closed-form pieces of the L-shape problem, exposed for verification.
/// All throw DomainError inside the removed quadrant; the Laplacians and data
/// additionally reject the origin, where the gradient of the singular factor
/// blows up.
namespace lshape {
double exact_y(double x, double y);
double exact_p(double x, double y);
double exact_u(double x, double y, double lambda, double a, double b);
double laplacian_y(double x, double y);
double laplacian_p(double x, double y);
double forcing(double x, double y, double lambda, double a, double b);
double desired_state(double x, double y);
} // namespace lshape

struct ErrorMeasurement {
    Vector per_element_y;
    Vector per_element_p;
    Vector per_element_u;
    double y = 0.0;
    double p = 0.0;
    double u = 0.0;
    double total = 0.0; ///< root-sum-square of the three
};

/// Sampled max-norm errors of a discrete solution against the exact triple.
ErrorMeasurement measure_errors(const Mesh& mesh, const OcpSolution& solution,
                                const ExactSolution& exact, int sample_order = 4);

/// max(1, log factor) * estimator / error. NaN when the error vanishes.
double effectivity(double estimator_total, double log_factor, double error_total);

} // namespace ocpamr
