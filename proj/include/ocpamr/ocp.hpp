#pragma once

#include "ocpamr/fem.hpp"
#include "ocpamr/mesh.hpp"

namespace ocpamr {

/// One instance of the control problem: minimize
///   1/2 ||y - y_omega||^2 + lambda/2 ||u||^2
/// subject to -Lap y = f + u, y = 0 on the boundary, and a <= u <= b.
struct OcpProblem {
    ScalarField f;
    ScalarField y_omega;
    double lambda = 1.0;
    double a = 0.0;
    double b = 1.0;
    const Mesh* mesh = nullptr;
};

/// Discrete solution triple plus the control multiplier.
struct OcpSolution {
    FeFunction y;
    FeFunction p;
    FeFunction u;          ///< nodal values in [a, b]; zero on the boundary
    Vector multiplier;     ///< per interior vertex: D_i (p_i + lambda u_i)
    int iterations = 0;    ///< active-set (plus fallback) iterations
};

/// min(b, max(a, w)).
double clamp_projection(double w, double a, double b);

/// Solves the discrete optimality system with a primal-dual active set method
/// on the lumped-mass control inner product. Terminates when the active sets
/// repeat or the nodal control update drops below tol; falls back to a damped
/// fixed-point iteration if the active sets cycle.
OcpSolution solve_ocp(const OcpProblem& problem, double tol = 1e-10, int max_iter = 100);

/// Most negative value of D_i (p_i + lambda u_i)(v - u_i) over interior
/// vertices i and v in {a, b}. A value >= -tol certifies the discrete
/// variational inequality.
double vi_residual(const OcpSolution& solution, const OcpProblem& problem);

} // namespace ocpamr
