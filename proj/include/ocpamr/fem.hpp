#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ocpamr/mesh.hpp"

namespace ocpamr {

using ScalarField = std::function<double(double, double)>;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// Positive-weight quadrature on the reference triangle in barycentric
/// coordinates. Weights sum to 1 and are scaled by the element area on use:
/// int_T g  ~=  |T| * sum_q w_q g(x_q).
struct Quadrature {
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
    int degree = 0; ///< polynomials up to this total degree integrate exactly

    static Quadrature midpoint();    ///< degree 1, 1 point
    static Quadrature three_point(); ///< degree 2
    static Quadrature seven_point(); ///< degree 5; the default for data terms
    /// Tensor Gauss rule collapsed onto the triangle; degree 2n-2 with n*n
    /// points. Used where high accuracy is worth the cost.
    static Quadrature collapsed_gauss(int n);
};

/// Nodal P1 function bound to one mesh generation.
struct FeFunction {
    std::uint64_t mesh_id = 0;
    Vector values; ///< one coefficient per vertex

    static FeFunction zero(const Mesh& mesh);
    static FeFunction interpolate(const Mesh& mesh, const ScalarField& g);
};

/// Maps between the full vertex numbering and the interior (non-Dirichlet)
/// unknowns.
struct DirichletMap {
    std::vector<int> interior;          ///< interior vertex indices in ascending order
    std::vector<int> vertex_to_interior; ///< -1 for boundary vertices

    int interior_count() const { return static_cast<int>(interior.size()); }
};

DirichletMap dirichlet_map(const Mesh& mesh);

/// Reduced symmetric positive definite system over interior unknowns.
struct SparseSpdSystem {
    SparseMatrix matrix;
    Vector rhs;
};

struct MassMatrices {
    SparseMatrix consistent; ///< (i,j) = int phi_i phi_j over all vertices
    Vector lumped;           ///< row sums, |supp phi_i| / 3
};

/// Stiffness matrix over all vertices; (i,j) = int grad phi_i . grad phi_j.
SparseMatrix assemble_stiffness_full(const Mesh& mesh);

/// Stiffness restricted to interior unknowns (Dirichlet rows/columns removed).
SparseMatrix assemble_stiffness_interior(const Mesh& mesh, const DirichletMap& map);

MassMatrices assemble_mass(const Mesh& mesh);

/// Load vector over all vertices: entry i ~= int g phi_i by element quadrature.
Vector assemble_load(const Mesh& mesh, const ScalarField& g, const Quadrature& quad);

SparseMatrix restrict_interior(const SparseMatrix& full, const DirichletMap& map);
Vector restrict_interior(const Vector& full, const DirichletMap& map);
/// Scatters interior coefficients into a full vector with zero boundary values.
Vector expand_interior(const Vector& reduced, const DirichletMap& map, int vertex_count);

/// Solves the SPD system to a relative residual of at most tol.
Vector solve_spd(const SparseSpdSystem& system, double tol = 1e-10);

/// Value of the P1 function at x by barycentric interpolation in a containing
/// element. Throws DomainError if x lies outside the mesh.
double evaluate(const Mesh& mesh, const FeFunction& fe, Point x);

struct LinfDistance {
    Vector per_element;
    double global = 0.0;
};

/// Max of |fe - g| over the order-k barycentric lattice of each element
/// (includes the vertices). A lower bound of the true sup; this is the
/// project-wide measurement convention for L-infinity errors.
LinfDistance linf_distance_sampled(const Mesh& mesh, const FeFunction& fe,
                                   const ScalarField& g, int sample_order);

} // namespace ocpamr
