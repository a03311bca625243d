#pragma once

#include "ocpamr/fem.hpp"
#include "ocpamr/mesh.hpp"

namespace ocpamr {

/// Space dimension. Kept symbolic in the estimator exponents (2 - d/2 and
/// 4 - d) so a 3D extension is a constant change.
inline constexpr int space_dim = 2;

/// Local and global max-norm error indicators for the state, adjoint and
/// control, combined per element and globally by root-sum-square.
struct IndicatorField {
    Vector state;    ///< per element
    Vector adjoint;  ///< per element
    Vector control;  ///< per element
    Vector combined; ///< per element root-sum-square of the three
    double global_state = 0.0;
    double global_adjoint = 0.0;
    double global_control = 0.0;
    double global = 0.0;
    double log_factor = 0.0; ///< |log(max_T 1/h_T)|
};

/// Element-wise data oscillation h_T^(4-d) ||g - P_T g||^2 with P_T the local
/// L2 projection onto linears, plus the worst patch value.
struct OscillationField {
    Vector per_element_sq;
    double max_patch = 0.0; ///< max over T of sqrt(sum over the patch of T)
};

/// Jump of the normal derivative of a P1 function across interior side s:
/// outward-normal derivative from one neighbor plus the outward-normal
/// derivative from the other. Constant per side; symmetric in the neighbor
/// labeling.
double side_jump(const Mesh& mesh, const SideTable& sides, const FeFunction& fe, int s);

/// State indicator per element:
///   h_T^(2-d/2) ||f + u||_{L2(T)} + h_T max over interior sides |jump of grad y|.
Vector indicator_state(const Mesh& mesh, const SideTable& sides, const FeFunction& y,
                       const FeFunction& u, const ScalarField& f, const Quadrature& quad);

/// Adjoint indicator per element:
///   h_T^(2-d/2) ||y - y_omega||_{L2(T)} + h_T max over interior sides |jump of grad p|.
Vector indicator_adjoint(const Mesh& mesh, const SideTable& sides, const FeFunction& p,
                         const FeFunction& y, const ScalarField& y_omega,
                         const Quadrature& quad);

/// Control indicator per element: the exact sup over T of
/// |clamp(-p/lambda) - u|. The integrand is piecewise linear on the subdivision
/// of T induced by the level lines {-p/lambda = a} and {-p/lambda = b}, so the
/// sup is attained at a vertex of T or where a level line crosses an edge.
Vector indicator_control(const Mesh& mesh, const FeFunction& u, const FeFunction& p,
                         double lambda, double a, double b);

/// Combines the three per-element indicator vectors into the full field.
IndicatorField combine(const Mesh& mesh, const Vector& state, const Vector& adjoint,
                       const Vector& control);

OscillationField oscillation(const Mesh& mesh, const SideTable& sides,
                             const ScalarField& g, const Quadrature& quad);

/// Diagnostic ratio per element: combined indicator over (patch max of the
/// three true errors plus the patch oscillations of f and y_omega). NaN where
/// the denominator vanishes; such entries are excluded from statistics.
Vector efficiency_ratios(const Mesh& mesh, const SideTable& sides,
                         const IndicatorField& indicators, const Vector& err_state,
                         const Vector& err_adjoint, const Vector& err_control,
                         const OscillationField& osc_f, const OscillationField& osc_yomega);

} // namespace ocpamr
