#include "ocpamr/estimator.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace ocpamr {

namespace {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

// Constant gradient of a P1 function on element t.
Vec2 element_gradient(const Mesh& mesh, const FeFunction& fe, int t) {
    const auto& tri = mesh.elements[t];
    const double area = element_area(mesh, t);
    Vec2 g;
    for (int k = 0; k < 3; ++k) {
        const Point& a = mesh.vertices[tri[(k + 1) % 3]];
        const Point& b = mesh.vertices[tri[(k + 2) % 3]];
        g.x += fe.values[tri[k]] * (a.y - b.y) / (2.0 * area);
        g.y += fe.values[tri[k]] * (b.x - a.x) / (2.0 * area);
    }
    return g;
}

// Unit normal on the side (va, vb) pointing out of element t.
Vec2 outward_normal(const Mesh& mesh, int t, int va, int vb) {
    const Point& a = mesh.vertices[va];
    const Point& b = mesh.vertices[vb];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    Vec2 n{(b.y - a.y) / len, (a.x - b.x) / len};
    for (int k : mesh.elements[t]) {
        if (k != va && k != vb) {
            const Point& c = mesh.vertices[k];
            if (n.x * (c.x - a.x) + n.y * (c.y - a.y) > 0.0) {
                n.x = -n.x;
                n.y = -n.y;
            }
            break;
        }
    }
    return n;
}

double clamp(double w, double a, double b) { return std::min(b, std::max(a, w)); }

// Shared core of the state/adjoint indicators:
//   h_T^(2-d/2) * quadrature L2 norm of (data + sign * P1 field) on T
//   + h_T * max over interior sides of |jump of grad flux_field|.
Vector residual_indicator(const Mesh& mesh, const SideTable& sides,
                          const FeFunction& flux_field, const FeFunction& volume_field,
                          double volume_sign, const ScalarField& data,
                          const Quadrature& quad) {
    if (volume_field.mesh_id != mesh.id) {
        throw InputError("estimator: FeFunction bound to a different mesh generation");
    }
    std::vector<double> jump(sides.sides.size());
    for (int s = 0; s < static_cast<int>(sides.sides.size()); ++s) {
        jump[s] = side_jump(mesh, sides, flux_field, s);
    }

    Vector eta(mesh.element_count());
    const double volume_exponent = 2.0 - space_dim / 2.0;
    for (int t = 0; t < mesh.element_count(); ++t) {
        const auto& tri = mesh.elements[t];
        const Point p0 = mesh.vertices[tri[0]];
        const Point p1 = mesh.vertices[tri[1]];
        const Point p2 = mesh.vertices[tri[2]];
        const double area = element_area(mesh, t);

        double sum = 0.0;
        for (std::size_t q = 0; q < quad.points.size(); ++q) {
            const auto& l = quad.points[q];
            const Point x{l[0] * p0.x + l[1] * p1.x + l[2] * p2.x,
                          l[0] * p0.y + l[1] * p1.y + l[2] * p2.y};
            const double fe_val = l[0] * volume_field.values[tri[0]] +
                                  l[1] * volume_field.values[tri[1]] +
                                  l[2] * volume_field.values[tri[2]];
            const double v = data(x.x, x.y) + volume_sign * fe_val;
            if (!std::isfinite(v)) {
                throw NumericalError("estimator: non-finite residual on element " +
                                     std::to_string(t));
            }
            sum += quad.weights[q] * v * v;
        }
        const double volume = std::sqrt(area * sum);

        double jump_max = 0.0;
        for (int s : sides.element_sides[t]) {
            jump_max = std::max(jump_max, std::abs(jump[s]));
        }
        const double h = element_diameter(mesh, t);
        eta[t] = std::pow(h, volume_exponent) * volume + h * jump_max;
    }
    return eta;
}

} // namespace

double side_jump(const Mesh& mesh, const SideTable& sides, const FeFunction& fe, int s) {
    if (fe.mesh_id != mesh.id) {
        throw InputError("estimator: FeFunction bound to a different mesh generation");
    }
    const int va = sides.sides[s][0], vb = sides.sides[s][1];
    double jump = 0.0;
    for (int side = 0; side < 2; ++side) {
        const int t = sides.neighbors[s][side];
        const Vec2 grad = element_gradient(mesh, fe, t);
        const Vec2 n = outward_normal(mesh, t, va, vb);
        jump += n.x * grad.x + n.y * grad.y;
    }
    return jump;
}

Vector indicator_state(const Mesh& mesh, const SideTable& sides, const FeFunction& y,
                       const FeFunction& u, const ScalarField& f, const Quadrature& quad) {
    // Volume residual f + u; jumps of the state flux.
    return residual_indicator(mesh, sides, y, u, +1.0, f, quad);
}

Vector indicator_adjoint(const Mesh& mesh, const SideTable& sides, const FeFunction& p,
                         const FeFunction& y, const ScalarField& y_omega,
                         const Quadrature& quad) {
    // Volume residual y - y_omega (squared, so computed as y_omega - y); jumps
    // of the adjoint flux.
    return residual_indicator(mesh, sides, p, y, -1.0, y_omega, quad);
}

Vector indicator_control(const Mesh& mesh, const FeFunction& u, const FeFunction& p,
                         double lambda, double a, double b) {
    if (a > b) throw InputError("estimator: bounds violate a <= b");
    if (!(lambda > 0.0)) throw InputError("estimator: lambda must be positive");
    if (u.mesh_id != mesh.id || p.mesh_id != mesh.id) {
        throw InputError("estimator: FeFunction bound to a different mesh generation");
    }
    Vector eta(mesh.element_count());
    for (int t = 0; t < mesh.element_count(); ++t) {
        const auto& tri = mesh.elements[t];
        std::array<double, 3> w, uv;
        for (int k = 0; k < 3; ++k) {
            w[k] = -p.values[tri[k]] / lambda;
            uv[k] = u.values[tri[k]];
        }
        double sup = 0.0;
        for (int k = 0; k < 3; ++k) {
            sup = std::max(sup, std::abs(clamp(w[k], a, b) - uv[k]));
        }
        // Crossings of the level lines {w = a} and {w = b} with the edges; the
        // clamped value there is the bound itself.
        for (int k = 0; k < 3; ++k) {
            const int i = k, j = (k + 1) % 3;
            for (const double c : {a, b}) {
                const double wi = w[i] - c, wj = w[j] - c;
                if (wi * wj < 0.0) {
                    const double s = wi / (wi - wj);
                    const double u_at = uv[i] + s * (uv[j] - uv[i]);
                    sup = std::max(sup, std::abs(c - u_at));
                }
            }
        }
        eta[t] = sup;
    }
    return eta;
}

IndicatorField combine(const Mesh& mesh, const Vector& state, const Vector& adjoint,
                       const Vector& control) {
    const int n = mesh.element_count();
    if (state.size() != n || adjoint.size() != n || control.size() != n) {
        throw InputError("estimator: indicator lengths disagree with the mesh");
    }
    IndicatorField field;
    field.state = state;
    field.adjoint = adjoint;
    field.control = control;
    field.combined.resize(n);
    double inv_h_max = 0.0;
    for (int t = 0; t < n; ++t) {
        field.combined[t] = std::sqrt(state[t] * state[t] + adjoint[t] * adjoint[t] +
                                      control[t] * control[t]);
        field.global_state = std::max(field.global_state, state[t]);
        field.global_adjoint = std::max(field.global_adjoint, adjoint[t]);
        field.global_control = std::max(field.global_control, control[t]);
        inv_h_max = std::max(inv_h_max, 1.0 / element_diameter(mesh, t));
    }
    field.global = std::sqrt(field.global_state * field.global_state +
                             field.global_adjoint * field.global_adjoint +
                             field.global_control * field.global_control);
    field.log_factor = std::abs(std::log(inv_h_max));
    return field;
}

OscillationField oscillation(const Mesh& mesh, const SideTable& sides, const ScalarField& g,
                             const Quadrature& quad) {
    const int n = mesh.element_count();
    OscillationField osc;
    osc.per_element_sq = Vector::Zero(n);
    const double exponent = 4.0 - space_dim;
    std::vector<double> g_at(quad.points.size());
    for (int t = 0; t < n; ++t) {
        const auto& tri = mesh.elements[t];
        const Point p0 = mesh.vertices[tri[0]];
        const Point p1 = mesh.vertices[tri[1]];
        const Point p2 = mesh.vertices[tri[2]];
        const double area = element_area(mesh, t);
        // Local L2 projection onto P1(T): 3x3 mass system with quadrature rhs.
        Eigen::Matrix3d mass_local;
        mass_local << 2, 1, 1, 1, 2, 1, 1, 1, 2;
        mass_local *= area / 12.0;
        Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
        for (std::size_t q = 0; q < quad.points.size(); ++q) {
            const auto& l = quad.points[q];
            const Point x{l[0] * p0.x + l[1] * p1.x + l[2] * p2.x,
                          l[0] * p0.y + l[1] * p1.y + l[2] * p2.y};
            g_at[q] = g(x.x, x.y);
            if (!std::isfinite(g_at[q])) {
                throw NumericalError("estimator: non-finite data on element " +
                                     std::to_string(t));
            }
            for (int i = 0; i < 3; ++i) rhs[i] += area * quad.weights[q] * g_at[q] * l[i];
        }
        const Eigen::Vector3d coeff = mass_local.ldlt().solve(rhs);
        double sq = 0.0;
        for (std::size_t q = 0; q < quad.points.size(); ++q) {
            const auto& l = quad.points[q];
            const double proj = coeff[0] * l[0] + coeff[1] * l[1] + coeff[2] * l[2];
            const double diff = g_at[q] - proj;
            sq += area * quad.weights[q] * diff * diff;
        }
        osc.per_element_sq[t] = std::pow(element_diameter(mesh, t), exponent) * sq;
    }
    for (int t = 0; t < n; ++t) {
        double patch_sq = 0.0;
        for (int tp : element_patch(mesh, sides, t)) patch_sq += osc.per_element_sq[tp];
        osc.max_patch = std::max(osc.max_patch, std::sqrt(patch_sq));
    }
    return osc;
}

Vector efficiency_ratios(const Mesh& mesh, const SideTable& sides,
                         const IndicatorField& indicators, const Vector& err_state,
                         const Vector& err_adjoint, const Vector& err_control,
                         const OscillationField& osc_f, const OscillationField& osc_yomega) {
    const int n = mesh.element_count();
    Vector ratios(n);
    for (int t = 0; t < n; ++t) {
        const auto patch = element_patch(mesh, sides, t);
        double ey = 0.0, ep = 0.0, eu = 0.0, of_sq = 0.0, oy_sq = 0.0;
        for (int tp : patch) {
            ey = std::max(ey, err_state[tp]);
            ep = std::max(ep, err_adjoint[tp]);
            eu = std::max(eu, err_control[tp]);
            of_sq += osc_f.per_element_sq[tp];
            oy_sq += osc_yomega.per_element_sq[tp];
        }
        const double denom = ey + ep + eu + std::sqrt(of_sq) + std::sqrt(oy_sq);
        ratios[t] = denom > 0.0 ? indicators.combined[t] / denom
                                : std::numeric_limits<double>::quiet_NaN();
    }
    return ratios;
}

} // namespace ocpamr
