#include "ocpamr/benchmark.hpp"

#include <cmath>
#include <limits>

namespace ocpamr {

namespace {

constexpr double pi = M_PI;
constexpr double snap_tol = 1e-13;

struct Polar {
    double r;
    double theta; ///< in [0, 3pi/2]
};

// Polar coordinates with the angle measured counterclockwise from the positive
// x-axis. Coordinates within snap_tol of the reentrant edges are snapped onto
// them so boundary sample points never fall into the removed quadrant by
// rounding.
Polar polar_lshape(double x, double y) {
    if (std::abs(x) < snap_tol) x = 0.0;
    if (std::abs(y) < snap_tol) y = 0.0;
    if (x > 0.0 && y < 0.0) {
        throw DomainError("benchmark: point inside the removed quadrant");
    }
    const double r = std::hypot(x, y);
    double theta = std::atan2(y, x);
    if (theta < 0.0) theta += 2.0 * pi; // y < 0 only occurs with x <= 0 here
    if (theta > 1.5 * pi) theta = 1.5 * pi;
    return {r, theta};
}

// Singular harmonic factor s = r^(2/3) sin(2 theta / 3) and its gradient.
double singular_factor(const Polar& p) {
    return std::pow(p.r, 2.0 / 3.0) * std::sin(2.0 * p.theta / 3.0);
}

void singular_gradient(const Polar& p, double& sx, double& sy) {
    const double scale = (2.0 / 3.0) * std::pow(p.r, -1.0 / 3.0);
    sx = -scale * std::sin(p.theta / 3.0);
    sy = scale * std::cos(p.theta / 3.0);
}

// Smooth factor of the exact state and its derivatives.
double state_factor(double x, double y) { return (1.0 - x * x) * (1.0 - y * y); }
void state_factor_gradient(double x, double y, double& wx, double& wy) {
    wx = -2.0 * x * (1.0 - y * y);
    wy = -2.0 * y * (1.0 - x * x);
}
double state_factor_laplacian(double x, double y) {
    return -2.0 * (1.0 - y * y) - 2.0 * (1.0 - x * x);
}

// Smooth factor of the exact adjoint and its derivatives.
double adjoint_factor(double x, double y) {
    return std::sin(2.0 * pi * x) * std::sin(2.0 * pi * y);
}
void adjoint_factor_gradient(double x, double y, double& wx, double& wy) {
    wx = 2.0 * pi * std::cos(2.0 * pi * x) * std::sin(2.0 * pi * y);
    wy = 2.0 * pi * std::sin(2.0 * pi * x) * std::cos(2.0 * pi * y);
}
double adjoint_factor_laplacian(double x, double y) {
    return -8.0 * pi * pi * adjoint_factor(x, y);
}

// Laplacian of (smooth factor) * (singular factor). The singular factor is
// harmonic, so Lap(w s) = s Lap w + 2 grad w . grad s.
double product_laplacian(const Polar& p, double wx, double wy, double lap_w) {
    if (p.r < snap_tol) {
        throw DomainError("benchmark: data singular at the origin");
    }
    double sx, sy;
    singular_gradient(p, sx, sy);
    return singular_factor(p) * lap_w + 2.0 * (wx * sx + wy * sy);
}

} // namespace

namespace lshape {

double exact_y(double x, double y) {
    const Polar p = polar_lshape(x, y);
    if (p.r < snap_tol) return 0.0;
    return state_factor(x, y) * singular_factor(p);
}

double exact_p(double x, double y) {
    const Polar p = polar_lshape(x, y);
    if (p.r < snap_tol) return 0.0;
    return adjoint_factor(x, y) * singular_factor(p);
}

double exact_u(double x, double y, double lambda, double a, double b) {
    return clamp_projection(-exact_p(x, y) / lambda, a, b);
}

double laplacian_y(double x, double y) {
    const Polar p = polar_lshape(x, y);
    double wx, wy;
    state_factor_gradient(x, y, wx, wy);
    return product_laplacian(p, wx, wy, state_factor_laplacian(x, y));
}

double laplacian_p(double x, double y) {
    const Polar p = polar_lshape(x, y);
    double wx, wy;
    adjoint_factor_gradient(x, y, wx, wy);
    return product_laplacian(p, wx, wy, adjoint_factor_laplacian(x, y));
}

double forcing(double x, double y, double lambda, double a, double b) {
    return -laplacian_y(x, y) - exact_u(x, y, lambda, a, b);
}

double desired_state(double x, double y) { return exact_y(x, y) + laplacian_p(x, y); }

} // namespace lshape

Benchmark make_lshape_paper(double lambda) {
    if (!(lambda > 0.0)) throw InputError("benchmark: lambda must be positive");
    Benchmark bench;
    bench.name = "lshape-paper";
    bench.initial_mesh = initial_lshape_mesh();
    bench.lambda = lambda;
    bench.a = 0.0;
    bench.b = 1.0;
    const double a = bench.a, b = bench.b;
    bench.f = [lambda, a, b](double x, double y) {
        return lshape::forcing(x, y, lambda, a, b);
    };
    bench.y_omega = [](double x, double y) { return lshape::desired_state(x, y); };
    bench.exact.lambda = lambda;
    bench.exact.a = a;
    bench.exact.b = b;
    bench.exact.y = [](double x, double y) { return lshape::exact_y(x, y); };
    bench.exact.p = [](double x, double y) { return lshape::exact_p(x, y); };
    bench.exact.u = [lambda, a, b](double x, double y) {
        return lshape::exact_u(x, y, lambda, a, b);
    };
    return bench;
}

Benchmark make_square_smooth(double lambda) {
    if (!(lambda > 0.0)) throw InputError("benchmark: lambda must be positive");
    Benchmark bench;
    bench.name = "square-smooth";
    bench.initial_mesh = unit_square_mesh();
    bench.lambda = lambda;
    bench.a = 0.0;
    bench.b = 1.0;
    const double a = bench.a, b = bench.b;

    const auto exact_y = [](double x, double y) {
        return std::sin(pi * x) * std::sin(pi * y);
    };
    // Amplitude 2 makes both bounds active on parts of the square.
    const auto exact_p = [](double x, double y) {
        return 2.0 * std::sin(2.0 * pi * x) * std::sin(pi * y);
    };
    const auto exact_u = [exact_p, lambda, a, b](double x, double y) {
        return clamp_projection(-exact_p(x, y) / lambda, a, b);
    };

    bench.f = [exact_y, exact_u](double x, double y) {
        return 2.0 * pi * pi * exact_y(x, y) - exact_u(x, y);
    };
    bench.y_omega = [exact_y, exact_p](double x, double y) {
        return exact_y(x, y) - 5.0 * pi * pi * exact_p(x, y);
    };
    bench.exact.lambda = lambda;
    bench.exact.a = a;
    bench.exact.b = b;
    bench.exact.y = exact_y;
    bench.exact.p = exact_p;
    bench.exact.u = exact_u;
    return bench;
}

Benchmark make_benchmark(const std::string& name, double lambda) {
    if (name == "lshape-paper") return make_lshape_paper(lambda);
    if (name == "square-smooth") return make_square_smooth(lambda);
    throw InputError("benchmark: unknown problem name '" + name + "'");
}

ErrorMeasurement measure_errors(const Mesh& mesh, const OcpSolution& solution,
                                const ExactSolution& exact, int sample_order) {
    ErrorMeasurement m;
    const auto ey = linf_distance_sampled(mesh, solution.y, exact.y, sample_order);
    const auto ep = linf_distance_sampled(mesh, solution.p, exact.p, sample_order);
    const auto eu = linf_distance_sampled(mesh, solution.u, exact.u, sample_order);
    m.per_element_y = ey.per_element;
    m.per_element_p = ep.per_element;
    m.per_element_u = eu.per_element;
    m.y = ey.global;
    m.p = ep.global;
    m.u = eu.global;
    m.total = std::sqrt(m.y * m.y + m.p * m.p + m.u * m.u);
    return m;
}

double effectivity(double estimator_total, double log_factor, double error_total) {
    if (!(error_total > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::max(1.0, log_factor) * estimator_total / error_total;
}

} // namespace ocpamr
