#include "ocpamr/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace ocpamr {

std::vector<int> mark_maximum(const std::vector<double>& indicators, double theta) {
    if (indicators.empty()) throw InputError("adaptive: empty indicator list");
    if (!(theta > 0.0 && theta <= 1.0)) {
        throw InputError("adaptive: theta must lie in (0, 1]");
    }
    const double threshold = theta * *std::max_element(indicators.begin(), indicators.end());
    std::vector<int> marked;
    for (int t = 0; t < static_cast<int>(indicators.size()); ++t) {
        if (indicators[t] >= threshold) marked.push_back(t);
    }
    return marked;
}

std::vector<int> mark_maximum(const Vector& indicators, double theta) {
    return mark_maximum(
        std::vector<double>(indicators.data(), indicators.data() + indicators.size()),
        theta);
}

AdaptiveResult adaptive_loop(const OcpProblem& problem, const AdaptiveConfig& config,
                             const ExactSolution* exact, const IterationObserver& observer) {
    if (problem.mesh == nullptr) throw InputError("adaptive: problem has no mesh");
    if (!(config.theta > 0.0 && config.theta <= 1.0)) {
        throw InputError("adaptive: theta must lie in (0, 1]");
    }
    if (config.max_iterations < 1) {
        throw InputError("adaptive: max_iterations must be >= 1");
    }

    const auto quad = Quadrature::seven_point();
    AdaptiveResult result;
    Mesh mesh = *problem.mesh;

    for (int iteration = 0;; ++iteration) {
        OcpProblem current = problem;
        current.mesh = &mesh;

        SideTable sides;
        OcpSolution solution;
        IndicatorField indicators;
        try {
            sides = build_side_table(mesh);
            solution = solve_ocp(current, config.solver_tol);
            const Vector eta_y =
                indicator_state(mesh, sides, solution.y, solution.u, current.f, quad);
            const Vector eta_p = indicator_adjoint(mesh, sides, solution.p, solution.y,
                                                   current.y_omega, quad);
            const Vector eta_u = indicator_control(mesh, solution.u, solution.p,
                                                   current.lambda, current.a, current.b);
            indicators = combine(mesh, eta_y, eta_p, eta_u);
        } catch (const NumericalError& e) {
            throw NumericalError("adaptive: iteration " + std::to_string(iteration) +
                                 ": " + e.what());
        }

        ConvergenceRow row;
        row.iteration = iteration;
        row.ndof = 3 * mesh.vertex_count();
        row.est_y = indicators.global_state;
        row.est_p = indicators.global_adjoint;
        row.est_u = indicators.global_control;
        row.est_total = indicators.global;
        row.ell = indicators.log_factor;
        row.elements = mesh.element_count();
        if (exact != nullptr) {
            const auto errs = measure_errors(mesh, solution, *exact, config.sample_order);
            row.err_y = errs.y;
            row.err_p = errs.p;
            row.err_u = errs.u;
            row.err_total = errs.total;
        } else {
            row.err_y = row.err_p = row.err_u = row.err_total =
                std::numeric_limits<double>::quiet_NaN();
        }

        const bool stop =
            row.ndof > config.max_ndof || iteration + 1 >= config.max_iterations;

        std::vector<int> marked;
        if (!stop) {
            if (config.mode == RefinementMode::uniform) {
                marked.resize(mesh.element_count());
                std::iota(marked.begin(), marked.end(), 0);
            } else {
                marked = mark_maximum(indicators.combined, config.theta);
            }
        }
        row.marked = static_cast<int>(marked.size());
        result.record.rows.push_back(row);

        if (observer) {
            observer(IterationView{iteration, mesh, sides, solution, indicators, marked,
                                   stop});
        }

        if (stop) {
            result.mesh = std::move(mesh);
            result.solution = std::move(solution);
            result.indicators = std::move(indicators);
            return result;
        }
        mesh = refine(mesh, marked);
    }
}

double fit_rate(const ConvergenceRecord& record, RecordColumn column, int window_rows) {
    const auto value = [column](const ConvergenceRow& row) {
        switch (column) {
            case RecordColumn::est_y: return row.est_y;
            case RecordColumn::est_p: return row.est_p;
            case RecordColumn::est_u: return row.est_u;
            case RecordColumn::est_total: return row.est_total;
            case RecordColumn::err_y: return row.err_y;
            case RecordColumn::err_p: return row.err_p;
            case RecordColumn::err_u: return row.err_u;
            case RecordColumn::err_total: return row.err_total;
        }
        return 0.0;
    };
    const int rows = static_cast<int>(record.rows.size());
    const int k = std::min(window_rows, rows);
    if (k < 2) throw InputError("adaptive: rate fit needs at least 2 rows");

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int i = rows - k; i < rows; ++i) {
        const double v = value(record.rows[i]);
        if (!(v > 0.0)) {
            throw InputError("adaptive: rate fit requires positive column values");
        }
        const double x = std::log(static_cast<double>(record.rows[i].ndof));
        const double y = std::log(v);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = k * sxx - sx * sx;
    if (denom == 0.0) throw InputError("adaptive: rate fit is degenerate");
    return (k * sxy - sx * sy) / denom;
}

} // namespace ocpamr
