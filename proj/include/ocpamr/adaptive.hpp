#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ocpamr/benchmark.hpp"
#include "ocpamr/estimator.hpp"
#include "ocpamr/ocp.hpp"

namespace ocpamr {

enum class RefinementMode { adaptive, uniform };

struct AdaptiveConfig {
    double theta = 0.5;          ///< maximum-strategy marking fraction, in (0, 1]
    int max_ndof = 100000;       ///< stop once ndof exceeds this
    int max_iterations = 100;
    RefinementMode mode = RefinementMode::adaptive;
    double solver_tol = 1e-10;
    int sample_order = 4;        ///< lattice order for error sampling
};

/// One row of the convergence history. Ndof counts all three fields:
/// 3 x vertex count. Error columns are NaN when no exact solution was given.
/// marked is the number of elements marked at this iteration (0 on the final
/// row, where no refinement follows).
struct ConvergenceRow {
    int iteration = 0;
    int ndof = 0;
    double est_y = 0.0;
    double est_p = 0.0;
    double est_u = 0.0;
    double est_total = 0.0;
    double err_y = 0.0;
    double err_p = 0.0;
    double err_u = 0.0;
    double err_total = 0.0;
    double ell = 0.0;
    int marked = 0;
    int elements = 0;
};

struct ConvergenceRecord {
    std::vector<ConvergenceRow> rows;
};

enum class RecordColumn { est_y, est_p, est_u, est_total, err_y, err_p, err_u, err_total };

/// Per-iteration view handed to the observer after marking, before refinement.
/// On the final iteration marked is empty and last is true.
struct IterationView {
    int iteration;
    const Mesh& mesh;
    const SideTable& sides;
    const OcpSolution& solution;
    const IndicatorField& indicators;
    const std::vector<int>& marked;
    bool last;
};

using IterationObserver = std::function<void(const IterationView&)>;

struct AdaptiveResult {
    ConvergenceRecord record;
    Mesh mesh;
    OcpSolution solution;
    IndicatorField indicators;
};

/// Maximum marking strategy: elements with indicator >= theta * max indicator.
std::vector<int> mark_maximum(const std::vector<double>& indicators, double theta);
std::vector<int> mark_maximum(const Vector& indicators, double theta);

/// The solve -> estimate -> mark -> refine loop. The problem's mesh field
/// provides the initial mesh; in uniform mode every element is marked. Errors
/// are recorded only when an exact solution is supplied.
AdaptiveResult adaptive_loop(const OcpProblem& problem, const AdaptiveConfig& config,
                             const ExactSolution* exact = nullptr,
                             const IterationObserver& observer = {});

/// Least-squares slope of log(column) against log(ndof) over the last
/// window_rows rows of the record.
double fit_rate(const ConvergenceRecord& record, RecordColumn column, int window_rows);

} // namespace ocpamr
