#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ocpamr/adaptive.hpp"

namespace ocpamr {

/// Full configuration of one experiment run.
struct RunConfig {
    std::string problem = "lshape-paper"; ///< lshape-paper | square-smooth
    RefinementMode mode = RefinementMode::adaptive;
    double theta = 0.5;
    double lambda = 1.0;
    int max_ndof = 100000;
    int max_iterations = 100;
    double solver_tol = 1e-10;
    int sample_order = 4;
    std::filesystem::path output_dir = "out";
    int vtk_every = 0; ///< 0 = final mesh only
};

using NamedFields = std::vector<std::pair<std::string, Vector>>;

/// Legacy ASCII VTK unstructured grid: triangle cells, scalar point data and
/// scalar cell data. Written atomically (temp file + rename).
void export_vtk(const std::filesystem::path& path, const Mesh& mesh,
                const NamedFields& point_fields, const NamedFields& cell_fields);

/// history.csv with the fixed column order
/// iteration,ndof,est_y,est_p,est_u,est_total,err_y,err_p,err_u,err_total,
/// ell_T,marked,elements. Written atomically.
void write_history_csv(const std::filesystem::path& path, const ConvergenceRecord& record);

/// Runs the configured experiment: adaptive or uniform loop on the named
/// problem, history.csv plus VTK snapshots in output_dir, fitted convergence
/// rates printed for the last 10 rows. Throws on error.
ConvergenceRecord run_experiment(const RunConfig& config);

/// Exit codes: 0 success, 2 input error, 3 numerical/structural failure.
int run_experiment_exit_code(const RunConfig& config) noexcept;

} // namespace ocpamr
