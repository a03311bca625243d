#include <CLI11.hpp>

#include <string>

#include "ocpamr/io.hpp"

int main(int argc, char** argv) {
    CLI::App app{
        "Adaptive P1 solver for the control-constrained Poisson optimal control "
        "problem with max-norm residual error estimation"};

    ocpamr::RunConfig config;
    std::string mode = "adaptive";
    std::string out = config.output_dir.string();

    app.add_option("--problem", config.problem, "Problem name: lshape-paper | square-smooth")
        ->capture_default_str();
    app.add_option("--mode", mode, "Refinement mode: adaptive | uniform")
        ->check(CLI::IsMember({"adaptive", "uniform"}))
        ->capture_default_str();
    app.add_option("--theta", config.theta, "Maximum-strategy marking fraction in (0, 1]")
        ->capture_default_str();
    app.add_option("--lambda", config.lambda, "Control cost weight (positive)")
        ->capture_default_str();
    app.add_option("--max-ndof", config.max_ndof, "Stop once ndof exceeds this")
        ->capture_default_str();
    app.add_option("--max-iters", config.max_iterations, "Iteration cap")
        ->capture_default_str();
    app.add_option("--tol", config.solver_tol, "Linear/active-set solver tolerance")
        ->capture_default_str();
    app.add_option("--sample-order", config.sample_order,
                   "Barycentric lattice order for error sampling")
        ->capture_default_str();
    app.add_option("--out", out, "Output directory")->capture_default_str();
    app.add_option("--vtk-every", config.vtk_every,
                   "Write a VTK snapshot every N iterations (0 = final only)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    config.mode = mode == "uniform" ? ocpamr::RefinementMode::uniform
                                    : ocpamr::RefinementMode::adaptive;
    config.output_dir = out;
    return ocpamr::run_experiment_exit_code(config);
}
