#include "ocpamr/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <stdexcept>
#include <system_error>

namespace ocpamr {

namespace {

// Buffered writer with locale-independent formatting; commits via rename so
// readers never observe a partial file.
class AtomicFile {
public:
    explicit AtomicFile(std::filesystem::path path)
        : path_(std::move(path)), tmp_(path_) {
        tmp_ += ".tmp";
        file_ = std::fopen(tmp_.c_str(), "wb");
        if (file_ == nullptr) {
            throw InputError("io: cannot open '" + tmp_.string() + "' for writing");
        }
    }
    ~AtomicFile() {
        if (file_ != nullptr) {
            std::fclose(file_);
            std::error_code ec;
            std::filesystem::remove(tmp_, ec);
        }
    }
    AtomicFile(const AtomicFile&) = delete;
    AtomicFile& operator=(const AtomicFile&) = delete;

    void write(const char* text) {
        if (std::fputs(text, file_) < 0) {
            throw InputError("io: write failed for '" + path_.string() + "'");
        }
    }

    template <typename... Args>
    void printf(const char* fmt, Args... args) {
        static_assert(sizeof...(Args) > 0, "use write() for plain text");
        if (std::fprintf(file_, fmt, args...) < 0) {
            throw InputError("io: write failed for '" + path_.string() + "'");
        }
    }

    void commit() {
        if (std::fclose(file_) != 0) {
            file_ = nullptr;
            throw InputError("io: write failed for '" + path_.string() + "'");
        }
        file_ = nullptr;
        std::error_code ec;
        std::filesystem::rename(tmp_, path_, ec);
        if (ec) {
            throw InputError("io: cannot rename onto '" + path_.string() + "'");
        }
    }

private:
    std::filesystem::path path_;
    std::filesystem::path tmp_;
    std::FILE* file_ = nullptr;
};

} // namespace

void export_vtk(const std::filesystem::path& path, const Mesh& mesh,
                const NamedFields& point_fields, const NamedFields& cell_fields) {
    for (const auto& [name, values] : point_fields) {
        if (values.size() != mesh.vertex_count()) {
            throw InputError("io: point field '" + name + "' size disagrees with mesh");
        }
    }
    for (const auto& [name, values] : cell_fields) {
        if (values.size() != mesh.element_count()) {
            throw InputError("io: cell field '" + name + "' size disagrees with mesh");
        }
    }

    AtomicFile out(path);
    out.write("# vtk DataFile Version 3.0\n");
    out.write("ocpamr mesh\n");
    out.write("ASCII\n");
    out.write("DATASET UNSTRUCTURED_GRID\n");
    out.printf("POINTS %d double\n", mesh.vertex_count());
    for (const auto& v : mesh.vertices) {
        out.printf("%.16e %.16e 0.0\n", v.x, v.y);
    }
    out.printf("CELLS %d %d\n", mesh.element_count(), 4 * mesh.element_count());
    for (const auto& tri : mesh.elements) {
        out.printf("3 %d %d %d\n", tri[0], tri[1], tri[2]);
    }
    out.printf("CELL_TYPES %d\n", mesh.element_count());
    for (int t = 0; t < mesh.element_count(); ++t) out.write("5\n");

    if (!point_fields.empty()) {
        out.printf("POINT_DATA %d\n", mesh.vertex_count());
        for (const auto& [name, values] : point_fields) {
            out.printf("SCALARS %s double 1\n", name.c_str());
            out.write("LOOKUP_TABLE default\n");
            for (Eigen::Index i = 0; i < values.size(); ++i) {
                out.printf("%.16e\n", values[i]);
            }
        }
    }
    if (!cell_fields.empty()) {
        out.printf("CELL_DATA %d\n", mesh.element_count());
        for (const auto& [name, values] : cell_fields) {
            out.printf("SCALARS %s double 1\n", name.c_str());
            out.write("LOOKUP_TABLE default\n");
            for (Eigen::Index i = 0; i < values.size(); ++i) {
                out.printf("%.16e\n", values[i]);
            }
        }
    }
    out.commit();
}

void write_history_csv(const std::filesystem::path& path, const ConvergenceRecord& record) {
    AtomicFile out(path);
    out.write(
        "iteration,ndof,est_y,est_p,est_u,est_total,err_y,err_p,err_u,err_total,"
        "ell_T,marked,elements\n");
    for (const auto& row : record.rows) {
        out.printf("%d,%d,%.16e,%.16e,%.16e,%.16e,%.16e,%.16e,%.16e,%.16e,%.16e,%d,%d\n",
                   row.iteration, row.ndof, row.est_y, row.est_p, row.est_u, row.est_total,
                   row.err_y, row.err_p, row.err_u, row.err_total, row.ell, row.marked,
                   row.elements);
    }
    out.commit();
}

ConvergenceRecord run_experiment(const RunConfig& config) {
    if (!(config.theta > 0.0 && config.theta <= 1.0)) {
        throw InputError("io: theta must lie in (0, 1]");
    }
    if (!(config.lambda > 0.0)) throw InputError("io: lambda must be positive");
    if (config.max_iterations < 1) throw InputError("io: max-iters must be >= 1");
    if (config.sample_order < 1) throw InputError("io: sample-order must be >= 1");
    if (!(config.solver_tol > 0.0)) throw InputError("io: tol must be positive");
    if (config.vtk_every < 0) throw InputError("io: vtk-every must be >= 0");

    const Benchmark bench = make_benchmark(config.problem, config.lambda);
    std::filesystem::create_directories(config.output_dir);

    AdaptiveConfig loop;
    loop.theta = config.theta;
    loop.max_ndof = config.max_ndof;
    loop.max_iterations = config.max_iterations;
    loop.mode = config.mode;
    loop.solver_tol = config.solver_tol;
    loop.sample_order = config.sample_order;

    const auto snapshot = [&config](const IterationView& view) {
        if (config.vtk_every == 0 && !view.last) return;
        if (config.vtk_every > 0 && view.iteration % config.vtk_every != 0 && !view.last) {
            return;
        }
        char name[32];
        std::snprintf(name, sizeof(name), "mesh_%04d.vtk", view.iteration);
        export_vtk(config.output_dir / name, view.mesh,
                   {{"y", view.solution.y.values},
                    {"p", view.solution.p.values},
                    {"u", view.solution.u.values}},
                   {{"est_y", view.indicators.state},
                    {"est_p", view.indicators.adjoint},
                    {"est_u", view.indicators.control},
                    {"est_total", view.indicators.combined}});
    };

    const OcpProblem problem = bench.problem_on(bench.initial_mesh);
    const AdaptiveResult result = adaptive_loop(problem, loop, &bench.exact, snapshot);

    write_history_csv(config.output_dir / "history.csv", result.record);

    const int window = std::min<int>(10, static_cast<int>(result.record.rows.size()));
    if (window >= 2) {
        const double est_rate = fit_rate(result.record, RecordColumn::est_total, window);
        const double err_rate = fit_rate(result.record, RecordColumn::err_total, window);
        std::printf("est_total rate (last %d rows): %+.4f\n", window, est_rate);
        std::printf("err_total rate (last %d rows): %+.4f\n", window, err_rate);
    }
    return result.record;
}

int run_experiment_exit_code(const RunConfig& config) noexcept {
    try {
        run_experiment(config);
        return 0;
    } catch (const InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}

} // namespace ocpamr
