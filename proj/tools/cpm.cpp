/** Command-line front end.
 *
 *    cpm mesh   [flags]          build the band, write mesh_stats/mesh_nodes
 *    cpm solve  [flags]          full pipeline, write solution/iterations/timings
 *    cpm study <name> [flags]    canned parameter studies, write study_<name>.csv
 *
 *  Flags mirror the configuration keys; --config FILE loads a key = value
 *  file first and explicit flags override it.  Exit codes: 0 success,
 *  2 configuration error, 3 divergence or failure to converge, 4 I/O error. */

#include "cpdd/cpdd.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace {

struct CliState {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::string study_name;
};

/** Register every configuration key as a string flag that records an
 *  override; types are checked centrally by apply_setting. */
void add_config_flags(CLI::App* cmd, CliState& st) {
    // The lattice spacing key is "h", so help must not claim the -h short flag.
    cmd->set_help_flag("--help", "print this help message and exit");
    cmd->add_option("--config", st.config_path, "key = value configuration file");
    static const std::vector<std::pair<const char*, const char*>> keys = {
        {"surface", "circle | arc | sphere | torus | obj"},
        {"radius", "circle/arc/sphere radius"},
        {"angle_min", "arc start angle (radians)"},
        {"angle_max", "arc end angle (radians)"},
        {"major_radius", "torus ring radius"},
        {"minor_radius", "torus tube radius"},
        {"obj", "triangle mesh (OBJ) path"},
        {"scale_height", "scale an OBJ mesh to this y-extent"},
        {"curvature_bound", "curvature bound enabling band validity checks"},
        {"h", "lattice spacing"},
        {"p", "interpolation degree (default 3 in 2D, 2 in 3D)"},
        {"band", "tube | algorithmic"},
        {"c", "Helmholtz reaction coefficient"},
        {"rhs", "auto | circle-harmonic | sphere-field | arc | ones | file:PATH"},
        {"harmonic", "k of the circle solution sin(k theta)"},
        {"method", "ras | oras"},
        {"mode", "stationary | gmres"},
        {"rel_tol", "relative residual tolerance"},
        {"max_iter", "iteration cap (0 = mode default)"},
        {"gmres_restart", "restart length (0 = none)"},
        {"n_overlap", "overlap layers N_O"},
        {"n_subdomains", "subdomain count N_S"},
        {"alpha", "Robin parameter"},
        {"alpha_cross", "Robin parameter near cross points (unset = alpha)"},
        {"seed", "partitioner seed"},
        {"partition_in", "load this partition file"},
        {"partition_out", "save the aligned partition here"},
        {"output_dir", "directory for output files"},
        {"workers", "solver worker threads"},
        {"check_direct", "also solve directly and report the gap"},
    };
    for (const auto& [key, desc] : keys) {
        std::string k = key;
        cmd->add_option_function<std::string>(
            "--" + k, [&st, k](const std::string& v) { st.overrides.emplace_back(k, v); },
            desc);
    }
}

cpdd::RunConfig merge_config(const CliState& st) {
    cpdd::RunConfig cfg;
    if (!st.config_path.empty()) cpdd::load_config_file(cfg, st.config_path);
    for (const auto& [k, v] : st.overrides) cpdd::apply_setting(cfg, k, v);
    cpdd::validate(cfg);
    return cfg;
}

void ensure_output_dir(const cpdd::RunConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw cpdd::IoError("cannot create output directory: " + cfg.output_dir);
}

template <int D>
int do_mesh(const cpdd::RunConfig& cfg) {
    cpdd::Surface<D> surface = cpdd::make_surface<D>(cfg);
    const int p = cpdd::effective_degree(cfg);
    cpdd::BandGrid<D> grid = cfg.band == "algorithmic"
                                 ? cpdd::build_band_algorithmic(surface, cfg.h, p)
                                 : cpdd::build_band_tube(surface, cfg.h, p);
    cpdd::write_mesh_stats(cfg.output_dir + "/mesh_stats.csv", grid);
    cpdd::write_mesh_nodes(cfg.output_dir + "/mesh_nodes.csv", grid);
    std::printf("band: %d active, %d ghost nodes (h = %g, p = %d)\n", grid.n_active(),
                grid.n_ghost(), cfg.h, p);
    if (grid.tube_radius_warning)
        std::printf("warning: band width exceeds the curvature bound\n");
    std::printf("wrote %s/mesh_stats.csv and mesh_nodes.csv\n", cfg.output_dir.c_str());
    return 0;
}

template <int D>
int do_solve(const cpdd::RunConfig& cfg) {
    cpdd::BuiltProblem<D> P = cpdd::build_problem<D>(cfg);
    cpdd::ThreadPool pool(cfg.workers);
    cpdd::SolveOutputs<D> out = cpdd::run_solve<D>(cfg, P, &pool);

    cpdd::write_solution(cfg.output_dir + "/solution.csv", P.grid, out.u);
    cpdd::write_iterations(cfg.output_dir + "/iterations.csv", out.log);
    cpdd::write_timings(cfg.output_dir + "/timings.csv", out.log.timings,
                        cfg.solver.mode == cpdd::SolverConfig::Mode::gmres);

    const char* method = cfg.solver.method == cpdd::SolverConfig::Method::oras ? "oras" : "ras";
    const char* mode =
        cfg.solver.mode == cpdd::SolverConfig::Mode::gmres ? "gmres" : "stationary";
    std::printf("band: %d active nodes; %d subdomains, %d overlap layers\n",
                P.grid.n_active(), cfg.solver.n_subdomains, cfg.solver.n_overlap);
    std::printf("%s %s: %s after %d iterations, final relative residual %.3e\n", method,
                mode, out.log.converged ? "converged" : "NOT converged", out.log.iterations,
                out.final_relative_residual);
    if (out.err_inf >= 0)
        std::printf("error vs exact solution: inf %.6e, rms %.6e\n", out.err_inf,
                    out.err_rms);
    if (out.diff_direct >= 0)
        std::printf("distance to the direct solution: %.6e\n", out.diff_direct);
    if (out.fallback_anchors > 0)
        std::printf("note: %d boundary nodes used the global anchor fallback\n",
                    out.fallback_anchors);
    std::printf("wrote %s/{solution,iterations,timings}.csv\n", cfg.output_dir.c_str());
    if (!out.log.converged) {
        std::fprintf(stderr, "solver did not reach the tolerance within %d iterations\n",
                     cpdd::effective_max_iter(cfg.solver));
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"closest point discretization with Schwarz domain decomposition"};
    app.set_help_flag("--help", "print this help message and exit");
    app.require_subcommand(1);
    CliState st;

    CLI::App* mesh = app.add_subcommand("mesh", "build and report the computational band");
    add_config_flags(mesh, st);
    CLI::App* solve = app.add_subcommand("solve", "run the full solve pipeline");
    add_config_flags(solve, st);
    CLI::App* study = app.add_subcommand("study", "run a canned parameter study");
    study->add_option("name", st.study_name, "one of: arc-robin, sphere-consistency, alpha-sweep, overlap-sweep, nsub-sweep")
        ->required();
    add_config_flags(study, st);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // bad flags are configuration errors
    }

    try {
        cpdd::RunConfig cfg = merge_config(st);
        ensure_output_dir(cfg);
        if (mesh->parsed())
            return cpdd::dimension_of(cfg) == 2 ? do_mesh<2>(cfg) : do_mesh<3>(cfg);
        if (solve->parsed())
            return cpdd::dimension_of(cfg) == 2 ? do_solve<2>(cfg) : do_solve<3>(cfg);
        if (study->parsed()) {
            cpdd::ThreadPool pool(cfg.workers);
            cpdd::run_study(st.study_name, cfg, &pool);
            std::printf("wrote %s/study_%s.csv\n", cfg.output_dir.c_str(),
                        st.study_name.c_str());
            return 0;
        }
        return 2;
    } catch (const cpdd::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const cpdd::DivergenceError& e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return 3;
    } catch (const cpdd::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
}
