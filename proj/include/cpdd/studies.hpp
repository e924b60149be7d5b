#ifndef CPDD_STUDIES_HPP
#define CPDD_STUDIES_HPP

/** Canned parameter studies, each emitting study_<name>.csv:
 *
 *    arc-robin           h-refinement of the arc boundary-value problem
 *    sphere-consistency  h-refinement of the sphere problem (direct solve)
 *    alpha-sweep         cross-point Robin parameter vs iteration counts
 *    overlap-sweep       overlap width vs iteration counts (RAS and ORAS)
 *    nsub-sweep          subdomain count vs iteration counts
 *
 *  The refinement studies fix their surface and mesh sizes; the sweep
 *  studies sweep one solver knob and take everything else from the run
 *  configuration.  Cells of runs that diverge or hit the iteration cap are
 *  recorded as DNC and the study continues. */

#include "cpdd/config.hpp"
#include "cpdd/io.hpp"
#include "cpdd/pipeline.hpp"
#include "cpdd/problems.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace cpdd {

namespace detail {

template <int D>
std::vector<int> make_aligned_partition(const BuiltProblem<D>& P, int n_subdomains,
                                        unsigned seed) {
    NodeGraph g = build_graph(P.grid);
    std::vector<int> part = partition_graph(g, n_subdomains, seed);
    align_interfaces(P.grid, part, P.grid.p);
    return part;
}

template <int D>
SchwarzPreconditioner make_preconditioner(const BuiltProblem<D>& P,
                                          const std::vector<Subdomain<D>>& subs,
                                          const TransmissionSpec& spec, ThreadPool* pool) {
    std::vector<LocalOperator> locals(subs.size());
    auto task = [&](int j) { locals[j] = assemble_local(P.grid, P.A, subs[j], spec); };
    if (pool)
        pool->run_batch(static_cast<int>(subs.size()), task);
    else
        for (std::size_t j = 0; j < subs.size(); ++j) task(static_cast<int>(j));
    return SchwarzPreconditioner(std::move(locals), P.grid.n_active(), pool);
}

/** Iteration count as a table cell; divergence and cap-outs become DNC. */
inline std::string iter_cell(const std::function<SolveResult()>& run) {
    try {
        SolveResult r = run();
        return r.log.converged ? std::to_string(r.log.iterations) : "DNC";
    } catch (const DivergenceError&) {
        return "DNC";
    }
}

inline std::string ratio_cell(double prev, double cur) {
    return prev < 0 ? "-" : fmt_real(prev / cur);
}

}  // namespace detail

/** h-refinement of the arc problem with a Dirichlet and a Robin end. */
inline void study_arc_robin(const RunConfig& cfg, const std::string& out_path) {
    const int p = cfg.p > 0 ? cfg.p : 3;
    std::vector<std::vector<std::string>> rows;
    double prev = -1;
    for (double h : {1.0 / 64, 1.0 / 128, 1.0 / 256}) {
        ArcRobinResult r = solve_arc_robin(h, p, cfg.solver.alpha, cfg.solver.c);
        rows.push_back({detail::fmt_real(h), std::to_string(r.n_nodes),
                        detail::fmt_real(r.err_inf), detail::ratio_cell(prev, r.err_inf)});
        prev = r.err_inf;
    }
    write_study(out_path, {"h", "n_nodes", "err_inf", "ratio"}, rows);
}

/** h-refinement of the sphere problem, solved with the global direct
 *  factorization so the study measures pure discretization error. */
inline void study_sphere_consistency(const RunConfig& cfg, const std::string& out_path) {
    RunConfig scfg = cfg;
    scfg.surface = "sphere";
    scfg.rhs = "sphere-field";
    std::vector<std::vector<std::string>> rows;
    double prev = -1;
    for (double h : {1.0 / 25, 1.0 / 50}) {
        scfg.h = h;
        BuiltProblem<3> P = build_problem<3>(scfg);
        DirectSolver lu;
        lu.factor(P.A, "global system");
        Eigen::VectorXd u = lu.solve(P.b);
        double err = error_inf(P.grid, u, P.exact);
        rows.push_back({detail::fmt_real(h), std::to_string(P.grid.n_active()),
                        detail::fmt_real(err), detail::ratio_cell(prev, err)});
        prev = err;
    }
    write_study(out_path, {"h", "n_active", "err_inf", "ratio"}, rows);
}

/** Sweep the Robin parameter alpha over {1, 2, 4, 8, 16, inf} for ORAS,
 *  stationary and GMRES.  The final row takes alpha = 1e12, the Robin limit
 *  that reproduces the Dirichlet (RAS) iteration counts.  The cross-point
 *  weight keeps the configured floor but never drops below alpha. */
template <int D>
void study_alpha_sweep(const RunConfig& cfg, const std::string& out_path, ThreadPool* pool) {
    BuiltProblem<D> P = build_problem<D>(cfg);
    const SolverConfig& sc = cfg.solver;
    std::vector<int> part = detail::make_aligned_partition(P, sc.n_subdomains, sc.seed);
    std::vector<Subdomain<D>> subs =
        build_subdomains(P.grid, P.surface, part, P.E, sc.n_overlap, true);

    SolverConfig stat = sc, gm = sc;
    stat.mode = SolverConfig::Mode::stationary;
    gm.mode = SolverConfig::Mode::gmres;
    std::vector<std::vector<std::string>> rows;
    for (double alpha : {1.0, 2.0, 4.0, 8.0, 16.0, 1e12}) {
        const bool limit = alpha >= 1e12;
        TransmissionSpec spec{TransmissionSpec::Kind::robin, alpha,
                              std::max(alpha, sc.effective_alpha_cross())};
        SchwarzPreconditioner M = detail::make_preconditioner(P, subs, spec, pool);
        rows.push_back(
            {limit ? "inf" : detail::fmt_real(alpha), detail::iter_cell([&] {
                 return stationary_solve(P.A, P.b, M, sc.rel_tol, effective_max_iter(stat));
             }),
             detail::iter_cell([&] {
                 return gmres_solve(P.A, P.b, &M, sc.rel_tol, effective_max_iter(gm),
                                    sc.gmres_restart);
             })});
    }
    write_study(out_path, {"alpha", "oras_iterations", "oras_gmres_iterations"}, rows);
}

/** Sweep the overlap width; stationary RAS and ORAS iteration counts. */
template <int D>
void study_overlap_sweep(const RunConfig& cfg, const std::string& out_path, ThreadPool* pool) {
    BuiltProblem<D> P = build_problem<D>(cfg);
    const SolverConfig& sc = cfg.solver;
    std::vector<int> part = detail::make_aligned_partition(P, sc.n_subdomains, sc.seed);
    SolverConfig stat = sc;
    stat.mode = SolverConfig::Mode::stationary;
    const int cap = effective_max_iter(stat);
    std::vector<std::vector<std::string>> rows;
    for (int n_o : {2, 4, 8}) {
        std::vector<std::string> row{std::to_string(n_o)};
        for (bool robin : {false, true}) {
            std::vector<Subdomain<D>> subs =
                build_subdomains(P.grid, P.surface, part, P.E, n_o, robin);
            TransmissionSpec spec{robin ? TransmissionSpec::Kind::robin
                                        : TransmissionSpec::Kind::dirichlet,
                                  sc.alpha, sc.effective_alpha_cross()};
            SchwarzPreconditioner M = detail::make_preconditioner(P, subs, spec, pool);
            row.push_back(detail::iter_cell(
                [&] { return stationary_solve(P.A, P.b, M, sc.rel_tol, cap); }));
        }
        rows.push_back(std::move(row));
    }
    write_study(out_path, {"n_overlap", "ras_iterations", "oras_iterations"}, rows);
}

/** Sweep the subdomain count; stationary RAS and ORAS iteration counts. */
template <int D>
void study_nsub_sweep(const RunConfig& cfg, const std::string& out_path, ThreadPool* pool) {
    BuiltProblem<D> P = build_problem<D>(cfg);
    const SolverConfig& sc = cfg.solver;
    SolverConfig stat = sc;
    stat.mode = SolverConfig::Mode::stationary;
    const int cap = effective_max_iter(stat);
    std::vector<std::vector<std::string>> rows;
    for (int n_s : {4, 8, 16}) {
        std::vector<int> part = detail::make_aligned_partition(P, n_s, sc.seed);
        std::vector<std::string> row{std::to_string(n_s)};
        for (bool robin : {false, true}) {
            std::vector<Subdomain<D>> subs =
                build_subdomains(P.grid, P.surface, part, P.E, sc.n_overlap, robin);
            TransmissionSpec spec{robin ? TransmissionSpec::Kind::robin
                                        : TransmissionSpec::Kind::dirichlet,
                                  sc.alpha, sc.effective_alpha_cross()};
            SchwarzPreconditioner M = detail::make_preconditioner(P, subs, spec, pool);
            row.push_back(detail::iter_cell(
                [&] { return stationary_solve(P.A, P.b, M, sc.rel_tol, cap); }));
        }
        rows.push_back(std::move(row));
    }
    write_study(out_path, {"n_subdomains", "ras_iterations", "oras_iterations"}, rows);
}

inline const std::vector<std::string>& study_names() {
    static const std::vector<std::string> names{"arc-robin", "sphere-consistency",
                                                "alpha-sweep", "overlap-sweep", "nsub-sweep"};
    return names;
}

/** Dispatch a study by name; writes study_<name>.csv into the output dir. */
inline void run_study(const std::string& name, const RunConfig& cfg, ThreadPool* pool) {
    const std::string out_path = cfg.output_dir + "/study_" + name + ".csv";
    if (name == "arc-robin") {
        study_arc_robin(cfg, out_path);
    } else if (name == "sphere-consistency") {
        study_sphere_consistency(cfg, out_path);
    } else if (name == "alpha-sweep") {
        if (dimension_of(cfg) == 2)
            study_alpha_sweep<2>(cfg, out_path, pool);
        else
            study_alpha_sweep<3>(cfg, out_path, pool);
    } else if (name == "overlap-sweep") {
        if (dimension_of(cfg) == 2)
            study_overlap_sweep<2>(cfg, out_path, pool);
        else
            study_overlap_sweep<3>(cfg, out_path, pool);
    } else if (name == "nsub-sweep") {
        if (dimension_of(cfg) == 2)
            study_nsub_sweep<2>(cfg, out_path, pool);
        else
            study_nsub_sweep<3>(cfg, out_path, pool);
    } else {
        throw ConfigError("unknown study '" + name + "'");
    }
}

}  // namespace cpdd

#endif  // CPDD_STUDIES_HPP
