#ifndef CPDD_PIPELINE_HPP
#define CPDD_PIPELINE_HPP

/** End-to-end orchestration: configuration -> surface -> band -> operators
 *  -> partition -> subdomains -> solve, with per-phase wall times.  Phase
 *  attribution: everything geometric (band, graph, partition, alignment,
 *  subdomain closure) counts as "mesh"; extension plus Helmholtz assembly
 *  as "global_matrix"; local assembly and factorization as
 *  "local_operators"; the iteration loop as "solve". */

#include "cpdd/band.hpp"
#include "cpdd/config.hpp"
#include "cpdd/core.hpp"
#include "cpdd/geometry.hpp"
#include "cpdd/operators.hpp"
#include "cpdd/parallel.hpp"
#include "cpdd/partition.hpp"
#include "cpdd/problems.hpp"
#include "cpdd/solve.hpp"
#include "cpdd/subdomain.hpp"
#include "cpdd/transmission.hpp"

#include <chrono>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cpdd {

class StopWatch {
  public:
    /** Seconds since construction or the previous lap. */
    double lap() {
        auto now = std::chrono::steady_clock::now();
        double s = std::chrono::duration<double>(now - t_).count();
        t_ = now;
        return s;
    }

  private:
    std::chrono::steady_clock::time_point t_ = std::chrono::steady_clock::now();
};

template <int D>
Surface<D> make_surface(const RunConfig& cfg) {
    std::optional<double> curv;
    if (cfg.curvature_bound > 0) curv = cfg.curvature_bound;
    if constexpr (D == 2) {
        if (cfg.surface == "circle") return Surface<2>(Circle{cfg.radius}, curv);
        if (cfg.surface == "arc")
            return Surface<2>(ArcSeg{cfg.radius, cfg.angle_min, cfg.angle_max}, curv);
    } else {
        if (cfg.surface == "sphere") return Surface<3>(Sphere{cfg.radius}, curv);
        if (cfg.surface == "torus")
            return Surface<3>(Torus{cfg.major_radius, cfg.minor_radius}, curv);
        if (cfg.surface == "obj") {
            TriMesh mesh = TriMesh::load_obj(cfg.obj_path);
            if (cfg.scale_height > 0) mesh.normalize_height(cfg.scale_height);
            return Surface<3>(std::make_shared<const TriMesh>(std::move(mesh)), curv);
        }
    }
    throw ConfigError("surface '" + cfg.surface + "' is not available in " +
                      std::to_string(D) + "D");
}

/** Band, global operators, and right-hand side for one configuration. */
template <int D>
struct BuiltProblem {
    Surface<D> surface;
    BandGrid<D> grid;
    SparseOperator E{0, 0};
    SparseOperator A{0, 0};
    Eigen::VectorXd b;
    std::function<double(const Vec<D>&)> exact;  ///< empty if no closed form
    PhaseTimings timings;

    explicit BuiltProblem(Surface<D> s) : surface(std::move(s)) {}
};

namespace detail {

template <int D>
void resolve_rhs(const RunConfig& cfg, BuiltProblem<D>& P) {
    std::string kind = cfg.rhs;
    if (kind == "auto") {
        if (cfg.surface == "circle")
            kind = "circle-harmonic";
        else if (cfg.surface == "arc")
            kind = "arc";
        else if (cfg.surface == "sphere")
            kind = "sphere-field";
        else
            kind = "ones";
    }
    const double c = cfg.solver.c;
    if (kind == "ones") {
        P.b = Eigen::VectorXd::Ones(P.grid.n_active());
        return;
    }
    if (kind.rfind("file:", 0) == 0) {
        const std::string path = kind.substr(5);
        std::ifstream in(path);
        if (!in) throw IoError("cannot open rhs file: " + path);
        std::vector<double> vals;
        double v;
        while (in >> v) vals.push_back(v);
        if (!in.eof()) throw IoError("malformed rhs file: " + path);
        if (static_cast<int>(vals.size()) != P.grid.n_active())
            throw ConfigError("rhs file has " + std::to_string(vals.size()) +
                              " values but the mesh has " +
                              std::to_string(P.grid.n_active()) + " active nodes");
        P.b = Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
        return;
    }
    if constexpr (D == 2) {
        if (kind == "circle-harmonic") {
            if (cfg.surface != "circle")
                throw ConfigError("rhs circle-harmonic needs surface = circle");
            ManufacturedProblem<2> pb = make_circle_harmonic(cfg.radius, cfg.harmonic, c);
            P.b = sample_at_closest_points(P.grid, pb.rhs);
            P.exact = pb.exact;
            return;
        }
        if (kind == "arc") {
            if (cfg.surface != "arc") throw ConfigError("rhs arc needs surface = arc");
            if (cfg.radius != 1.0 || cfg.angle_min != 0.0 || cfg.angle_max != 2.0)
                throw ConfigError(
                    "the arc test problem is defined on the unit-circle arc [0, 2]");
            auto theta = [](const Vec<2>& cp) { return std::atan2(cp[1], cp[0]); };
            P.b.resize(P.grid.n_active());
            for (int i = 0; i < P.grid.n_active(); ++i)
                P.b[i] = arc_rhs(theta(P.grid.active[i].cp.cp), c);
            P.exact = [theta](const Vec<2>& cp) { return arc_exact(theta(cp)); };
            return;
        }
    } else {
        if (kind == "sphere-field") {
            if (cfg.surface != "sphere")
                throw ConfigError("rhs sphere-field needs surface = sphere");
            ManufacturedProblem<3> pb = make_sphere_field(cfg.radius, c);
            P.b = sample_at_closest_points(P.grid, pb.rhs);
            P.exact = pb.exact;
            return;
        }
    }
    throw ConfigError("unknown rhs '" + cfg.rhs + "' for surface '" + cfg.surface + "'");
}

}  // namespace detail

/** Surface, band, global operators, and right-hand side. */
template <int D>
BuiltProblem<D> build_problem(const RunConfig& cfg) {
    StopWatch watch;
    BuiltProblem<D> P(make_surface<D>(cfg));
    const int p = effective_degree(cfg);
    P.grid = cfg.band == "algorithmic" ? build_band_algorithmic(P.surface, cfg.h, p)
                                       : build_band_tube(P.surface, cfg.h, p);
    P.timings.mesh += watch.lap();
    P.E = build_extension(P.grid);
    P.A = assemble_helmholtz(P.grid, P.E, cfg.solver.c);
    detail::resolve_rhs(cfg, P);
    P.timings.global_matrix += watch.lap();
    return P;
}

template <int D>
struct SolveOutputs {
    Eigen::VectorXd u;
    IterationLog log;  ///< timings filled with the pipeline phases
    std::vector<int> part;
    int align_moves = 0;
    int fallback_anchors = 0;
    double final_relative_residual = -1;
    double err_inf = -1, err_rms = -1;  ///< vs the exact solution, if known
    double diff_direct = -1;            ///< ||u - u_direct||_2 when check_direct
};

/** Decompose, factor, and solve.  The thread pool may be null (serial). */
template <int D>
SolveOutputs<D> run_solve(const RunConfig& cfg, BuiltProblem<D>& P, ThreadPool* pool) {
    StopWatch watch;
    SolveOutputs<D> out;
    const SolverConfig& sc = cfg.solver;

    NodeGraph graph = build_graph(P.grid);
    if (cfg.partition_in.empty()) {
        out.part = partition_graph(graph, sc.n_subdomains, sc.seed);
    } else {
        out.part = load_partition(cfg.partition_in, P.grid.n_active());
        const int np = *std::max_element(out.part.begin(), out.part.end()) + 1;
        if (np != sc.n_subdomains)
            throw ConfigError("partition file defines " + std::to_string(np) +
                              " parts but n_subdomains = " +
                              std::to_string(sc.n_subdomains));
    }
    out.align_moves = align_interfaces(P.grid, out.part, P.grid.p);
    if (!cfg.partition_out.empty()) save_partition(cfg.partition_out, out.part);
    std::vector<Subdomain<D>> subs =
        build_subdomains(P.grid, P.surface, out.part, P.E, sc.n_overlap, sc.robin());
    for (const auto& S : subs) out.fallback_anchors += S.fallback_count;
    P.timings.mesh += watch.lap();

    TransmissionSpec spec;
    spec.kind = sc.robin() ? TransmissionSpec::Kind::robin : TransmissionSpec::Kind::dirichlet;
    spec.alpha = sc.alpha;
    spec.alpha_cross = sc.effective_alpha_cross();
    std::vector<LocalOperator> locals(subs.size());
    auto build_one = [&](int j) { locals[j] = assemble_local(P.grid, P.A, subs[j], spec); };
    if (pool)
        pool->run_batch(static_cast<int>(subs.size()), build_one);
    else
        for (std::size_t j = 0; j < subs.size(); ++j) build_one(static_cast<int>(j));
    P.timings.local_operators += watch.lap();

    SchwarzPreconditioner M(std::move(locals), P.grid.n_active(), pool);
    SolveResult res =
        sc.mode == SolverConfig::Mode::gmres
            ? gmres_solve(P.A, P.b, &M, sc.rel_tol, effective_max_iter(sc), sc.gmres_restart)
            : stationary_solve(P.A, P.b, M, sc.rel_tol, effective_max_iter(sc));
    P.timings.solve += watch.lap();

    out.u = std::move(res.u);
    out.log = std::move(res.log);
    out.log.timings = P.timings;
    const double b0 = P.b.norm();
    out.final_relative_residual = b0 > 0 ? out.log.final_true_residual / b0 : 0.0;
    if (P.exact) {
        out.err_inf = error_inf(P.grid, out.u, P.exact);
        out.err_rms = error_rms(P.grid, out.u, P.exact);
    }
    if (cfg.check_direct) {
        DirectSolver lu;
        lu.factor(P.A, "global system");
        out.diff_direct = (out.u - lu.solve(P.b)).norm();
    }
    return out;
}

}  // namespace cpdd

#endif  // CPDD_PIPELINE_HPP
