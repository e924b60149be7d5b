#ifndef CPDD_SOLVE_HPP
#define CPDD_SOLVE_HPP

/** Schwarz solvers for the global band system.
 *
 *  The preconditioner applies every factored local operator to the
 *  restricted residual and scatters back only the owned (disjoint) part of
 *  each correction.  Used directly that is a stationary iteration
 *  u <- u + M^{-1} r; alternatively M preconditions restarted GMRES from
 *  the right.  Residual histories always include the initial residual. */

#include "cpdd/core.hpp"
#include "cpdd/parallel.hpp"
#include "cpdd/sparse.hpp"
#include "cpdd/transmission.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace cpdd {

struct SolverConfig {
    enum class Method { ras, oras };
    enum class Mode { stationary, gmres };
    Method method = Method::oras;
    Mode mode = Mode::stationary;
    double rel_tol = 1e-6;
    int max_iter = 5000;     ///< 5000 for stationary runs, 2000 for GMRES
    int gmres_restart = 0;   ///< 0 disables restarting
    double c = 1.0;
    int n_overlap = 4;
    int n_subdomains = 4;
    double alpha = 1.0;
    double alpha_cross = -1.0;  ///< < 0 means "same as alpha"
    unsigned seed = 0;

    double effective_alpha_cross() const { return alpha_cross < 0 ? alpha : alpha_cross; }
    bool robin() const { return method == Method::oras; }
};

struct PhaseTimings {
    double mesh = 0;             ///< band, graph, partition, subdomain geometry
    double global_matrix = 0;    ///< extension and Helmholtz assembly
    double local_operators = 0;  ///< local assembly and factorizations
    double solve = 0;            ///< iteration loop
};

struct IterationLog {
    std::vector<double> residuals;  ///< 2-norms, starting with the initial residual
    int iterations = 0;             ///< preconditioner applications
    bool converged = false;
    double final_true_residual = -1;  ///< recomputed ||b - A u|| at exit
    PhaseTimings timings;
};

struct SolveResult {
    Eigen::VectorXd u;
    IterationLog log;
};

/** Additive Schwarz application: corrections land in disjoint slots, so the
 *  per-subdomain tasks write to a shared vector without collisions. */
class SchwarzPreconditioner {
  public:
    SchwarzPreconditioner(std::vector<LocalOperator> locals, int n_global, ThreadPool* pool)
        : locals_(std::move(locals)), n_global_(n_global), pool_(pool) {}

    Eigen::VectorXd apply(const Eigen::VectorXd& r) const {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(n_global_);
        auto task = [&](int j) { locals_[j].accumulate_correction(r, z); };
        if (pool_)
            pool_->run_batch(static_cast<int>(locals_.size()), task);
        else
            for (std::size_t j = 0; j < locals_.size(); ++j) task(static_cast<int>(j));
        return z;
    }

    const std::vector<LocalOperator>& locals() const { return locals_; }
    int n_global() const { return n_global_; }

  private:
    std::vector<LocalOperator> locals_;
    int n_global_;
    ThreadPool* pool_;
};

namespace detail {
inline void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw DivergenceError(std::string(what) + " is not finite");
}
}  // namespace detail

/** Stationary Schwarz iteration u <- u + M^{-1}(b - A u). */
inline SolveResult stationary_solve(const SparseOperator& A, const Eigen::VectorXd& b,
                                    const SchwarzPreconditioner& M, double rel_tol,
                                    int max_iter) {
    SolveResult out;
    out.u = Eigen::VectorXd::Zero(A.rows());
    Eigen::VectorXd r = b;
    const double r0 = r.norm();
    out.log.residuals.push_back(r0);
    if (r0 == 0.0) {
        out.log.converged = true;
        out.log.final_true_residual = 0;
        return out;
    }
    for (int n = 1; n <= max_iter; ++n) {
        out.u += M.apply(r);
        r = b - A.apply(out.u);
        const double rn = r.norm();
        detail::check_finite(rn, "stationary residual");
        out.log.residuals.push_back(rn);
        out.log.iterations = n;
        if (rn > 1e8 * r0) throw DivergenceError("stationary iteration diverged");
        if (rn <= rel_tol * r0) {
            out.log.converged = true;
            break;
        }
    }
    out.log.final_true_residual = (b - A.apply(out.u)).norm();
    return out;
}

/** Right-preconditioned GMRES with modified Gram-Schmidt and Givens
 *  rotations.  Pass M = nullptr for plain GMRES.  The rotated residual
 *  estimate drives convergence; the true residual is recomputed at exit. */
inline SolveResult gmres_solve(const SparseOperator& A, const Eigen::VectorXd& b,
                               const SchwarzPreconditioner* M, double rel_tol, int max_iter,
                               int restart = 0) {
    SolveResult out;
    const int n = A.rows();
    out.u = Eigen::VectorXd::Zero(n);
    auto precond = [&](const Eigen::VectorXd& v) { return M ? M->apply(v) : v; };

    Eigen::VectorXd r = b;
    const double beta0 = r.norm();
    out.log.residuals.push_back(beta0);
    if (beta0 == 0.0) {
        out.log.converged = true;
        out.log.final_true_residual = 0;
        return out;
    }
    const double target = rel_tol * beta0;
    const int cycle = restart > 0 ? restart : max_iter;
    int total = 0;

    while (total < max_iter && !out.log.converged) {
        const double beta = r.norm();
        detail::check_finite(beta, "gmres residual");
        if (beta <= target) {
            out.log.converged = true;
            break;
        }
        std::vector<Eigen::VectorXd> V{r / beta};
        std::vector<std::vector<double>> H;  // columns of the Hessenberg matrix
        std::vector<double> cs, sn, g{beta};
        int m = 0;
        bool breakdown = false;
        while (m < cycle && total < max_iter) {
            Eigen::VectorXd w = A.apply(precond(V[m]));
            const double wnorm0 = w.norm();
            std::vector<double> h(m + 2, 0.0);
            for (int i = 0; i <= m; ++i) {
                h[i] = V[i].dot(w);
                w -= h[i] * V[i];
            }
            h[m + 1] = w.norm();
            const double subdiag = h[m + 1];
            detail::check_finite(subdiag, "gmres basis norm");
            // previous rotations, then a new one to zero the subdiagonal
            for (int i = 0; i < m; ++i) {
                const double t = cs[i] * h[i] + sn[i] * h[i + 1];
                h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
                h[i] = t;
            }
            const double denom = std::hypot(h[m], h[m + 1]);
            cs.push_back(denom == 0 ? 1.0 : h[m] / denom);
            sn.push_back(denom == 0 ? 0.0 : h[m + 1] / denom);
            h[m] = denom;
            g.push_back(-sn[m] * g[m]);
            g[m] = cs[m] * g[m];
            H.push_back(std::move(h));
            ++m;
            ++total;
            const double est = std::abs(g[m]);
            detail::check_finite(est, "gmres residual estimate");
            out.log.residuals.push_back(est);
            out.log.iterations = total;
            if (subdiag <= 1e-14 * wnorm0) breakdown = true;  // happy breakdown
            if (est <= target || breakdown) {
                out.log.converged = true;
                break;
            }
            V.push_back(w / subdiag);
        }
        if (m > 0) {
            // back-substitute y from the rotated system, then u += M^{-1}(V y)
            std::vector<double> y(m, 0.0);
            for (int i = m - 1; i >= 0; --i) {
                double s = g[i];
                for (int k = i + 1; k < m; ++k) s -= H[k][i] * y[k];
                if (H[i][i] == 0.0) throw DivergenceError("gmres encountered a singular projection");
                y[i] = s / H[i][i];
            }
            Eigen::VectorXd vy = Eigen::VectorXd::Zero(n);
            for (int i = 0; i < m; ++i) vy += y[i] * V[i];
            out.u += precond(vy);
        }
        r = b - A.apply(out.u);
    }
    out.log.final_true_residual = (b - A.apply(out.u)).norm();
    return out;
}

}  // namespace cpdd

#endif  // CPDD_SOLVE_HPP
