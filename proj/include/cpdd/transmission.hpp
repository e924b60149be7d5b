#ifndef CPDD_TRANSMISSION_HPP
#define CPDD_TRANSMISSION_HPP

/** Local subdomain operators.
 *
 *  Unknowns are the overlap nodes (in global order) followed by the
 *  boundary-closure nodes (in grid-index order).  Overlap rows are literal
 *  copies of the global stabilized Helmholtz rows with columns relabelled
 *  into the local layout; values at closure nodes are unknowns supplied by
 *  transmission rows instead of equation rows:
 *
 *    Dirichlet:  u_b = 0
 *    Robin:      u_b - interp(cp_local(b)) / (1 + alpha * dq_b) = 0
 *
 *  where dq_b is the tangential offset of the node from its interface
 *  anchor.  With alpha -> infinity the Robin closure degenerates to the
 *  Dirichlet one, and eliminating the then-zero closure values reduces the
 *  overlap block to the plain submatrix of the global operator, which is
 *  what makes the Dirichlet variant coincide with algebraic restricted
 *  additive Schwarz.  The right-hand side of a local solve is the
 *  restricted global residual on the overlap block and zero on the closure
 *  block, so the local solution is a correction and homogeneous closures
 *  are exact. */

#include "cpdd/band.hpp"
#include "cpdd/core.hpp"
#include "cpdd/direct.hpp"
#include "cpdd/interp.hpp"
#include "cpdd/sparse.hpp"
#include "cpdd/subdomain.hpp"

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cpdd {

struct TransmissionSpec {
    enum class Kind { dirichlet, robin };
    Kind kind = Kind::robin;
    double alpha = 1.0;
    double alpha_cross = 1.0;  ///< replaces alpha on cross-flagged nodes
};

/** Factored local system of one subdomain plus its scatter maps. */
struct LocalOperator {
    int id = 0;
    int n_overlap = 0;
    int n_bc = 0;
    std::vector<int> overlap;  ///< global ordinal of each overlap row
    std::vector<std::pair<int, int>> scatter;  ///< (local col, global ordinal), disjoint only
    SparseOperator A{0, 0};
    DirectSolver lu;

    int n_local() const { return n_overlap + n_bc; }

    /** Restrict a global residual: overlap block from r, closure block zero. */
    Eigen::VectorXd restrict_residual(const Eigen::VectorXd& r) const {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n_local());
        for (int k = 0; k < n_overlap; ++k) b[k] = r[overlap[k]];
        return b;
    }

    /** Solve and add the owned part of the correction into z. */
    void accumulate_correction(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
        Eigen::VectorXd zl = lu.solve(restrict_residual(r));
        for (const auto& [local, global] : scatter) z[global] += zl[local];
    }
};

template <int D>
LocalOperator assemble_local(const BandGrid<D>& grid, const SparseOperator& A,
                             const Subdomain<D>& S, const TransmissionSpec& spec,
                             bool factor = true) {
    if (A.rows() != grid.n_active() || A.cols() != grid.n_active())
        throw InternalError("global operator shape does not match the band");
    LocalOperator L;
    L.id = S.id;
    L.n_overlap = static_cast<int>(S.overlap.size());
    L.n_bc = static_cast<int>(S.bc.size());
    L.overlap = S.overlap;

    // active global ordinal -> local column (overlap block, then BC actives);
    // ghost-type closure nodes occupy their slot in the BC block but are only
    // ever referenced by their own transmission row
    std::unordered_map<int, int> col_of;
    col_of.reserve(S.overlap.size() + S.bc.size());
    for (int k = 0; k < L.n_overlap; ++k) col_of[S.overlap[k]] = k;
    for (int b = 0; b < L.n_bc; ++b)
        if (!S.bc[b].is_ghost_type && S.bc[b].global_active >= 0)
            col_of[S.bc[b].global_active] = L.n_overlap + b;
    for (int i : S.disjoint) L.scatter.emplace_back(col_of.at(i), i);

    L.A = SparseOperator(L.n_local(), L.n_local());
    std::vector<std::pair<int, double>> row;

    auto local_col = [&](int active_ordinal) {
        auto it = col_of.find(active_ordinal);
        if (it == col_of.end())
            throw InternalError("subdomain closure missed an active reference");
        return it->second;
    };

    for (int k = 0; k < L.n_overlap; ++k) {
        const int i = L.overlap[k];
        row.clear();
        auto cols = A.row_cols(i);
        auto vals = A.row_vals(i);
        for (std::size_t m = 0; m < cols.size(); ++m)
            row.emplace_back(local_col(cols[m]), vals[m]);
        L.A.append_row(row);
    }

    std::vector<Index<D>> snodes;
    std::vector<double> sweights;
    for (int b = 0; b < L.n_bc; ++b) {
        const BoundaryNode<D>& node = S.bc[b];
        row.clear();
        row.emplace_back(L.n_overlap + b, 1.0);
        if (spec.kind == TransmissionSpec::Kind::robin) {
            if (node.dq < 0) throw InternalError("negative tangential offset");
            const double alpha = node.cross_flagged ? spec.alpha_cross : spec.alpha;
            const double s = 1.0 / (1.0 + alpha * node.dq);
            interp_stencil<D>(node.cp_local, grid.h, grid.origin, grid.p, snodes, sweights);
            for (std::size_t m = 0; m < snodes.size(); ++m) {
                int code = grid.lookup(snodes[m]);
                if (code < 0 || !grid.is_active_code(code))
                    throw InternalError("interface anchor stencil leaves the active set");
                row.emplace_back(local_col(code), -s * sweights[m]);
            }
        }
        L.A.append_row(row);
    }

    if (factor) L.lu.factor(L.A, "subdomain " + std::to_string(S.id));
    return L;
}

}  // namespace cpdd

#endif  // CPDD_TRANSMISSION_HPP
