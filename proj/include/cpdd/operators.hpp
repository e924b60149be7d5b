#ifndef CPDD_OPERATORS_HPP
#define CPDD_OPERATORS_HPP

/** Discrete operators of the closest-point discretization:
 *    E     extension operator, one interpolation row per band node
 *          (active and ghost), columns over active nodes;
 *    Dh    second-order centered ambient Laplacian, active rows over
 *          active+ghost columns;
 *    A     stabilized Helmholtz matrix
 *          A = (c + 2d/h^2) I  -  (Dh + (2d/h^2) P) E
 *          where P selects active rows.  Row i works out to
 *          (c + 2d/h^2) e_i - (1/h^2) * sum over axis neighbors k of E_row(k):
 *          the center contributions of Dh and the stabilization shift cancel,
 *          so each neighbor value is replaced by its closest-point
 *          interpolant, never used directly.  Constants are in the kernel of
 *          the resulting surface Laplacian. */

#include "cpdd/band.hpp"
#include "cpdd/core.hpp"
#include "cpdd/interp.hpp"
#include "cpdd/sparse.hpp"

#include <vector>

namespace cpdd {

/** Extension operator E: (N_A + N_G) rows, N_A columns.  Row order matches
 *  the band ordering (actives first, then ghosts).  Every stencil node must
 *  itself be active; a miss means the band construction is broken. */
template <int D>
SparseOperator build_extension(const BandGrid<D>& grid) {
    const int na = grid.n_active();
    const int total = na + grid.n_ghost();
    SparseOperator E(total, na);
    std::vector<Index<D>> nodes;
    std::vector<double> weights;
    std::vector<std::pair<int, double>> row;
    for (std::int64_t code = 0; code < total; ++code) {
        const BandNode<D>& n = grid.node(code);
        interp_stencil<D>(n.cp.cp, grid.h, grid.origin, grid.p, nodes, weights);
        row.clear();
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            std::int64_t c = grid.lookup(nodes[k]);
            if (!grid.is_active_code(c))
                throw InternalError("extension stencil node is not active: band closure violated");
            row.emplace_back(static_cast<int>(c), weights[k]);
        }
        E.append_row(row);
    }
    return E;
}

/** Ambient Laplacian Dh: N_A rows over N_A + N_G columns;
 *  row i = -2d/h^2 at x_i and +1/h^2 at each of the 2d axis neighbors. */
template <int D>
SparseOperator build_ambient_laplacian(const BandGrid<D>& grid) {
    const int na = grid.n_active();
    SparseOperator Dh(na, na + grid.n_ghost());
    const double ih2 = 1.0 / (grid.h * grid.h);
    std::vector<std::pair<int, double>> row;
    Index<D> nbr[2 * D];
    for (int i = 0; i < na; ++i) {
        row.clear();
        row.emplace_back(i, -2.0 * D * ih2);
        detail::neighbors_of<D>(grid.active[i].ix, nbr);
        for (int k = 0; k < 2 * D; ++k) {
            std::int64_t c = grid.lookup(nbr[k]);
            if (c < 0)
                throw InternalError("finite-difference neighbor missing from band");
            row.emplace_back(static_cast<int>(c), ih2);
        }
        Dh.append_row(row);
    }
    return Dh;
}

/** Append -(1/h^2) * E_row(code) for every axis neighbor of active node i
 *  to the scratch row; shared between the global and local assemblies. */
template <int D>
void add_neighbor_extension_terms(const BandGrid<D>& grid, const SparseOperator& E, int i,
                                  std::vector<std::pair<int, double>>& row) {
    const double ih2 = 1.0 / (grid.h * grid.h);
    Index<D> nbr[2 * D];
    detail::neighbors_of<D>(grid.active[i].ix, nbr);
    for (int k = 0; k < 2 * D; ++k) {
        std::int64_t code = grid.lookup(nbr[k]);
        if (code < 0) throw InternalError("finite-difference neighbor missing from band");
        auto cols = E.row_cols(static_cast<int>(code));
        auto vals = E.row_vals(static_cast<int>(code));
        for (std::size_t m = 0; m < cols.size(); ++m)
            row.emplace_back(cols[m], -ih2 * vals[m]);
    }
}

/** Global Helmholtz matrix A (N_A x N_A) for (c - Lap_S) u = f. */
template <int D>
SparseOperator assemble_helmholtz(const BandGrid<D>& grid, const SparseOperator& E, double c) {
    if (c <= 0) throw ConfigError("Helmholtz constant c must be positive");
    if (E.rows() != grid.n_active() + grid.n_ghost() || E.cols() != grid.n_active())
        throw InternalError("extension operator shape does not match the band");
    const int na = grid.n_active();
    const double gamma = 2.0 * D / (grid.h * grid.h);
    SparseOperator A(na, na);
    std::vector<std::pair<int, double>> row;
    for (int i = 0; i < na; ++i) {
        row.clear();
        row.emplace_back(i, c + gamma);
        add_neighbor_extension_terms(grid, E, i, row);
        A.append_row(row);
    }
    return A;
}

/** Stabilized surface Laplacian as its own matrix (for tests/inspection):
 *  Lap_S = -(c I - A) with c = 0 formally; assembled directly. */
template <int D>
SparseOperator assemble_surface_laplacian(const BandGrid<D>& grid, const SparseOperator& E) {
    const int na = grid.n_active();
    const double gamma = 2.0 * D / (grid.h * grid.h);
    SparseOperator L(na, na);
    std::vector<std::pair<int, double>> row;
    for (int i = 0; i < na; ++i) {
        // assemble (0*I - Lap_S) row exactly as assemble_helmholtz with c = 0,
        // then negate
        row.clear();
        row.emplace_back(i, gamma);
        add_neighbor_extension_terms(grid, E, i, row);
        for (auto& [cc, vv] : row) (void)cc, vv = -vv;
        L.append_row(row);
    }
    return L;
}

}  // namespace cpdd

#endif  // CPDD_OPERATORS_HPP
