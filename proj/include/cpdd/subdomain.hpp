#ifndef CPDD_SUBDOMAIN_HPP
#define CPDD_SUBDOMAIN_HPP

/** Subdomain construction for the domain-decomposition solvers.
 *
 *  Starting from a disjoint partition of the active nodes, each subdomain
 *  grows N_O breadth-first layers of overlap.  The local system couples to
 *  the rest of the band through boundary-condition (BC) nodes: every active
 *  node outside the overlap that the overlapped rows reference, either as a
 *  finite-difference neighbour or through an extension-row stencil.  BC
 *  nodes carry transmission rows instead of equation rows; their anchor on
 *  the local interface is the closest point of the final overlap layer,
 *  which also provides the interface normal used for the Robin conormal. */

#include "cpdd/band.hpp"
#include "cpdd/core.hpp"
#include "cpdd/geometry.hpp"
#include "cpdd/interp.hpp"
#include "cpdd/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cpdd {

/** A node of the local boundary closure. */
template <int D>
struct BoundaryNode {
    Index<D> ix{};
    Vec<D> x = Vec<D>::Zero();
    /** Ring nodes pad the layer around the BC actives; they carry
     *  transmission rows but nothing references them. */
    bool is_ghost_type = false;
    int global_active = -1;  ///< active ordinal, or -1 for non-active ring nodes
    Vec<D> cp = Vec<D>::Zero();        ///< closest point on the surface
    Vec<D> cp_local = Vec<D>::Zero();  ///< anchor on the local interface
    Vec<D> conormal = Vec<D>::Zero();  ///< unit surface-tangential offset direction
    double dq = 0.0;                   ///< tangential offset length (>= 0)
    bool cross_flagged = false;        ///< near a partition cross point
    bool fallback = false;             ///< anchor found by global scan, not local search
};

template <int D>
struct Subdomain {
    int id = 0;
    std::vector<int> disjoint;     ///< owned active ordinals (ascending)
    std::vector<int> overlap;      ///< owned + N_O grown layers (ascending)
    std::vector<int> final_layer;  ///< ordinals added by the last non-empty layer
    std::vector<int> ghosts;       ///< band codes of ghosts adjacent to the overlap
    std::vector<BoundaryNode<D>> bc;  ///< boundary closure, sorted by grid index
    int fallback_count = 0;           ///< anchors that needed the global scan
    int n_lambda = 0;                 ///< interface anchor candidates
};

/** Active nodes whose neighbours span at least two foreign parts. */
template <int D>
std::vector<int> find_cross_points(const BandGrid<D>& grid, const std::vector<int>& part) {
    std::vector<int> cross;
    std::array<Index<D>, 2 * D> around;
    for (int i = 0; i < grid.n_active(); ++i) {
        detail::neighbors_of<D>(grid.active[i].ix, around.data());
        int seen_a = -1, seen_b = -1;
        for (const auto& nb : around) {
            int code = grid.lookup(nb);
            if (code < 0 || !grid.is_active_code(code)) continue;
            int p = part[code];
            if (p == part[i] || p == seen_a || p == seen_b) continue;
            if (seen_a < 0)
                seen_a = p;
            else
                seen_b = p;
        }
        if (seen_b >= 0) cross.push_back(i);
    }
    return cross;
}

namespace detail {

template <int D>
struct LambdaIndex {
    double cell = 1.0;
    std::unordered_map<Index<D>, std::vector<int>, IndexHash<D>> bins;
    std::vector<Vec<D>> points;
    std::vector<Vec<D>> normals;

    Index<D> bin_of(const Vec<D>& q) const {
        Index<D> b;
        for (int a = 0; a < D; ++a) b[a] = static_cast<int>(std::floor(q[a] / cell));
        return b;
    }
    void build(double radius) {
        cell = radius;
        for (int k = 0; k < static_cast<int>(points.size()); ++k)
            bins[bin_of(points[k])].push_back(k);
    }
    /** Nearest anchor within `radius` of x, or -1.  Anchors closer than
     *  `exclude_below` are skipped: an anchor sitting exactly on a lattice
     *  boundary node would make its interpolation stencil the one-hot row of
     *  that very node and the transmission row vacuous. */
    int query(const Vec<D>& x, double radius, double exclude_below = -1.0) const {
        int best = -1;
        double bd = radius;
        Index<D> c = bin_of(x);
        Index<D> off;
        std::fill(off.begin(), off.end(), -1);
        for (;;) {
            Index<D> b;
            for (int a = 0; a < D; ++a) b[a] = c[a] + off[a];
            auto it = bins.find(b);
            if (it != bins.end())
                for (int k : it->second) {
                    double d = (points[k] - x).norm();
                    if (d <= exclude_below) continue;
                    if (d < bd || (d == bd && (best < 0 || k < best))) {
                        bd = d;
                        best = k;
                    }
                }
            int a = 0;
            while (a < D && off[a] == 1) off[a++] = -1;
            if (a == D) break;
            ++off[a];
        }
        return best;
    }
    int global_argmin(const Vec<D>& x, double exclude_below = -1.0) const {
        int best = -1;
        double bd = std::numeric_limits<double>::infinity();
        for (int k = 0; k < static_cast<int>(points.size()); ++k) {
            double d = (points[k] - x).norm();
            if (d <= exclude_below) continue;
            if (d < bd) {
                bd = d;
                best = k;
            }
        }
        return best;
    }
};

}  // namespace detail

/** Build all subdomains for a partition.
 *
 *  @param E           global extension operator (rows indexed by band code)
 *  @param n_overlap   number of BFS overlap layers (>= 1)
 *  @param robin_ring  add the ghost-type ring around BC actives (Robin only)
 */
template <int D>
std::vector<Subdomain<D>> build_subdomains(const BandGrid<D>& grid, const Surface<D>& surface,
                                           const std::vector<int>& part,
                                           const SparseOperator& E, int n_overlap,
                                           bool robin_ring) {
    if (n_overlap < 1) throw ConfigError("overlap width must be at least 1 layer");
    if (static_cast<int>(part.size()) != grid.n_active())
        throw InternalError("partition size does not match grid");
    const int n_parts = *std::max_element(part.begin(), part.end()) + 1;
    const double anchor_radius = stencil_reach<D>(grid.h, grid.p) + grid.h;

    std::vector<int> cross = find_cross_points<D>(grid, part);
    std::vector<Vec<D>> cross_x;
    cross_x.reserve(cross.size());
    for (int i : cross) cross_x.push_back(grid.active[i].x);
    const double cross_radius = 2.0 * n_overlap * grid.h;

    std::vector<Subdomain<D>> subs(n_parts);
    std::array<Index<D>, 2 * D> around;
    for (int j = 0; j < n_parts; ++j) {
        Subdomain<D>& S = subs[j];
        S.id = j;
        for (int i = 0; i < grid.n_active(); ++i)
            if (part[i] == j) S.disjoint.push_back(i);

        // ---- overlap: N_O breadth-first layers over active axis neighbours
        std::unordered_set<int> in_overlap(S.disjoint.begin(), S.disjoint.end());
        std::vector<int> frontier = S.disjoint, last_layer;
        for (int layer = 0; layer < n_overlap; ++layer) {
            std::vector<int> next;
            for (int i : frontier) {
                detail::neighbors_of<D>(grid.active[i].ix, around.data());
                for (const auto& nb : around) {
                    int code = grid.lookup(nb);
                    if (code < 0 || !grid.is_active_code(code)) continue;
                    if (in_overlap.insert(code).second) next.push_back(code);
                }
            }
            if (!next.empty()) last_layer = next;
            frontier = std::move(next);
            if (frontier.empty()) break;  // subdomain saturated the band
        }
        S.overlap.assign(in_overlap.begin(), in_overlap.end());
        std::sort(S.overlap.begin(), S.overlap.end());
        S.final_layer = std::move(last_layer);
        std::sort(S.final_layer.begin(), S.final_layer.end());

        // ---- ghosts adjacent to the overlap, and directly referenced actives
        std::unordered_set<int> ghost_set, bc_set;
        std::vector<int> fd_completion;
        for (int i : S.overlap) {
            detail::neighbors_of<D>(grid.active[i].ix, around.data());
            for (const auto& nb : around) {
                int code = grid.lookup(nb);
                if (code < 0) throw InternalError("band closure missed a neighbour");
                if (grid.is_active_code(code)) {
                    if (!in_overlap.count(code) && bc_set.insert(code).second)
                        fd_completion.push_back(code);
                } else {
                    ghost_set.insert(code);
                }
            }
        }
        // ---- extension-row references.  Local equation rows are the global
        // Helmholtz rows, which inline the extension rows of every axis
        // neighbour; the referenced columns therefore come from the stencils
        // of the overlap nodes, their ghosts, and the finite-difference
        // completion actives just outside the overlap.
        auto add_row_refs = [&](int band_code) {
            for (int col : E.row_cols(band_code))
                if (!in_overlap.count(col)) bc_set.insert(col);
        };
        for (int i : S.overlap) add_row_refs(i);
        for (int g : ghost_set) add_row_refs(g);
        for (int b : fd_completion) add_row_refs(b);
        S.ghosts.assign(ghost_set.begin(), ghost_set.end());
        std::sort(S.ghosts.begin(), S.ghosts.end());

        for (int b : bc_set) {
            BoundaryNode<D> node;
            node.ix = grid.active[b].ix;
            node.x = grid.active[b].x;
            node.global_active = b;
            node.cp = grid.active[b].cp.cp;
            S.bc.push_back(node);
        }

        // ---- ghost-type ring: pad one neighbour layer around the BC actives
        if (robin_ring) {
            std::unordered_set<Index<D>, IndexHash<D>> ring_seen;
            std::vector<BoundaryNode<D>> ring;
            for (int b : bc_set) {
                detail::neighbors_of<D>(grid.active[b].ix, around.data());
                for (const auto& nb : around) {
                    int code = grid.lookup(nb);
                    if (code >= 0 && grid.is_active_code(code) &&
                        (in_overlap.count(code) || bc_set.count(code)))
                        continue;
                    if (code >= 0 && !grid.is_active_code(code) && ghost_set.count(code))
                        continue;
                    if (!ring_seen.insert(nb).second) continue;
                    BoundaryNode<D> node;
                    node.ix = nb;
                    node.is_ghost_type = true;
                    if (code >= 0) {
                        node.x = grid.node(code).x;
                        node.cp = grid.node(code).cp.cp;
                        node.global_active = grid.is_active_code(code) ? code : -1;
                    } else {
                        node.x = index_to_point<D>(nb, grid.h, grid.origin);
                        node.cp = surface.closest_point(node.x).cp;
                    }
                    ring.push_back(node);
                }
            }
            S.bc.insert(S.bc.end(), ring.begin(), ring.end());
        }
        std::sort(S.bc.begin(), S.bc.end(), [](const BoundaryNode<D>& a, const BoundaryNode<D>& b) {
            return a.ix < b.ix;
        });

        // ---- interface anchors: closest points of the final overlap layer
        detail::LambdaIndex<D> lambda;
        for (int i : S.final_layer) {
            lambda.points.push_back(grid.active[i].cp.cp);
            lambda.normals.push_back(grid.active[i].cp.normal);
        }
        S.n_lambda = static_cast<int>(lambda.points.size());
        if (!S.bc.empty() && lambda.points.empty())
            throw InternalError("subdomain has boundary nodes but no interface anchors");
        lambda.build(anchor_radius);
        // A grid node lying exactly on the surface can appear in the anchor
        // set itself; keep it out of its own anchor search.
        const double anchor_exclusion = 1e-12 * grid.h;
        for (BoundaryNode<D>& node : S.bc) {
            int k = lambda.query(node.x, anchor_radius, anchor_exclusion);
            if (k < 0) {
                k = lambda.global_argmin(node.x, anchor_exclusion);
                node.fallback = true;
                ++S.fallback_count;
            }
            if (k < 0)
                throw InternalError("no usable interface anchor for a boundary node");
            node.cp_local = lambda.points[k];
            Vec<D> d = node.x - node.cp_local;
            const Vec<D>& nrm = lambda.normals[k];
            Vec<D> tang = d - d.dot(nrm) * nrm;
            double tn = tang.norm();
            if (tn > 1e-12 * d.norm()) {
                node.conormal = tang / tn;
                node.dq = tn;
            }  // else: offset is purely normal; treat as zero tangential gap
            for (const Vec<D>& cx : cross_x)
                if ((node.x - cx).norm() <= cross_radius) {
                    node.cross_flagged = true;
                    break;
                }
        }
    }
    return subs;
}

}  // namespace cpdd

#endif  // CPDD_SUBDOMAIN_HPP
