#ifndef CPDD_BAND_HPP
#define CPDD_BAND_HPP

/** Computational band around the surface: the active nodes (unknowns of the
 *  discretization, carrying interpolation stencils) and the ghost nodes
 *  (finite-difference completion, later eliminated through extension rows).
 *
 *  Two constructions are provided.  The tube band takes every lattice node
 *  within the stencil reach (p+1)/2 * sqrt(d) * h of the surface; with the
 *  stencil placement used here that radius guarantees the interpolation
 *  stencil of any active node's closest point stays inside the band (a
 *  safety closure pass enforces the guarantee exactly).  The algorithmic
 *  band instead grows the closure of closest-point stencils directly and is
 *  never larger. */

#include "cpdd/core.hpp"
#include "cpdd/geometry.hpp"
#include "cpdd/interp.hpp"

#include <algorithm>
#include <deque>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cpdd {

template <int D>
struct BandNode {
    Index<D> ix;
    Vec<D> x;
    CpResult<D> cp;
};

template <int D>
struct BandGrid {
    double h = 0;
    int p = 0;
    Vec<D> origin = Vec<D>::Zero();
    double tube_radius = 0;                  ///< active-node distance bound (tube mode)
    std::vector<BandNode<D>> active;         ///< lexicographic by lattice index
    std::vector<BandNode<D>> ghost;          ///< lexicographic by lattice index
    /// lattice index -> code: active ordinal k, or n_active + k for ghost k
    std::unordered_map<Index<D>, std::int64_t, IndexHash<D>> index_map;
    bool tube_radius_warning = false;        ///< band wider than 1/curvature bound

    int n_active() const { return static_cast<int>(active.size()); }
    int n_ghost() const { return static_cast<int>(ghost.size()); }

    /** -1 if absent, else the band-wide code (active first, then ghosts). */
    std::int64_t lookup(const Index<D>& ix) const {
        auto it = index_map.find(ix);
        return it == index_map.end() ? -1 : it->second;
    }
    bool is_active_code(std::int64_t code) const { return code >= 0 && code < n_active(); }
    const BandNode<D>& node(std::int64_t code) const {
        return code < n_active() ? active[code] : ghost[code - n_active()];
    }
};

namespace detail {

/** Fill out[0..2D) with the axis neighbours of ix.  Call with an explicit
 *  dimension argument: neighbors_of<D>(ix, buf). */
template <int D>
void neighbors_of(const NoDeduce<Index<D>>& ix, NoDeduce<Index<D>>* out) {
    for (int a = 0; a < D; ++a) {
        Index<D> m = ix, p = ix;
        m[a] -= 1;
        p[a] += 1;
        out[2 * a] = m;
        out[2 * a + 1] = p;
    }
}

/** Sort nodes lexicographically, rebuild the index map, and attach ghosts. */
template <int D>
void finalize_band(const Surface<D>& surface, BandGrid<D>& grid,
                   NoDeduce<std::unordered_map<Index<D>, CpResult<D>, IndexHash<D>>>& actives) {
    grid.active.clear();
    grid.active.reserve(actives.size());
    for (auto& [ix, cp] : actives)
        grid.active.push_back({ix, index_to_point(ix, grid.h, grid.origin), cp});
    std::sort(grid.active.begin(), grid.active.end(),
              [](const BandNode<D>& a, const BandNode<D>& b) { return a.ix < b.ix; });

    // ghosts: lattice neighbors of active nodes that are not active themselves
    std::unordered_set<Index<D>, IndexHash<D>> ghost_set;
    Index<D> nbr[2 * D];
    for (const auto& n : grid.active) {
        neighbors_of<D>(n.ix, nbr);
        for (int k = 0; k < 2 * D; ++k)
            if (!actives.count(nbr[k])) ghost_set.insert(nbr[k]);
    }
    grid.ghost.clear();
    grid.ghost.reserve(ghost_set.size());
    for (const auto& ix : ghost_set) {
        Vec<D> x = index_to_point(ix, grid.h, grid.origin);
        grid.ghost.push_back({ix, x, surface.closest_point(x)});
    }
    std::sort(grid.ghost.begin(), grid.ghost.end(),
              [](const BandNode<D>& a, const BandNode<D>& b) { return a.ix < b.ix; });

    grid.index_map.clear();
    grid.index_map.reserve(grid.active.size() + grid.ghost.size());
    for (std::int64_t k = 0; k < grid.n_active(); ++k)
        grid.index_map[grid.active[k].ix] = k;
    for (std::int64_t k = 0; k < grid.n_ghost(); ++k)
        grid.index_map[grid.ghost[k].ix] = grid.n_active() + k;

    // validity warning: the closest-point map is only single-valued within
    // 1/kappa of the surface
    if (auto kappa = surface.curvature_bound()) {
        double ghost_reach = grid.tube_radius + std::sqrt(double(D)) * grid.h;
        if (*kappa > 0 && ghost_reach >= 1.0 / *kappa) grid.tube_radius_warning = true;
    }
}

/** Make the active set closed under closest-point interpolation stencils:
 *  any stencil node of any active node's CP that is missing becomes active.
 *  With the tube radius above this is a no-op for exact CP functions; it
 *  protects against boundary-of-tube rounding and triangulated CP fields. */
template <int D>
void close_stencils(const Surface<D>& surface, double h, const Vec<D>& origin, int p,
                    NoDeduce<std::unordered_map<Index<D>, CpResult<D>, IndexHash<D>>>& actives) {
    std::vector<Index<D>> nodes;
    std::vector<double> weights;
    std::deque<Index<D>> work;
    for (const auto& [ix, cp] : actives) work.push_back(ix);
    while (!work.empty()) {
        Index<D> ix = work.front();
        work.pop_front();
        interp_stencil<D>(actives.at(ix).cp, h, origin, p, nodes, weights);
        for (const auto& s : nodes) {
            if (actives.count(s)) continue;
            Vec<D> x = index_to_point(s, h, origin);
            actives.emplace(s, surface.closest_point(x));
            work.push_back(s);
        }
    }
}

}  // namespace detail

/** Tube construction: flood fill over lattice nodes within distance
 *  (p+1)/2 * sqrt(d) * h of the surface, starting from a seed node next to a
 *  surface sample (no bounding-box scan), followed by the stencil closure
 *  pass and ghost completion. */
template <int D>
BandGrid<D> build_band_tube(const Surface<D>& surface, double h, int p) {
    if (h <= 0) throw ConfigError("grid spacing h must be positive");
    if (p < 1) throw ConfigError("interpolation degree must be at least 1");
    BandGrid<D> grid;
    grid.h = h;
    grid.p = p;
    grid.tube_radius = stencil_reach<D>(h, p);

    std::unordered_map<Index<D>, CpResult<D>, IndexHash<D>> actives;
    std::unordered_set<Index<D>, IndexHash<D>> seen;
    std::deque<Index<D>> work;
    Index<D> seed = nearest_node<D>(surface.sample_point(), h, grid.origin);
    work.push_back(seed);
    seen.insert(seed);
    Index<D> nbr[2 * D];
    while (!work.empty()) {
        Index<D> ix = work.front();
        work.pop_front();
        Vec<D> x = index_to_point(ix, h, grid.origin);
        CpResult<D> cp = surface.closest_point(x);
        if (cp.dist > grid.tube_radius) continue;
        actives.emplace(ix, cp);
        detail::neighbors_of<D>(ix, nbr);
        for (int k = 0; k < 2 * D; ++k)
            if (seen.insert(nbr[k]).second) work.push_back(nbr[k]);
    }
    if (actives.empty())
        throw ConfigError("band is empty: grid spacing too large for the surface");
    detail::close_stencils(surface, h, grid.origin, p, actives);
    detail::finalize_band(surface, grid, actives);
    return grid;
}

/** Algorithmic construction: breadth-first closure of closest-point
 *  interpolation stencils.  Active nodes are exactly the nodes referenced by
 *  some stencil; the result is closed by construction and never larger than
 *  the tube band. */
template <int D>
BandGrid<D> build_band_algorithmic(const Surface<D>& surface, double h, int p) {
    if (h <= 0) throw ConfigError("grid spacing h must be positive");
    if (p < 1) throw ConfigError("interpolation degree must be at least 1");
    BandGrid<D> grid;
    grid.h = h;
    grid.p = p;
    grid.tube_radius = stencil_reach<D>(h, p);

    std::unordered_map<Index<D>, CpResult<D>, IndexHash<D>> actives;
    std::vector<Index<D>> nodes;
    std::vector<double> weights;
    std::deque<Index<D>> work;

    // seed with the stencil of the closest point of a node beside the surface
    Index<D> seed = nearest_node<D>(surface.sample_point(), h, grid.origin);
    CpResult<D> seed_cp = surface.closest_point(index_to_point(seed, h, grid.origin));
    interp_stencil<D>(seed_cp.cp, h, grid.origin, p, nodes, weights);
    for (const auto& s : nodes) {
        Vec<D> x = index_to_point(s, h, grid.origin);
        if (actives.emplace(s, surface.closest_point(x)).second) work.push_back(s);
    }
    while (!work.empty()) {
        Index<D> ix = work.front();
        work.pop_front();
        interp_stencil<D>(actives.at(ix).cp, h, grid.origin, p, nodes, weights);
        for (const auto& s : nodes) {
            if (actives.count(s)) continue;
            Vec<D> x = index_to_point(s, h, grid.origin);
            actives.emplace(s, surface.closest_point(x));
            work.push_back(s);
        }
    }
    if (actives.empty())
        throw ConfigError("band is empty: grid spacing too large for the surface");
    detail::finalize_band(surface, grid, actives);
    return grid;
}

// ------------------------------------------------------------------- stats

template <int D>
struct BandStats {
    int n_active = 0;
    int n_ghost = 0;
    Vec<D> bbox_lo = Vec<D>::Zero();
    Vec<D> bbox_hi = Vec<D>::Zero();
    double min_dist = 0;       ///< over active nodes
    double max_dist = 0;       ///< over active nodes
    double max_ghost_dist = 0;
    double tube_radius = 0;
    bool tube_radius_warning = false;
};

template <int D>
BandStats<D> band_stats(const BandGrid<D>& grid) {
    BandStats<D> s;
    s.n_active = grid.n_active();
    s.n_ghost = grid.n_ghost();
    s.tube_radius = grid.tube_radius;
    s.tube_radius_warning = grid.tube_radius_warning;
    if (!grid.active.empty()) {
        s.bbox_lo = s.bbox_hi = grid.active[0].x;
        s.min_dist = s.max_dist = grid.active[0].cp.dist;
        for (const auto& n : grid.active) {
            s.bbox_lo = s.bbox_lo.cwiseMin(n.x);
            s.bbox_hi = s.bbox_hi.cwiseMax(n.x);
            s.min_dist = std::min(s.min_dist, n.cp.dist);
            s.max_dist = std::max(s.max_dist, n.cp.dist);
        }
    }
    for (const auto& n : grid.ghost) s.max_ghost_dist = std::max(s.max_ghost_dist, n.cp.dist);
    return s;
}

}  // namespace cpdd

#endif  // CPDD_BAND_HPP
