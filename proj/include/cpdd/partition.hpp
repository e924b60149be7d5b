#ifndef CPDD_PARTITION_HPP
#define CPDD_PARTITION_HPP

/** Graph partitioning of the active band into N_S parts.
 *
 *  The node graph connects active nodes that are finite-difference axis
 *  neighbours.  Partitioning is multilevel recursive bisection: coarsen by
 *  heavy-edge matching, split the coarsest graph by greedy region growing
 *  from a pseudo-peripheral seed, then refine each level with
 *  Fiduccia-Mattheyses boundary passes.  Each bisection leaves both sides
 *  connected (stray components are reassigned) and within a small weight
 *  tolerance of the target split, so the final parts respect the global
 *  balance bound of 1.1 * N_A / N_S.  All randomness comes from one seeded
 *  generator, so results are reproducible. */

#include "cpdd/band.hpp"
#include "cpdd/core.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace cpdd {

/** Adjacency (CSR) of active band nodes under the 2*D-point stencil. */
struct NodeGraph {
    int n = 0;
    std::vector<int> xadj;  ///< size n+1
    std::vector<int> adj;   ///< neighbour lists, sorted within each row
};

template <int D>
NodeGraph build_graph(const BandGrid<D>& grid) {
    NodeGraph g;
    g.n = grid.n_active();
    g.xadj.assign(g.n + 1, 0);
    std::vector<int> nbrs;
    std::array<Index<D>, 2 * D> around;
    for (int pass = 0; pass < 2; ++pass) {
        if (pass == 1) {
            for (int i = 0; i < g.n; ++i) g.xadj[i + 1] += g.xadj[i];
            g.adj.resize(g.xadj[g.n]);
        }
        std::vector<int> cursor = g.xadj;
        for (int i = 0; i < g.n; ++i) {
            detail::neighbors_of<D>(grid.active[i].ix, around.data());
            for (const auto& nb : around) {
                int code = grid.lookup(nb);
                if (code < 0 || !grid.is_active_code(code)) continue;
                if (pass == 0)
                    ++g.xadj[i + 1];
                else
                    g.adj[cursor[i]++] = code;
            }
        }
    }
    for (int i = 0; i < g.n; ++i)
        std::sort(g.adj.begin() + g.xadj[i], g.adj.begin() + g.xadj[i + 1]);
    return g;
}

namespace detail {

/** Weighted graph used internally by the multilevel scheme. */
struct WGraph {
    std::vector<int> xadj, adj;
    std::vector<double> ew;  ///< edge weights, aligned with adj
    std::vector<double> vw;  ///< vertex weights
    int n() const { return static_cast<int>(vw.size()); }
    double total() const {
        double s = 0;
        for (double w : vw) s += w;
        return s;
    }
};

inline void shuffle_ids(std::vector<int>& v, std::mt19937& rng) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i)
        std::swap(v[i], v[rng() % (i + 1)]);
}

/** Heavy-edge matching.  Returns the number of coarse vertices and fills
 *  cmap (fine -> coarse); coarse ids follow fine vertex order. */
inline int heavy_edge_match(const WGraph& g, std::mt19937& rng, std::vector<int>& cmap) {
    const int n = g.n();
    std::vector<int> match(n, -1), order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    shuffle_ids(order, rng);
    for (int v : order) {
        if (match[v] >= 0) continue;
        int best = -1;
        double bw = -1;
        for (int e = g.xadj[v]; e < g.xadj[v + 1]; ++e) {
            int u = g.adj[e];
            if (u == v || match[u] >= 0) continue;
            if (g.ew[e] > bw || (g.ew[e] == bw && u < best)) {
                bw = g.ew[e];
                best = u;
            }
        }
        match[v] = best >= 0 ? best : v;
        if (best >= 0) match[best] = v;
    }
    cmap.assign(n, -1);
    int nc = 0;
    for (int v = 0; v < n; ++v) {
        if (cmap[v] >= 0) continue;
        cmap[v] = nc;
        if (match[v] != v) cmap[match[v]] = nc;
        ++nc;
    }
    return nc;
}

inline WGraph contract(const WGraph& g, const std::vector<int>& cmap, int nc) {
    WGraph c;
    c.vw.assign(nc, 0.0);
    for (int v = 0; v < g.n(); ++v) c.vw[cmap[v]] += g.vw[v];
    // gather fine members per coarse vertex
    std::vector<int> count(nc + 1, 0);
    for (int v = 0; v < g.n(); ++v) ++count[cmap[v] + 1];
    for (int i = 0; i < nc; ++i) count[i + 1] += count[i];
    std::vector<int> members(g.n());
    {
        std::vector<int> cur(count.begin(), count.end() - 1);
        for (int v = 0; v < g.n(); ++v) members[cur[cmap[v]]++] = v;
    }
    c.xadj.assign(nc + 1, 0);
    std::vector<double> acc(nc, 0.0);
    std::vector<int> touched;
    for (int cv = 0; cv < nc; ++cv) {
        touched.clear();
        for (int m = count[cv]; m < count[cv + 1]; ++m) {
            int v = members[m];
            for (int e = g.xadj[v]; e < g.xadj[v + 1]; ++e) {
                int cu = cmap[g.adj[e]];
                if (cu == cv) continue;
                if (acc[cu] == 0.0) touched.push_back(cu);
                acc[cu] += g.ew[e];
            }
        }
        std::sort(touched.begin(), touched.end());
        c.xadj[cv + 1] = c.xadj[cv] + static_cast<int>(touched.size());
        for (int cu : touched) {
            c.adj.push_back(cu);
            c.ew.push_back(acc[cu]);
            acc[cu] = 0.0;
        }
    }
    return c;
}

/** Farthest vertex from src by breadth-first level (ties -> smallest id). */
inline int bfs_far(const WGraph& g, int src) {
    std::vector<int> dist(g.n(), -1), q;
    dist[src] = 0;
    q.push_back(src);
    int far = src;
    for (std::size_t head = 0; head < q.size(); ++head) {
        int v = q[head];
        if (dist[v] > dist[far]) far = v;
        for (int e = g.xadj[v]; e < g.xadj[v + 1]; ++e)
            if (dist[g.adj[e]] < 0) {
                dist[g.adj[e]] = dist[v] + 1;
                q.push_back(g.adj[e]);
            }
    }
    return far;
}

/** Greedy growing from a pseudo-peripheral seed: side 0 absorbs the
 *  unassigned vertex most strongly connected to it until it reaches the
 *  target weight. */
inline void initial_bisection(const WGraph& g, double frac, std::mt19937& rng,
                              std::vector<char>& side) {
    const int n = g.n();
    side.assign(n, 1);
    if (n <= 1) {
        if (n == 1) side[0] = 0;
        return;
    }
    int seed = bfs_far(g, bfs_far(g, static_cast<int>(rng() % n)));
    const double target = frac * g.total();
    std::vector<double> conn(n, 0.0);
    std::vector<char> in0(n, 0);
    double w0 = 0;
    int assigned = 0, next = seed;
    while (w0 < target && assigned < n - 1) {
        int v = next;
        in0[v] = 1;
        side[v] = 0;
        w0 += g.vw[v];
        ++assigned;
        for (int e = g.xadj[v]; e < g.xadj[v + 1]; ++e)
            if (!in0[g.adj[e]]) conn[g.adj[e]] += g.ew[e];
        next = -1;
        double best = -1;
        for (int u = 0; u < n; ++u)
            if (!in0[u] && conn[u] > best) {
                best = conn[u];
                next = u;
            }
        if (next < 0 || best <= 0.0) {  // disconnected remainder
            for (int u = 0; u < n; ++u)
                if (!in0[u]) {
                    next = u;
                    break;
                }
        }
        if (next < 0) break;
    }
}

/** One Fiduccia-Mattheyses refinement: greedy single-vertex moves with the
 *  best-prefix rollback, keeping side 0 within `slack` of its target weight
 *  and never emptying a side.  Returns true if the cut strictly improved. */
inline bool fm_pass(const WGraph& g, std::vector<char>& side, double target0, double slack) {
    const int n = g.n();
    double w0 = 0;
    int n0 = 0;
    for (int v = 0; v < n; ++v)
        if (side[v] == 0) {
            w0 += g.vw[v];
            ++n0;
        }
    std::vector<char> locked(n, 0);
    std::vector<int> moves;
    double cum = 0, best = 0;
    std::size_t best_prefix = 0;
    const int move_cap = std::max(64, n / 4);
    while (static_cast<int>(moves.size()) < move_cap) {
        int pick = -1;
        double pick_gain = -std::numeric_limits<double>::infinity();
        for (int v = 0; v < n; ++v) {
            if (locked[v]) continue;
            double internal = 0, external = 0;
            for (int e = g.xadj[v]; e < g.xadj[v + 1]; ++e)
                (side[g.adj[e]] == side[v] ? internal : external) += g.ew[e];
            if (external == 0.0) continue;  // not a boundary vertex
            double w0_new = side[v] == 0 ? w0 - g.vw[v] : w0 + g.vw[v];
            int n0_new = side[v] == 0 ? n0 - 1 : n0 + 1;
            if (n0_new == 0 || n0_new == n) continue;
            if (std::abs(w0_new - target0) > slack &&
                std::abs(w0_new - target0) >= std::abs(w0 - target0))
                continue;
            double gain = external - internal;
            if (gain > pick_gain) {
                pick_gain = gain;
                pick = v;
            }
        }
        if (pick < 0) break;
        w0 += side[pick] == 0 ? -g.vw[pick] : g.vw[pick];
        n0 += side[pick] == 0 ? -1 : 1;
        side[pick] = 1 - side[pick];
        locked[pick] = 1;
        moves.push_back(pick);
        cum += pick_gain;
        if (cum > best + 1e-12) {
            best = cum;
            best_prefix = moves.size();
        }
    }
    for (std::size_t m = moves.size(); m > best_prefix; --m) {
        int v = moves[m - 1];
        side[v] = 1 - side[v];
    }
    return best > 1e-12;
}

inline void refine(const WGraph& g, std::vector<char>& side, double frac) {
    double max_vw = 0;
    for (double w : g.vw) max_vw = std::max(max_vw, w);
    const double slack = std::max(0.015 * g.total(), max_vw * 1.001);
    for (int pass = 0; pass < 8; ++pass)
        if (!fm_pass(g, side, frac * g.total(), slack)) break;
}

/** Reassign every component of each side except its largest (by weight) to
 *  the other side, iterating until both sides are connected. */
inline void repair_components(const WGraph& g, std::vector<char>& side) {
    const int n = g.n();
    std::vector<int> comp(n), q;
    for (int round = 0; round < n; ++round) {
        bool clean = true;
        for (int s = 0; s < 2 && clean; ++s) {
            std::fill(comp.begin(), comp.end(), -1);
            int nc = 0;
            std::vector<double> cw;
            for (int v = 0; v < n; ++v) {
                if (side[v] != s || comp[v] >= 0) continue;
                comp[v] = nc;
                cw.push_back(0.0);
                q.assign(1, v);
                for (std::size_t head = 0; head < q.size(); ++head) {
                    int u = q[head];
                    cw[nc] += g.vw[u];
                    for (int e = g.xadj[u]; e < g.xadj[u + 1]; ++e) {
                        int t = g.adj[e];
                        if (side[t] == s && comp[t] < 0) {
                            comp[t] = nc;
                            q.push_back(t);
                        }
                    }
                }
                ++nc;
            }
            if (nc <= 1) continue;
            int keep = 0;
            for (int cc = 1; cc < nc; ++cc)
                if (cw[cc] > cw[keep]) keep = cc;
            for (int v = 0; v < n; ++v)
                if (side[v] == s && comp[v] != keep) side[v] = static_cast<char>(1 - s);
            clean = false;
        }
        if (clean) break;
    }
}

/** True if removing v keeps the remaining vertices of its side connected. */
inline bool removable(const WGraph& g, const std::vector<char>& side, int v) {
    const int s = side[v];
    int start = -1, count = 0;
    for (int u = 0; u < g.n(); ++u)
        if (side[u] == s && u != v) {
            if (start < 0) start = u;
            ++count;
        }
    if (count == 0) return false;
    std::vector<char> seen(g.n(), 0);
    std::vector<int> q{start};
    seen[start] = 1;
    int reached = 1;
    for (std::size_t head = 0; head < q.size(); ++head)
        for (int e = g.xadj[q[head]]; e < g.xadj[q[head] + 1]; ++e) {
            int u = g.adj[e];
            if (u != v && side[u] == s && !seen[u]) {
                seen[u] = 1;
                ++reached;
                q.push_back(u);
            }
        }
    return reached == count;
}

/** Move boundary vertices off the heavy side, preserving connectivity,
 *  until side 0 is within `slack` of its target weight. */
inline void rebalance(const WGraph& g, std::vector<char>& side, double target0, double slack) {
    for (int step = 0; step < g.n(); ++step) {
        double w0 = 0;
        for (int v = 0; v < g.n(); ++v)
            if (side[v] == 0) w0 += g.vw[v];
        if (std::abs(w0 - target0) <= slack) return;
        const int heavy = w0 > target0 ? 0 : 1;
        int pick = -1;
        double pick_gain = -std::numeric_limits<double>::infinity();
        for (int v = 0; v < g.n(); ++v) {
            if (side[v] != heavy) continue;
            double internal = 0, external = 0;
            for (int e = g.xadj[v]; e < g.xadj[v + 1]; ++e)
                (side[g.adj[e]] == side[v] ? internal : external) += g.ew[e];
            if (external == 0.0) continue;
            double gain = external - internal;
            if (gain > pick_gain && removable(g, side, v)) {
                pick_gain = gain;
                pick = v;
            }
        }
        if (pick < 0) return;  // no safe move available
        side[pick] = static_cast<char>(1 - side[pick]);
    }
}

inline std::vector<char> bisect(const WGraph& g, double frac, std::mt19937& rng) {
    constexpr int kCoarseTarget = 120;
    std::vector<char> side;
    std::vector<int> cmap;
    if (g.n() > kCoarseTarget) {
        int nc = heavy_edge_match(g, rng, cmap);
        if (nc < static_cast<int>(0.95 * g.n())) {
            WGraph coarse = contract(g, cmap, nc);
            std::vector<char> cside = bisect(coarse, frac, rng);
            side.resize(g.n());
            for (int v = 0; v < g.n(); ++v) side[v] = cside[cmap[v]];
            refine(g, side, frac);
            repair_components(g, side);
            double max_vw = 0;
            for (double w : g.vw) max_vw = std::max(max_vw, w);
            rebalance(g, side, frac * g.total(), std::max(0.015 * g.total(), max_vw * 1.001));
            return side;
        }
    }
    initial_bisection(g, frac, rng, side);
    refine(g, side, frac);
    repair_components(g, side);
    double max_vw = 0;
    for (double w : g.vw) max_vw = std::max(max_vw, w);
    rebalance(g, side, frac * g.total(), std::max(0.015 * g.total(), max_vw * 1.001));
    return side;
}

inline void recursive_bisect(const WGraph& g, const std::vector<int>& gids, int lo, int hi,
                             std::mt19937& rng, std::vector<int>& part) {
    const int k = hi - lo;
    if (k == 1) {
        for (int v : gids) part[v] = lo;
        return;
    }
    if (g.n() < k) throw ConfigError("partition has more parts than nodes in a branch");
    const int n1 = (k + 1) / 2;
    std::vector<char> side = bisect(g, static_cast<double>(n1) / k, rng);
    // induced subgraphs
    for (int s = 0; s < 2; ++s) {
        std::vector<int> local(g.n(), -1), sub_gids;
        int ns = 0;
        for (int v = 0; v < g.n(); ++v)
            if (side[v] == s) {
                local[v] = ns++;
                sub_gids.push_back(gids[v]);
            }
        WGraph sub;
        sub.vw.reserve(ns);
        sub.xadj.assign(1, 0);
        for (int v = 0; v < g.n(); ++v) {
            if (side[v] != s) continue;
            sub.vw.push_back(g.vw[v]);
            for (int e = g.xadj[v]; e < g.xadj[v + 1]; ++e)
                if (side[g.adj[e]] == s) {
                    sub.adj.push_back(local[g.adj[e]]);
                    sub.ew.push_back(g.ew[e]);
                }
            sub.xadj.push_back(static_cast<int>(sub.adj.size()));
        }
        if (s == 0)
            recursive_bisect(sub, sub_gids, lo, lo + n1, rng, part);
        else
            recursive_bisect(sub, sub_gids, lo + n1, hi, rng, part);
    }
}

}  // namespace detail

/** Partition the node graph into n_parts contiguous, balanced parts.
 *  Labels are 0 .. n_parts-1; every part is non-empty and no part exceeds
 *  1.1 * n / n_parts nodes when the graph permits it. */
inline std::vector<int> partition_graph(const NodeGraph& g, int n_parts, unsigned seed) {
    if (n_parts < 1) throw ConfigError("number of subdomains must be at least 1");
    if (n_parts > g.n) throw ConfigError("more subdomains than active nodes");
    std::vector<int> part(g.n, 0);
    if (n_parts == 1) return part;
    detail::WGraph w;
    w.xadj = g.xadj;
    w.adj = g.adj;
    w.ew.assign(g.adj.size(), 1.0);
    w.vw.assign(g.n, 1.0);
    std::vector<int> gids(g.n);
    for (int i = 0; i < g.n; ++i) gids[i] = i;
    std::mt19937 rng(seed);
    detail::recursive_bisect(w, gids, 0, n_parts, rng, part);
    for (int p = 0; p < n_parts; ++p)
        if (std::count(part.begin(), part.end(), p) == 0)
            throw InternalError("partitioner produced an empty part");
    return part;
}

/** Pull partition interfaces onto closest-point-consistent positions: any
 *  interface node whose closest point rounds to an active node in a
 *  different part adopts that part.  Moves within a sweep are computed
 *  simultaneously; sweeps stop early once no node moves.  Returns the total
 *  number of moves. */
template <int D>
int align_interfaces(const BandGrid<D>& grid, std::vector<int>& part, int interp_degree) {
    if (static_cast<int>(part.size()) != grid.n_active())
        throw InternalError("partition size does not match grid");
    const int n_parts = *std::max_element(part.begin(), part.end()) + 1;
    std::array<Index<D>, 2 * D> around;
    int total_moves = 0;
    for (int sweep = 0; sweep < interp_degree + 1; ++sweep) {
        std::vector<std::pair<int, int>> moves;
        for (int i = 0; i < grid.n_active(); ++i) {
            bool interface_node = false;
            detail::neighbors_of<D>(grid.active[i].ix, around.data());
            for (const auto& nb : around) {
                int code = grid.lookup(nb);
                if (code >= 0 && grid.is_active_code(code) && part[code] != part[i]) {
                    interface_node = true;
                    break;
                }
            }
            if (!interface_node) continue;
            Index<D> xbar = nearest_node<D>(grid.active[i].cp.cp, grid.h, grid.origin);
            int code = grid.lookup(xbar);
            if (code < 0 || !grid.is_active_code(code)) continue;
            if (part[code] != part[i]) moves.emplace_back(i, part[code]);
        }
        if (moves.empty()) break;
        for (const auto& [i, p] : moves) part[i] = p;
        total_moves += static_cast<int>(moves.size());
    }
    for (int p = 0; p < n_parts; ++p)
        if (std::count(part.begin(), part.end(), p) == 0)
            throw ConfigError("interface alignment emptied part " + std::to_string(p) +
                              "; use fewer subdomains or a finer grid");
    return total_moves;
}

inline void save_partition(const std::string& path, const std::vector<int>& part) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open partition file for writing: " + path);
    for (int p : part) out << p << "\n";
    if (!out) throw IoError("failed writing partition file: " + path);
}

/** Load one part label per line and validate against the mesh: the count
 *  must equal n_active and the labels must cover 0..max without gaps. */
inline std::vector<int> load_partition(const std::string& path, int n_active) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open partition file: " + path);
    std::vector<int> part;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t pos = 0;
        int v;
        try {
            v = std::stoi(line, &pos);
        } catch (const std::exception&) {
            throw IoError("malformed partition file line: '" + line + "'");
        }
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos != line.size()) throw IoError("malformed partition file line: '" + line + "'");
        part.push_back(v);
    }
    if (static_cast<int>(part.size()) != n_active)
        throw ConfigError("partition file has " + std::to_string(part.size()) +
                          " entries but the mesh has " + std::to_string(n_active) +
                          " active nodes");
    int mx = -1;
    for (int v : part) {
        if (v < 0) throw ConfigError("partition file contains a negative label");
        mx = std::max(mx, v);
    }
    std::vector<char> present(mx + 1, 0);
    for (int v : part) present[v] = 1;
    for (int p = 0; p <= mx; ++p)
        if (!present[p])
            throw ConfigError("partition labels skip part " + std::to_string(p));
    return part;
}

}  // namespace cpdd

#endif  // CPDD_PARTITION_HPP
