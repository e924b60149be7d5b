#ifndef CPDD_INTERP_HPP
#define CPDD_INTERP_HPP

/** Tensor-product barycentric Lagrange interpolation on the uniform lattice.
 *  The degree-p stencil in each axis is the block of p+1 consecutive nodes
 *  placed around the query point:
 *    - p odd:  the query lies in the central cell of the block
 *              (normalized offset t in [(p-1)/2, (p+1)/2]);
 *    - p even: the block is centered on the node nearest the query
 *              (t in [p/2 - 1/2, p/2 + 1/2]).
 *  Either way no stencil node is farther than (p+1)/2 grid cells from the
 *  query along any axis, which is what the band radius is sized against. */

#include "cpdd/core.hpp"

#include <vector>

namespace cpdd {

/** One-dimensional stencil base: lattice coordinate of the first stencil node
 *  for a query at lattice coordinate g (= x/h relative to the origin). */
inline int stencil_base_1d(double g, int p) {
    if (p % 2 == 1) {
        // query inside the central cell; an on-node query counts as the upper
        // end of the lower cell (deterministic tie handling)
        return static_cast<int>(std::lround(std::ceil(g))) - 1 - (p - 1) / 2;
    }
    return round_half_up(g) - p / 2;
}

/** Barycentric Lagrange weights on the nodes {0, 1, ..., p} evaluated at t.
 *  Exact hits (t within 1e-12 of a node) return the unit coordinate vector so
 *  no division by zero can occur.  Throws if t is outside [0, p], which would
 *  indicate a stencil-placement bug. */
inline void interp_weights_1d(int p, double t, double* w) {
    if (t < -1e-9 || t > p + 1e-9)
        throw InternalError("interp_weights_1d: offset " + std::to_string(t) +
                            " outside stencil range [0," + std::to_string(p) + "]");
    for (int j = 0; j <= p; ++j) {
        if (std::abs(t - j) < 1e-12) {
            for (int k = 0; k <= p; ++k) w[k] = (k == j) ? 1.0 : 0.0;
            return;
        }
    }
    // barycentric weights for equispaced nodes: b_j = (-1)^j * C(p, j)
    double sum = 0.0;
    double b = 1.0;
    for (int j = 0; j <= p; ++j) {
        w[j] = b / (t - j);
        sum += w[j];
        b *= -static_cast<double>(p - j) / (j + 1);
    }
    for (int j = 0; j <= p; ++j) w[j] /= sum;
}

/** Full tensor-product stencil: nodes (lattice indices) and weights for
 *  interpolating at point q.  Appends (p+1)^D entries to the output vectors
 *  (cleared first).  Weight order matches node order. */
template <int D>
void interp_stencil(const Vec<D>& q, double h, const Vec<D>& origin, int p,
                    std::vector<Index<D>>& nodes, std::vector<double>& weights) {
    nodes.clear();
    weights.clear();
    int base[D];
    double w1[D][8];  // per-axis weights; p <= 7 is far beyond practical use
    if (p < 1 || p > 7) throw ConfigError("interpolation degree must be in [1,7]");
    for (int a = 0; a < D; ++a) {
        double g = (q[a] - origin[a]) / h;
        base[a] = stencil_base_1d(g, p);
        interp_weights_1d(p, g - base[a], w1[a]);
    }
    int count = 1;
    for (int a = 0; a < D; ++a) count *= p + 1;
    nodes.reserve(count);
    weights.reserve(count);
    Index<D> ix;
    int offset[D] = {};
    for (int k = 0; k < count; ++k) {
        double w = 1.0;
        for (int a = 0; a < D; ++a) {
            ix[a] = base[a] + offset[a];
            w *= w1[a][offset[a]];
        }
        nodes.push_back(ix);
        weights.push_back(w);
        for (int a = 0; a < D; ++a) {  // odometer increment
            if (++offset[a] <= p) break;
            offset[a] = 0;
        }
    }
}

/** Largest distance from a query point to any node of its stencil:
 *  (p+1)/2 cells per axis, hence (p+1)/2 * sqrt(D) * h in total. */
template <int D>
double stencil_reach(double h, int p) {
    return 0.5 * (p + 1) * std::sqrt(static_cast<double>(D)) * h;
}

}  // namespace cpdd

#endif  // CPDD_INTERP_HPP
