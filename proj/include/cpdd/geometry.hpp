#ifndef CPDD_GEOMETRY_HPP
#define CPDD_GEOMETRY_HPP

/** Closest-point queries for the supported surfaces.  Everything downstream
 *  (band construction, extension operator, boundary geometry) is built on
 *  closest_point(), which returns the global minimizer of the Euclidean
 *  distance together with the surface normal there. */

#include "cpdd/core.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

namespace cpdd {

template <int D>
struct CpResult {
    Vec<D> cp;      ///< closest point on the surface
    Vec<D> normal;  ///< unit surface normal at cp
    double dist;    ///< ||x - cp||
};

// ------------------------------------------------------------ analytic kinds

struct Circle {
    double radius = 1.0;
};

/** Circular arc of the given radius between two angles (radians, measured
 *  counterclockwise from the +x axis).  An open curve: queries beyond the
 *  ends clamp to the nearer endpoint. */
struct ArcSeg {
    double radius = 1.0;
    double angle_min = 0.0;
    double angle_max = 2.0;
};

struct Sphere {
    double radius = 1.0;
};

/** Torus around the z axis: ring of radius major_R in the xy plane, tube of
 *  radius minor_r. */
struct Torus {
    double major_R = 2.0 / 3.0;
    double minor_r = 1.0 / 3.0;
};

inline CpResult<2> closest_point_impl(const Circle& s, const Vec<2>& x) {
    double r = x.norm();
    Vec<2> n = r > 1e-13 ? Vec<2>(x / r) : Vec<2>(1.0, 0.0);
    // center query: all points equidistant; pick azimuth 0 deterministically
    // (such points lie far outside any valid band)
    Vec<2> cp = s.radius * n;
    return {cp, n, (x - cp).norm()};
}

inline CpResult<2> closest_point_impl(const ArcSeg& s, const Vec<2>& x) {
    double r = x.norm();
    double theta;
    if (r <= 1e-13) {
        theta = s.angle_min;  // degenerate center query: clamp to the start
    } else {
        double t = std::atan2(x[1], x[0]) - s.angle_min;
        t -= 2.0 * M_PI * std::floor(t / (2.0 * M_PI));  // into [0, 2*pi)
        double span = s.angle_max - s.angle_min;
        if (t <= span) {
            theta = s.angle_min + t;
        } else {
            // in the gap: the euclidean argmin is the angularly nearer endpoint
            theta = (t - span <= 2.0 * M_PI - t) ? s.angle_max : s.angle_min;
        }
    }
    Vec<2> cp(s.radius * std::cos(theta), s.radius * std::sin(theta));
    Vec<2> n(std::cos(theta), std::sin(theta));
    return {cp, n, (x - cp).norm()};
}

inline CpResult<3> closest_point_impl(const Sphere& s, const Vec<3>& x) {
    double r = x.norm();
    Vec<3> n = r > 1e-13 ? Vec<3>(x / r) : Vec<3>(1.0, 0.0, 0.0);
    Vec<3> cp = s.radius * n;
    return {cp, n, (x - cp).norm()};
}

inline CpResult<3> closest_point_impl(const Torus& s, const Vec<3>& x) {
    // project to the ring circle, then radially onto the tube circle
    double rho = std::hypot(x[0], x[1]);
    Vec<3> ring;
    if (rho > 1e-13) {
        ring = Vec<3>(s.major_R * x[0] / rho, s.major_R * x[1] / rho, 0.0);
    } else {
        ring = Vec<3>(s.major_R, 0.0, 0.0);  // axis query: azimuth 0 by convention
    }
    Vec<3> v = x - ring;
    double vn = v.norm();
    Vec<3> n;
    if (vn > 1e-13) {
        n = v / vn;
    } else {
        n = ring / ring.norm();  // on the ring circle itself: point outward
    }
    Vec<3> cp = ring + s.minor_r * n;
    return {cp, n, (x - cp).norm()};
}

// ----------------------------------------------------------------- trimesh

/** Triangulated surface with a uniform spatial hash for closest-point
 *  queries and angle-weighted pseudo-normals at vertices and edges. */
class TriMesh {
public:
    TriMesh(std::vector<Vec<3>> vertices, std::vector<std::array<int, 3>> triangles)
        : verts_(std::move(vertices)), tris_(std::move(triangles)) {
        if (tris_.empty()) throw ConfigError("triangle mesh has no triangles");
        for (const auto& t : tris_)
            for (int k = 0; k < 3; ++k)
                if (t[k] < 0 || t[k] >= static_cast<int>(verts_.size()))
                    throw ConfigError("triangle index out of range");
        build_normals();
        build_hash();
        if (n_valid_ == 0) throw ConfigError("all triangles are degenerate");
    }

    /** Parse the Wavefront OBJ subset: `v x y z` vertices and triangular
     *  `f i j k` faces (1-based; `i/..` attribute suffixes ignored).  All
     *  other line types are skipped. */
    static TriMesh load_obj(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open OBJ file: " + path);
        std::vector<Vec<3>> vs;
        std::vector<std::array<int, 3>> fs;
        std::string line;
        while (std::getline(in, line)) {
            std::istringstream ls(line);
            std::string tag;
            if (!(ls >> tag)) continue;
            if (tag == "v") {
                Vec<3> v;
                if (!(ls >> v[0] >> v[1] >> v[2]))
                    throw IoError("malformed vertex line in " + path + ": " + line);
                vs.push_back(v);
            } else if (tag == "f") {
                std::array<int, 3> f;
                int k = 0;
                std::string tok;
                while (ls >> tok) {
                    if (k >= 3)
                        throw IoError("non-triangular face in " + path + ": " + line);
                    int idx = std::atoi(tok.c_str());  // leading integer of i/j/k forms
                    if (idx <= 0 || idx > static_cast<int>(vs.size()))
                        throw IoError("face index out of range in " + path + ": " + line);
                    f[k++] = idx - 1;
                }
                if (k != 3) throw IoError("non-triangular face in " + path + ": " + line);
                fs.push_back(f);
            }
        }
        if (fs.empty()) throw IoError("OBJ file has no triangular faces: " + path);
        return TriMesh(std::move(vs), std::move(fs));
    }

    /** Uniformly rescale so the bounding-box height (y extent) equals H, and
     *  translate the bounding-box center to the origin. */
    void normalize_height(double H) {
        if (H <= 0) throw ConfigError("scale height must be positive");
        Vec<3> lo = verts_[0], hi = verts_[0];
        for (const auto& v : verts_) {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
        double extent = hi[1] - lo[1];
        if (extent <= 0) throw ConfigError("mesh has zero height; cannot rescale");
        double scale = H / extent;
        Vec<3> center = 0.5 * (lo + hi);
        for (auto& v : verts_) v = (v - center) * scale;
        build_normals();
        build_hash();
    }

    CpResult<3> closest_point(const Vec<3>& x) const {
        Index<3> c0 = cell_of(x);
        double best = std::numeric_limits<double>::infinity();
        Vec<3> best_cp = Vec<3>::Zero();
        int best_tri = -1, best_feat = -1;
        for (int ring = 0;; ++ring) {
            if (best < (ring - 1) * cell_ && best_tri >= 0) break;
            if (ring > max_ring_ + 1) {
                if (best_tri >= 0) break;
                // empty hash neighborhood (shouldn't happen): brute force
                for (int t = 0; t < static_cast<int>(tris_.size()); ++t)
                    consider(t, x, best, best_cp, best_tri, best_feat);
                break;
            }
            visit_ring(c0, ring, [&](const Index<3>& c) {
                auto it = cells_.find(c);
                if (it == cells_.end()) return;
                for (int t : it->second) consider(t, x, best, best_cp, best_tri, best_feat);
            });
        }
        Vec<3> n = feature_normal(best_tri, best_feat);
        return {best_cp, n, best};
    }

    int degenerate_count() const { return n_degenerate_; }
    const std::vector<Vec<3>>& vertices() const { return verts_; }
    const std::vector<std::array<int, 3>>& triangles() const { return tris_; }

private:
    std::vector<Vec<3>> verts_;
    std::vector<std::array<int, 3>> tris_;
    std::vector<Vec<3>> face_n_;       // unit face normals (zero for degenerate)
    std::vector<Vec<3>> vert_n_;       // angle-weighted vertex pseudo-normals
    std::unordered_map<std::uint64_t, Vec<3>> edge_n_;  // edge pseudo-normals
    std::unordered_map<Index<3>, std::vector<int>, IndexHash<3>> cells_;
    double cell_ = 1.0;
    int max_ring_ = 0;
    int n_degenerate_ = 0, n_valid_ = 0;

    static std::uint64_t edge_key(int a, int b) {
        if (a > b) std::swap(a, b);
        return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
    }

    void build_normals() {
        face_n_.assign(tris_.size(), Vec<3>::Zero());
        vert_n_.assign(verts_.size(), Vec<3>::Zero());
        edge_n_.clear();
        n_degenerate_ = n_valid_ = 0;
        for (std::size_t t = 0; t < tris_.size(); ++t) {
            const auto& f = tris_[t];
            Vec<3> a = verts_[f[0]], b = verts_[f[1]], c = verts_[f[2]];
            Vec<3> n = (b - a).cross(c - a);
            double len = n.norm();
            if (len < 1e-300) {
                ++n_degenerate_;  // skipped everywhere, reported in stats
                continue;
            }
            ++n_valid_;
            n /= len;
            face_n_[t] = n;
            for (int k = 0; k < 3; ++k) {
                Vec<3> e1 = (verts_[f[(k + 1) % 3]] - verts_[f[k]]).normalized();
                Vec<3> e2 = (verts_[f[(k + 2) % 3]] - verts_[f[k]]).normalized();
                double ang = std::acos(std::clamp(e1.dot(e2), -1.0, 1.0));
                vert_n_[f[k]] += ang * n;
            }
            for (int k = 0; k < 3; ++k)
                edge_n_[edge_key(f[k], f[(k + 1) % 3])] += n;
        }
    }

    void build_hash() {
        cells_.clear();
        cell_ = 0.0;
        for (std::size_t t = 0; t < tris_.size(); ++t) {
            if (face_n_[t].isZero()) continue;
            Vec<3> lo, hi;
            tri_bbox(t, lo, hi);
            cell_ = std::max(cell_, (hi - lo).maxCoeff());
        }
        if (cell_ <= 0) cell_ = 1.0;
        Index<3> clo{0, 0, 0}, chi{0, 0, 0};
        bool first = true;
        for (std::size_t t = 0; t < tris_.size(); ++t) {
            if (face_n_[t].isZero()) continue;
            Vec<3> lo, hi;
            tri_bbox(t, lo, hi);
            Index<3> a = cell_of(lo), b = cell_of(hi);
            for (int i = a[0]; i <= b[0]; ++i)
                for (int j = a[1]; j <= b[1]; ++j)
                    for (int k = a[2]; k <= b[2]; ++k)
                        cells_[{i, j, k}].push_back(static_cast<int>(t));
            if (first) {
                clo = a;
                chi = b;
                first = false;
            } else {
                for (int d = 0; d < 3; ++d) {
                    clo[d] = std::min(clo[d], a[d]);
                    chi[d] = std::max(chi[d], b[d]);
                }
            }
        }
        max_ring_ = 0;
        for (int d = 0; d < 3; ++d) max_ring_ = std::max(max_ring_, chi[d] - clo[d] + 2);
    }

    void tri_bbox(std::size_t t, Vec<3>& lo, Vec<3>& hi) const {
        const auto& f = tris_[t];
        lo = hi = verts_[f[0]];
        for (int k = 1; k < 3; ++k) {
            lo = lo.cwiseMin(verts_[f[k]]);
            hi = hi.cwiseMax(verts_[f[k]]);
        }
    }

    Index<3> cell_of(const Vec<3>& x) const {
        return {static_cast<int>(std::floor(x[0] / cell_)),
                static_cast<int>(std::floor(x[1] / cell_)),
                static_cast<int>(std::floor(x[2] / cell_))};
    }

    template <class F>
    static void visit_ring(const Index<3>& c0, int ring, F&& fn) {
        if (ring == 0) {
            fn(c0);
            return;
        }
        for (int i = -ring; i <= ring; ++i)
            for (int j = -ring; j <= ring; ++j)
                for (int k = -ring; k <= ring; ++k) {
                    if (std::max({std::abs(i), std::abs(j), std::abs(k)}) != ring) continue;
                    fn(Index<3>{c0[0] + i, c0[1] + j, c0[2] + k});
                }
    }

    void consider(int t, const Vec<3>& x, double& best, Vec<3>& best_cp,
                  int& best_tri, int& best_feat) const {
        if (face_n_[t].isZero()) return;  // degenerate triangle: skip
        int feat;
        Vec<3> cp = closest_on_triangle(x, verts_[tris_[t][0]], verts_[tris_[t][1]],
                                        verts_[tris_[t][2]], feat);
        double d = (x - cp).norm();
        if (d < best) {
            best = d;
            best_cp = cp;
            best_tri = t;
            best_feat = feat;
        }
    }

    /** Closest point on a single triangle, with the active feature reported
     *  as 0/1/2 = vertex, 3/4/5 = edge (ab, ac, bc), 6 = interior. */
    static Vec<3> closest_on_triangle(const Vec<3>& p, const Vec<3>& a, const Vec<3>& b,
                                      const Vec<3>& c, int& feature) {
        Vec<3> ab = b - a, ac = c - a, ap = p - a;
        double d1 = ab.dot(ap), d2 = ac.dot(ap);
        if (d1 <= 0 && d2 <= 0) {
            feature = 0;
            return a;
        }
        Vec<3> bp = p - b;
        double d3 = ab.dot(bp), d4 = ac.dot(bp);
        if (d3 >= 0 && d4 <= d3) {
            feature = 1;
            return b;
        }
        double vc = d1 * d4 - d3 * d2;
        if (vc <= 0 && d1 >= 0 && d3 <= 0) {
            feature = 3;
            return a + (d1 / (d1 - d3)) * ab;
        }
        Vec<3> cp = p - c;
        double d5 = ab.dot(cp), d6 = ac.dot(cp);
        if (d6 >= 0 && d5 <= d6) {
            feature = 2;
            return c;
        }
        double vb = d5 * d2 - d1 * d6;
        if (vb <= 0 && d2 >= 0 && d6 <= 0) {
            feature = 4;
            return a + (d2 / (d2 - d6)) * ac;
        }
        double va = d3 * d6 - d5 * d4;
        if (va <= 0 && d4 - d3 >= 0 && d5 - d6 >= 0) {
            feature = 5;
            return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
        }
        double denom = 1.0 / (va + vb + vc);
        feature = 6;
        return a + ab * (vb * denom) + ac * (vc * denom);
    }

    Vec<3> feature_normal(int tri, int feat) const {
        if (tri < 0) throw InternalError("closest-point query found no triangle");
        const auto& f = tris_[tri];
        Vec<3> n;
        switch (feat) {
            case 0:
            case 1:
            case 2:
                n = vert_n_[f[feat]];
                break;
            case 3:
                n = edge_n_.at(edge_key(f[0], f[1]));
                break;
            case 4:
                n = edge_n_.at(edge_key(f[0], f[2]));
                break;
            case 5:
                n = edge_n_.at(edge_key(f[1], f[2]));
                break;
            default:
                n = face_n_[tri];
        }
        double len = n.norm();
        return len > 1e-300 ? Vec<3>(n / len) : face_n_[tri];
    }
};

// ---------------------------------------------------------------- dispatch

template <int D>
struct SurfaceKinds;

template <>
struct SurfaceKinds<2> {
    using Variant = std::variant<Circle, ArcSeg>;
};

template <>
struct SurfaceKinds<3> {
    using Variant = std::variant<Sphere, Torus, std::shared_ptr<const TriMesh>>;
};

/** Value-semantic surface handle exposing the queries the method needs. */
template <int D>
class Surface {
public:
    using Variant = typename SurfaceKinds<D>::Variant;

    Surface(Variant kind, std::optional<double> curvature_override = std::nullopt)
        : kind_(std::move(kind)), curv_override_(curvature_override) {
        validate();
    }

    CpResult<D> closest_point(const Vec<D>& x) const {
        return std::visit([&](const auto& s) { return dispatch_cp(s, x); }, kind_);
    }

    /** Upper bound on the surface curvatures, if known.  Controls only a
     *  band-width validity warning; triangulated meshes without a supplied
     *  bound return nullopt and the warning is skipped. */
    std::optional<double> curvature_bound() const {
        if (curv_override_) return curv_override_;
        return std::visit([](const auto& s) { return dispatch_curv(s); }, kind_);
    }

    /** A point on the surface, used to seed the band flood fill. */
    Vec<D> sample_point() const {
        return std::visit([](const auto& s) { return dispatch_sample(s); }, kind_);
    }

    /** True for surfaces with boundary (the arc). */
    bool is_open() const { return std::holds_alternative<ArcSeg>(kind_); }

    template <class T>
    const T* as() const {
        return std::get_if<T>(&kind_);
    }

    const Variant& kind() const { return kind_; }

private:
    Variant kind_;
    std::optional<double> curv_override_;

    void validate() const {
        std::visit([](const auto& s) { dispatch_validate(s); }, kind_);
    }

    static void dispatch_validate(const Circle& s) {
        if (s.radius <= 0) throw ConfigError("circle radius must be positive");
    }
    static void dispatch_validate(const ArcSeg& s) {
        if (s.radius <= 0) throw ConfigError("arc radius must be positive");
        if (!(s.angle_max > s.angle_min) || s.angle_max - s.angle_min >= 2.0 * M_PI)
            throw ConfigError("arc angles must satisfy angle_min < angle_max < angle_min + 2*pi");
    }
    static void dispatch_validate(const Sphere& s) {
        if (s.radius <= 0) throw ConfigError("sphere radius must be positive");
    }
    static void dispatch_validate(const Torus& s) {
        if (!(s.minor_r > 0 && s.minor_r < s.major_R))
            throw ConfigError("torus radii must satisfy 0 < minor_r < major_R");
    }
    static void dispatch_validate(const std::shared_ptr<const TriMesh>& m) {
        if (!m) throw ConfigError("null triangle mesh");
    }

    template <class S>
    static CpResult<D> dispatch_cp(const S& s, const Vec<D>& x) {
        return closest_point_impl(s, x);
    }
    static CpResult<3> dispatch_cp(const std::shared_ptr<const TriMesh>& m, const Vec<3>& x) {
        return m->closest_point(x);
    }

    static std::optional<double> dispatch_curv(const Circle& s) { return 1.0 / s.radius; }
    static std::optional<double> dispatch_curv(const ArcSeg& s) { return 1.0 / s.radius; }
    static std::optional<double> dispatch_curv(const Sphere& s) { return 1.0 / s.radius; }
    static std::optional<double> dispatch_curv(const Torus& s) {
        return std::max(1.0 / s.minor_r, 1.0 / (s.major_R - s.minor_r));
    }
    static std::optional<double> dispatch_curv(const std::shared_ptr<const TriMesh>&) {
        return std::nullopt;
    }

    static Vec<2> dispatch_sample(const Circle& s) { return {s.radius, 0.0}; }
    static Vec<2> dispatch_sample(const ArcSeg& s) {
        double mid = 0.5 * (s.angle_min + s.angle_max);
        return {s.radius * std::cos(mid), s.radius * std::sin(mid)};
    }
    static Vec<3> dispatch_sample(const Sphere& s) { return {s.radius, 0.0, 0.0}; }
    static Vec<3> dispatch_sample(const Torus& s) { return {s.major_R + s.minor_r, 0.0, 0.0}; }
    static Vec<3> dispatch_sample(const std::shared_ptr<const TriMesh>& m) {
        return m->vertices().at(m->triangles()[0][0]);
    }
};

}  // namespace cpdd

#endif  // CPDD_GEOMETRY_HPP
