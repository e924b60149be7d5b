#ifndef CPDD_IO_HPP
#define CPDD_IO_HPP

/** CSV writers for the command-line tools.  All numeric formatting goes
 *  through fixed printf patterns so outputs are byte-reproducible; the
 *  timing report is the one file whose values are inherently run-dependent. */

#include "cpdd/band.hpp"
#include "cpdd/core.hpp"
#include "cpdd/solve.hpp"

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace cpdd {

namespace detail {

inline std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open output file: " + path);
    return out;
}

inline void close_out(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("failed writing output file: " + path);
}

}  // namespace detail

template <int D>
void write_mesh_stats(const std::string& path, const BandGrid<D>& grid) {
    BandStats<D> st = band_stats(grid);
    auto out = detail::open_out(path);
    out << "stat,value\n";
    out << "dimension," << D << "\n";
    out << "h," << detail::fmt_real(grid.h) << "\n";
    out << "p," << grid.p << "\n";
    out << "n_active," << st.n_active << "\n";
    out << "n_ghost," << st.n_ghost << "\n";
    out << "tube_radius," << detail::fmt_real(grid.tube_radius) << "\n";
    out << "min_active_dist," << detail::fmt_real(st.min_dist) << "\n";
    out << "max_active_dist," << detail::fmt_real(st.max_dist) << "\n";
    out << "max_ghost_dist," << detail::fmt_real(st.max_ghost_dist) << "\n";
    for (int a = 0; a < D; ++a) {
        out << "bbox_min_" << a << "," << st.bbox_lo[a] << "\n";
        out << "bbox_max_" << a << "," << st.bbox_hi[a] << "\n";
    }
    out << "curvature_warning," << (grid.tube_radius_warning ? 1 : 0) << "\n";
    detail::close_out(out, path);
}

/** Full node dump: role (active/ghost), lattice index, position, closest
 *  point, and distance.  Three coordinate columns regardless of dimension. */
template <int D>
void write_mesh_nodes(const std::string& path, const BandGrid<D>& grid) {
    auto out = detail::open_out(path);
    out << "role,i0,i1,i2,x,y,z,cpx,cpy,cpz,dist\n";
    auto emit = [&](const BandNode<D>& n, const char* role) {
        out << role;
        for (int a = 0; a < 3; ++a) out << "," << (a < D ? n.ix[a] : 0);
        for (int a = 0; a < 3; ++a)
            out << "," << detail::fmt_real(a < D ? n.x[a] : 0.0);
        for (int a = 0; a < 3; ++a)
            out << "," << detail::fmt_real(a < D ? n.cp.cp[a] : 0.0);
        out << "," << detail::fmt_real(n.cp.dist) << "\n";
    };
    for (const auto& n : grid.active) emit(n, "active");
    for (const auto& n : grid.ghost) emit(n, "ghost");
    detail::close_out(out, path);
}

template <int D>
void write_solution(const std::string& path, const BandGrid<D>& grid,
                    const Eigen::VectorXd& u) {
    if (u.size() != grid.n_active()) throw InternalError("solution size mismatch");
    auto out = detail::open_out(path);
    out << "x,y,z,u\n";
    for (int i = 0; i < grid.n_active(); ++i) {
        const auto& n = grid.active[i];
        for (int a = 0; a < 3; ++a)
            out << (a ? "," : "") << detail::fmt_real(a < D ? n.x[a] : 0.0);
        out << "," << detail::fmt_real(u[i]) << "\n";
    }
    detail::close_out(out, path);
}

inline void write_iterations(const std::string& path, const IterationLog& log) {
    auto out = detail::open_out(path);
    out << "iter,residual_2norm\n";
    for (std::size_t n = 0; n < log.residuals.size(); ++n)
        out << n << "," << detail::fmt_real(log.residuals[n]) << "\n";
    detail::close_out(out, path);
}

/** Phase timing report; the solve row is named after the requested mode. */
inline void write_timings(const std::string& path, const PhaseTimings& t, bool gmres_mode) {
    auto out = detail::open_out(path);
    out << "phase,seconds\n";
    out << "mesh," << detail::fmt_real(t.mesh) << "\n";
    out << "global_matrix," << detail::fmt_real(t.global_matrix) << "\n";
    out << "local_operators," << detail::fmt_real(t.local_operators) << "\n";
    out << (gmres_mode ? "preconditioned_solve," : "solve,") << detail::fmt_real(t.solve)
        << "\n";
    detail::close_out(out, path);
}

/** Generic study table.  Cells are preformatted strings so divergent runs
 *  can carry the DNC marker. */
inline void write_study(const std::string& path, const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows) {
    auto out = detail::open_out(path);
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
        out << "\n";
    }
    detail::close_out(out, path);
}

}  // namespace cpdd

#endif  // CPDD_IO_HPP
