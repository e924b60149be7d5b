#ifndef CPDD_CONFIG_HPP
#define CPDD_CONFIG_HPP

/** Run configuration: a flat key = value file (INI style, # and ; comments)
 *  plus command-line overrides applied on top.  Validation happens once,
 *  after all sources are merged; every violation is a ConfigError. */

#include "cpdd/core.hpp"
#include "cpdd/solve.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>
#include <vector>

namespace cpdd {

struct RunConfig {
    // surface
    std::string surface = "circle";  ///< circle | arc | sphere | torus | obj
    double radius = 1.0;             ///< circle, arc, sphere
    double angle_min = 0.0;          ///< arc, radians
    double angle_max = 2.0;
    double major_radius = 2.0 / 3.0;  ///< torus
    double minor_radius = 1.0 / 3.0;
    std::string obj_path;
    double scale_height = 0.0;     ///< > 0: scale the mesh to this y-extent
    double curvature_bound = 0.0;  ///< > 0: mesh curvature bound for band checks

    // discretization
    double h = 0.1;
    int p = 0;  ///< interpolation degree; 0 = default (3 in 2D, 2 in 3D)
    std::string band = "tube";  ///< tube | algorithmic

    // problem
    std::string rhs = "auto";  ///< auto | circle-harmonic | sphere-field | arc | ones | file:PATH
    int harmonic = 2;          ///< k of the circle solution sin(k theta)

    SolverConfig solver;

    // io
    std::string partition_in;   ///< load this partition instead of computing one
    std::string partition_out;  ///< save the (aligned) partition here
    std::string output_dir = ".";
    int workers = 1;
    bool check_direct = false;  ///< also solve globally and report the gap
};

inline int dimension_of(const RunConfig& cfg) {
    return (cfg.surface == "circle" || cfg.surface == "arc") ? 2 : 3;
}

inline int effective_degree(const RunConfig& cfg) {
    if (cfg.p > 0) return cfg.p;
    return dimension_of(cfg) == 2 ? 3 : 2;
}

inline int effective_max_iter(const SolverConfig& s) {
    if (s.max_iter > 0) return s.max_iter;
    return s.mode == SolverConfig::Mode::gmres ? 2000 : 5000;
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
}

inline int parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(x);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

}  // namespace detail

/** Apply one key = value setting.  Unknown keys are configuration errors. */
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    using detail::parse_bool;
    using detail::parse_int;
    using detail::parse_real;
    if (key == "surface")
        cfg.surface = value;
    else if (key == "radius")
        cfg.radius = parse_real(key, value);
    else if (key == "angle_min")
        cfg.angle_min = parse_real(key, value);
    else if (key == "angle_max")
        cfg.angle_max = parse_real(key, value);
    else if (key == "major_radius")
        cfg.major_radius = parse_real(key, value);
    else if (key == "minor_radius")
        cfg.minor_radius = parse_real(key, value);
    else if (key == "obj")
        cfg.obj_path = value;
    else if (key == "scale_height")
        cfg.scale_height = parse_real(key, value);
    else if (key == "curvature_bound")
        cfg.curvature_bound = parse_real(key, value);
    else if (key == "h")
        cfg.h = parse_real(key, value);
    else if (key == "p")
        cfg.p = parse_int(key, value);
    else if (key == "band")
        cfg.band = value;
    else if (key == "c")
        cfg.solver.c = parse_real(key, value);
    else if (key == "rhs")
        cfg.rhs = value;
    else if (key == "harmonic")
        cfg.harmonic = parse_int(key, value);
    else if (key == "method") {
        if (value == "ras")
            cfg.solver.method = SolverConfig::Method::ras;
        else if (value == "oras")
            cfg.solver.method = SolverConfig::Method::oras;
        else
            throw ConfigError("key 'method': expected ras or oras, got '" + value + "'");
    } else if (key == "mode") {
        if (value == "stationary")
            cfg.solver.mode = SolverConfig::Mode::stationary;
        else if (value == "gmres")
            cfg.solver.mode = SolverConfig::Mode::gmres;
        else
            throw ConfigError("key 'mode': expected stationary or gmres, got '" + value + "'");
    } else if (key == "rel_tol")
        cfg.solver.rel_tol = parse_real(key, value);
    else if (key == "max_iter")
        cfg.solver.max_iter = parse_int(key, value);
    else if (key == "gmres_restart")
        cfg.solver.gmres_restart = parse_int(key, value);
    else if (key == "n_overlap")
        cfg.solver.n_overlap = parse_int(key, value);
    else if (key == "n_subdomains")
        cfg.solver.n_subdomains = parse_int(key, value);
    else if (key == "alpha")
        cfg.solver.alpha = parse_real(key, value);
    else if (key == "alpha_cross")
        cfg.solver.alpha_cross = parse_real(key, value);
    else if (key == "seed")
        cfg.solver.seed = static_cast<unsigned>(parse_int(key, value));
    else if (key == "partition_in")
        cfg.partition_in = value;
    else if (key == "partition_out")
        cfg.partition_out = value;
    else if (key == "output_dir")
        cfg.output_dir = value;
    else if (key == "workers")
        cfg.workers = parse_int(key, value);
    else if (key == "check_direct")
        cfg.check_direct = parse_bool(key, value);
    else
        throw ConfigError("unknown configuration key '" + key + "'");
}

/** Read a flat key = value file.  Empty lines and #/; comments are skipped;
 *  [section] headers are tolerated and ignored. */
inline void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + t + "'");
        apply_setting(cfg, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
    }
}

inline void validate(const RunConfig& cfg) {
    const bool known = cfg.surface == "circle" || cfg.surface == "arc" ||
                       cfg.surface == "sphere" || cfg.surface == "torus" ||
                       cfg.surface == "obj";
    if (!known) throw ConfigError("unknown surface '" + cfg.surface + "'");
    if (cfg.surface == "obj" && cfg.obj_path.empty())
        throw ConfigError("surface obj requires the obj key");
    if (cfg.radius <= 0) throw ConfigError("radius must be positive");
    if (cfg.surface == "arc" && !(cfg.angle_max > cfg.angle_min))
        throw ConfigError("arc needs angle_max > angle_min");
    if (cfg.surface == "torus" &&
        !(cfg.minor_radius > 0 && cfg.major_radius > cfg.minor_radius))
        throw ConfigError("torus needs 0 < minor_radius < major_radius");
    if (!(cfg.h > 0)) throw ConfigError("h must be positive");
    if (cfg.p != 0 && (cfg.p < 1 || cfg.p > 7))
        throw ConfigError("interpolation degree p must be in 1..7");
    if (cfg.band != "tube" && cfg.band != "algorithmic")
        throw ConfigError("band must be tube or algorithmic");
    if (cfg.solver.c <= 0) throw ConfigError("c must be positive");
    if (cfg.solver.rel_tol <= 0 || cfg.solver.rel_tol >= 1)
        throw ConfigError("rel_tol must lie strictly between 0 and 1");
    if (cfg.solver.max_iter < 0)
        throw ConfigError("max_iter must not be negative (0 selects the mode default)");
    if (cfg.solver.gmres_restart < 0) throw ConfigError("gmres_restart must be >= 0");
    if (cfg.solver.n_overlap < 1) throw ConfigError("n_overlap must be at least 1");
    if (cfg.solver.n_subdomains < 1) throw ConfigError("n_subdomains must be at least 1");
    if (cfg.solver.robin()) {
        if (cfg.solver.alpha <= 0)
            throw ConfigError("alpha must be positive for the Robin method");
        if (cfg.solver.alpha_cross == 0)  // negative means "same as alpha"
            throw ConfigError("alpha_cross must be positive for the Robin method");
        if (cfg.solver.alpha_cross >= 0 && cfg.solver.alpha_cross < cfg.solver.alpha)
            throw ConfigError("alpha_cross must be at least alpha");
    }
    if (cfg.harmonic < 1) throw ConfigError("harmonic must be at least 1");
    if (cfg.workers < 1) throw ConfigError("workers must be at least 1");
}

}  // namespace cpdd

#endif  // CPDD_CONFIG_HPP
