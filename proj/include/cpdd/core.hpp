#ifndef CPDD_CORE_HPP
#define CPDD_CORE_HPP

/** Shared basic types for the closest-point domain-decomposition library:
 *  fixed-dimension vectors, lattice indices, the error hierarchy, and a few
 *  numeric helpers used across modules. */

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace cpdd {

/** Point/vector in the embedding space (d = 2 or 3). */
template <int D>
using Vec = Eigen::Matrix<double, D, 1>;

/** Integer lattice index; node position = origin + h * ix. */
template <int D>
using Index = std::array<int, D>;

template <int D>
struct IndexHash {
    std::size_t operator()(const Index<D>& ix) const {
        // FNV-1a over the packed coordinates; adequate for band-sized maps.
        std::uint64_t h = 1469598103934665603ull;
        for (int a = 0; a < D; ++a) {
            std::uint64_t v = static_cast<std::uint64_t>(static_cast<std::int64_t>(ix[a]));
            for (int b = 0; b < 4; ++b) {
                h ^= (v >> (8 * b)) & 0xffu;
                h *= 1099511628211ull;
            }
        }
        return static_cast<std::size_t>(h);
    }
};

// Note: Index<D> aliases std::array, whose size parameter is std::size_t, so
// `int D` cannot be deduced from an Index argument.  Function templates take
// index arguments through NoDeduce so D comes from a Vec/Surface/grid
// argument or an explicit template argument instead.
template <typename T>
using NoDeduce = std::type_identity_t<T>;

template <int D>
Vec<D> index_to_point(const NoDeduce<Index<D>>& ix, double h, const Vec<D>& origin) {
    Vec<D> x;
    for (int a = 0; a < D; ++a) x[a] = origin[a] + h * ix[a];
    return x;
}

/** Round half up (toward +inf), used for nearest-lattice-node queries so that
 *  ties break deterministically and translation-invariantly. */
inline int round_half_up(double g) {
    return static_cast<int>(std::floor(g + 0.5));
}

template <int D>
Index<D> nearest_node(const Vec<D>& x, double h, const Vec<D>& origin) {
    Index<D> ix;
    for (int a = 0; a < D; ++a) ix[a] = round_half_up((x[a] - origin[a]) / h);
    return ix;
}

// ----------------------------------------------------------------- errors

/** Invalid or out-of-range configuration (maps to CLI exit code 2). */
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/** File-system problem: missing/corrupt input, unwritable output (exit 4). */
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/** Iteration diverged or the residual became non-finite (exit 3). */
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

/** Violated internal invariant: indicates a bug, not a usage error. */
class InternalError : public std::logic_error {
public:
    explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace cpdd

#endif  // CPDD_CORE_HPP
