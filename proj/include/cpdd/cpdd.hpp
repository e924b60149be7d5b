#ifndef CPDD_CPDD_HPP
#define CPDD_CPDD_HPP

/** Umbrella header: closest point discretization of the surface Helmholtz
 *  operator plus restricted additive Schwarz solvers. */

#include "cpdd/band.hpp"
#include "cpdd/config.hpp"
#include "cpdd/core.hpp"
#include "cpdd/direct.hpp"
#include "cpdd/geometry.hpp"
#include "cpdd/interp.hpp"
#include "cpdd/io.hpp"
#include "cpdd/operators.hpp"
#include "cpdd/parallel.hpp"
#include "cpdd/partition.hpp"
#include "cpdd/pipeline.hpp"
#include "cpdd/problems.hpp"
#include "cpdd/solve.hpp"
#include "cpdd/sparse.hpp"
#include "cpdd/studies.hpp"
#include "cpdd/subdomain.hpp"
#include "cpdd/transmission.hpp"

#endif  // CPDD_CPDD_HPP
