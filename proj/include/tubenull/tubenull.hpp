#pragma once

#include "tubenull/convex_code.hpp"
#include "tubenull/curves.hpp"
#include "tubenull/dyadic.hpp"
#include "tubenull/errors.hpp"
#include "tubenull/fibers.hpp"
#include "tubenull/fractal.hpp"
#include "tubenull/gauge.hpp"
#include "tubenull/geometry.hpp"
#include "tubenull/intersection.hpp"
#include "tubenull/nets.hpp"
#include "tubenull/parallel.hpp"
#include "tubenull/projection.hpp"
#include "tubenull/quadrature.hpp"
#include "tubenull/rng.hpp"
#include "tubenull/stats.hpp"
