#pragma once

#include "bench.hpp"
#include "cubature.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "laplace.hpp"
#include "models.hpp"
#include "objective.hpp"
#include "optimize.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
