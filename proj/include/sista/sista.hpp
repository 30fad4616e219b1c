#pragma once

// Learning sparse parametric transport costs from an observed plan.

#include "sista/bench.hpp"
#include "sista/bundle.hpp"
#include "sista/error.hpp"
#include "sista/inference.hpp"
#include "sista/matrix_io.hpp"
#include "sista/ot_core.hpp"
#include "sista/preprocess.hpp"
#include "sista/problem.hpp"
#include "sista/prox.hpp"
#include "sista/solvers.hpp"
#include "sista/types.hpp"
