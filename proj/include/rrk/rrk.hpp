#pragma once

#include "rrk/core.hpp"
#include "rrk/random.hpp"
#include "rrk/quadrature.hpp"
#include "rrk/solvers.hpp"
#include "rrk/problems.hpp"
#include "rrk/harness.hpp"
#include "rrk/io.hpp"
