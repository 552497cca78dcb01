#pragma once

#include "silt/chaos.hpp"
#include "silt/checks.hpp"
#include "silt/clark.hpp"
#include "silt/config.hpp"
#include "silt/error.hpp"
#include "silt/experiments.hpp"
#include "silt/function_space.hpp"
#include "silt/gram.hpp"
#include "silt/gram_matrix.hpp"
#include "silt/local_time.hpp"
#include "silt/monte_carlo.hpp"
#include "silt/operators.hpp"
#include "silt/quadrature.hpp"
#include "silt/sampler.hpp"
#include "silt/simplex.hpp"
#include "silt/special.hpp"
