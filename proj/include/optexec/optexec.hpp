#pragma once

#include "optexec/numeric.hpp"
#include "optexec/csv.hpp"
#include "optexec/parallel.hpp"
#include "optexec/impact_model.hpp"
#include "optexec/price_dynamics.hpp"
#include "optexec/strategy.hpp"
#include "optexec/dp_engine.hpp"
#include "optexec/analytic_solutions.hpp"
#include "optexec/hjb_checker.hpp"
#include "optexec/mc_simulator.hpp"
#include "optexec/experiments.hpp"
