#pragma once

#include "edhdp/agent.hpp"
#include "edhdp/analysis.hpp"
#include "edhdp/approximator.hpp"
#include "edhdp/errors.hpp"
#include "edhdp/experiment.hpp"
#include "edhdp/plant.hpp"
#include "edhdp/simulation.hpp"
#include "edhdp/sweep.hpp"
#include "edhdp/trace_csv.hpp"
#include "edhdp/trigger.hpp"
