#pragma once

// Umbrella header for the dependency-graph scheduling library.

#include "dgsched/time.hpp"
#include "dgsched/task_model.hpp"
#include "dgsched/jobshop.hpp"
#include "dgsched/solver.hpp"
#include "dgsched/depgraph.hpp"
#include "dgsched/scheduler.hpp"
#include "dgsched/tickets.hpp"
#include "dgsched/generator.hpp"
#include "dgsched/oracle.hpp"
#include "dgsched/harness.hpp"
