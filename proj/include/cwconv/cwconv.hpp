#pragma once

#include "cwconv/analysis.hpp"
#include "cwconv/config.hpp"
#include "cwconv/energy.hpp"
#include "cwconv/graph.hpp"
#include "cwconv/multiagent.hpp"
#include "cwconv/number_format.hpp"
#include "cwconv/potential.hpp"
#include "cwconv/report.hpp"
#include "cwconv/scenarios.hpp"
#include "cwconv/seeding.hpp"
#include "cwconv/trajectory.hpp"
