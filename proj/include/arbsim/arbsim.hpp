#pragma once

#include "arbsim/errors.hpp"
#include "arbsim/mac_timing.hpp"
#include "arbsim/backoff.hpp"
#include "arbsim/analytic.hpp"
#include "arbsim/simulator.hpp"
#include "arbsim/config.hpp"
#include "arbsim/report.hpp"
#include "arbsim/runner.hpp"
