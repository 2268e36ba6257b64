#pragma once

// Umbrella header for the LM-RSP simulator and analysis toolkit.

#include "capacity.hpp"
#include "channel.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "io.hpp"
#include "lp.hpp"
#include "parallel.hpp"
#include "policy.hpp"
#include "queueing.hpp"
#include "rates.hpp"
#include "rng.hpp"
#include "topology.hpp"
