#pragma once

#include "tbd/association.hpp"
#include "tbd/dynamics.hpp"
#include "tbd/errors.hpp"
#include "tbd/harness.hpp"
#include "tbd/io.hpp"
#include "tbd/measurement.hpp"
#include "tbd/metrics.hpp"
#include "tbd/random.hpp"
#include "tbd/rfs_core.hpp"
#include "tbd/simulator.hpp"
#include "tbd/tmb.hpp"
#include "tbd/ttombp.hpp"
#include "tbd/update.hpp"
