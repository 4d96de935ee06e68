#pragma once

#include "l2disc/error.hpp"
#include "l2disc/rng.hpp"
#include "l2disc/core.hpp"
#include "l2disc/io.hpp"
#include "l2disc/constraints.hpp"
#include "l2disc/uvc.hpp"
#include "l2disc/metrics.hpp"
#include "l2disc/walk.hpp"
#include "l2disc/komlos.hpp"
#include "l2disc/conc.hpp"
#include "l2disc/baselines.hpp"
#include "l2disc/report.hpp"
#include "l2disc/bench.hpp"
