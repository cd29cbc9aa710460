#pragma once

#include "superbunch/analytics.hpp"
#include "superbunch/bessel.hpp"
#include "superbunch/config.hpp"
#include "superbunch/detection.hpp"
#include "superbunch/errors.hpp"
#include "superbunch/fitting.hpp"
#include "superbunch/io.hpp"
#include "superbunch/parallel.hpp"
#include "superbunch/paths.hpp"
#include "superbunch/pipeline.hpp"
#include "superbunch/random.hpp"
#include "superbunch/speckle.hpp"
#include "superbunch/stats.hpp"
#include "superbunch/types.hpp"
