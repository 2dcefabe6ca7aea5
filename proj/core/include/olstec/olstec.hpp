#pragma once

#include "olstec/baselines.hpp"
#include "olstec/bench.hpp"
#include "olstec/errors.hpp"
#include "olstec/io.hpp"
#include "olstec/metrics.hpp"
#include "olstec/model.hpp"
#include "olstec/rng.hpp"
#include "olstec/synth.hpp"
#include "olstec/tracker.hpp"
