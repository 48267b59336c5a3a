#pragma once

#include "exitsim/dataset.hpp"
#include "exitsim/errors.hpp"
#include "exitsim/exit_engine.hpp"
#include "exitsim/io.hpp"
#include "exitsim/metrics.hpp"
#include "exitsim/overlay.hpp"
#include "exitsim/presets.hpp"
#include "exitsim/rng.hpp"
#include "exitsim/search.hpp"
#include "exitsim/types.hpp"
#include "exitsim/version.hpp"
