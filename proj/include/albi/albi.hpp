#pragma once

#include "albi/bias.hpp"
#include "albi/config.hpp"
#include "albi/core.hpp"
#include "albi/errors.hpp"
#include "albi/harness.hpp"
#include "albi/ingest.hpp"
#include "albi/io.hpp"
#include "albi/learner.hpp"
#include "albi/metrics.hpp"
#include "albi/rng.hpp"
#include "albi/strategies.hpp"
