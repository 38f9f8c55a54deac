#pragma once

#include "chaotic_market/chaos_core.hpp"
#include "chaotic_market/config.hpp"
#include "chaotic_market/csv.hpp"
#include "chaotic_market/errors.hpp"
#include "chaotic_market/market_engine.hpp"
#include "chaotic_market/runner.hpp"
#include "chaotic_market/stats_analysis.hpp"
#include "chaotic_market/version.hpp"
