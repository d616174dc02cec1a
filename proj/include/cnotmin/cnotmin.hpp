#pragma once

#include <string_view>

#include "cnotmin/bench.hpp"
#include "cnotmin/core.hpp"
#include "cnotmin/env.hpp"
#include "cnotmin/exact.hpp"
#include "cnotmin/heuristics.hpp"
#include "cnotmin/io.hpp"
#include "cnotmin/mcts.hpp"
#include "cnotmin/nnet.hpp"
#include "cnotmin/topology.hpp"
#include "cnotmin/trainer.hpp"

namespace cnotmin {

inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace cnotmin
