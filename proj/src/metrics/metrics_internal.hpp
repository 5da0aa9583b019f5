// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "ipd/game.hpp"

namespace ipd::metrics {

// true = side a. Self-play records yield both sides.
std::vector<bool> sides_of(const MatchRecord& r, const std::string& player_id);

}  // namespace ipd::metrics
