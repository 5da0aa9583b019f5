// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ipd/experiments.hpp"

namespace ipd::experiments::detail {

// Runs job(i) for i in [0, count) on up to `parallelism` threads. The first
// exception thrown by any job is rethrown after all workers stop.
void run_parallel(std::size_t count, int parallelism, const std::function<void(std::size_t)>& job);

// Instantiates the spec once; catalog errors become ConfigError.
void check_spec(const StrategySpec& spec, const std::string& context);

// Pings every external-agent spec once with a synthetic history.
void preflight_agents(const std::vector<StrategySpec>& specs);

std::string file_stem(const std::string& s);

// Plays one match with fresh players, appending agent transcripts.
MatchRecord play(const StrategySpec& a_spec, const std::string& a_id, const StrategySpec& b_spec,
                 const std::string& b_id, const PayoffMatrix& m, const Horizon& h, std::uint64_t seed,
                 std::vector<Json>* transcript_a, std::vector<Json>* transcript_b);

}  // namespace ipd::experiments::detail
