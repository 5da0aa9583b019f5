// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "experiments_internal.hpp"
#include "ipd/agent.hpp"
#include "ipd/error.hpp"

namespace ipd::experiments::detail {

void run_parallel(std::size_t count, int parallelism, const std::function<void(std::size_t)>& job) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  const auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, parallelism));
  if (threads == 1 || count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

void check_spec(const StrategySpec& spec, const std::string& context) {
  try {
    make_strategy(spec);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnknownStrategy || e.code() == ErrorCode::InvalidParams ||
        e.code() == ErrorCode::ConfigError) {
      fail(ErrorCode::ConfigError, context + ": " + e.what());
    }
    throw;
  }
}

void preflight_agents(const std::vector<StrategySpec>& specs) {
  for (const auto& spec : specs) {
    if (spec.name != "external_agent") continue;
    try {
      agent_preflight(agent_config_from_json(spec.params));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::AgentFailure) {
        fail(ErrorCode::AgentFailure, "preflight for " + spec.label() + " failed: " + e.what());
      }
      throw;
    }
  }
}

std::string file_stem(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    out += keep ? c : '_';
  }
  return out;
}

MatchRecord play(const StrategySpec& a_spec, const std::string& a_id, const StrategySpec& b_spec,
                 const std::string& b_id, const PayoffMatrix& m, const Horizon& h, std::uint64_t seed,
                 std::vector<Json>* transcript_a, std::vector<Json>* transcript_b) {
  auto a = make_strategy(a_spec);
  auto b = make_strategy(b_spec);
  a->set_id(a_id);
  b->set_id(b_id);
  auto record = play_match(*a, *b, m, h, seed);
  if (transcript_a) *transcript_a = a->transcript();
  if (transcript_b) *transcript_b = b->transcript();
  return record;
}

}  // namespace ipd::experiments::detail
