// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "ipd/agent.hpp"
#include "ipd/game.hpp"
#include "ipd/strategy.hpp"

namespace ipd::test {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "ipd") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline StrategySpec spec(const std::string& name, Json params = Json::object()) {
  return StrategySpec{name, std::move(params)};
}

inline MatchRecord play(const StrategySpec& a, const StrategySpec& b, const Horizon& h, std::uint64_t seed,
                        const PayoffMatrix& m = PayoffMatrix::classic()) {
  auto pa = make_strategy(a);
  auto pb = make_strategy(b);
  pa->set_id(a.label());
  pb->set_id(b.label());
  return play_match(*pa, *pb, m, h, seed);
}

// Command line for the test agent helper in the given mode.
inline std::string agent_command(const std::string& mode = "") {
  std::string cmd = IPD_TEST_AGENT;
  if (!mode.empty()) cmd += " " + mode;
  return cmd;
}

inline StrategySpec subprocess_agent_spec(const std::string& mode = "", int timeout_ms = 5000) {
  return spec("external_agent", Json{{"kind", "subprocess"},
                                     {"address", agent_command(mode)},
                                     {"timeout_ms", timeout_ms},
                                     {"max_retries", 1}});
}

}  // namespace ipd::test
