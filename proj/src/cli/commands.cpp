// SPDX-License-Identifier: Apache-2.0
#include <fmt/format.h>
#include <pthread.h>
#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "ipd/agent.hpp"
#include "ipd/cli.hpp"
#include "ipd/error.hpp"
#include "ipd/experiments.hpp"
#include "ipd/json_util.hpp"
#include "ipd/metrics.hpp"
#include "ipd/session.hpp"

namespace ipd::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::vector<std::string> sets;
  bool force = false;
  int parallelism = 0;
  bool verbose = false;

  std::string records;
  std::string run_dir;
  std::string kind;
  std::string player;
  std::string bind = "127.0.0.1:8080";
  std::string state_dir = "sessions";
  std::string static_dir;
};

// Files a command may write into an output directory.
const std::vector<std::string> kOutputs = {"records.jsonl", "summary.json", "plots",       "transcripts",
                                           "table2.csv",    "metrics.csv",  "metrics.json"};

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::OrderingViolation:
    case ErrorCode::UnknownStrategy:
    case ErrorCode::InvalidParams:
    case ErrorCode::TemplateError:
    case ErrorCode::MissingSeries:
    case ErrorCode::UnknownPlayer:
      return kConfigError;
    case ErrorCode::AgentFailure:
      return kAgentFailure;
    case ErrorCode::IoError:
    case ErrorCode::SchemaVersionMismatch:
    case ErrorCode::InsufficientData:
      return kIoError;
    case ErrorCode::BindError:
      return kBindError;
    default:
      return kUnexpected;
  }
}

Json load_config(const Options& o) {
  if (o.config.empty()) fail(ErrorCode::ConfigError, "--config is required");
  std::ifstream in(o.config);
  if (!in) fail(ErrorCode::ConfigError, "cannot read config " + o.config);
  std::stringstream ss;
  ss << in.rdbuf();
  auto j = Json::parse(ss.str(), nullptr, false, true);
  if (j.is_discarded()) fail(ErrorCode::ConfigError, o.config + " is not valid JSON");
  for (const auto& s : o.sets) json_util::apply_override(j, s);
  if (o.parallelism > 0) j["parallelism"] = o.parallelism;
  return j;
}

void prepare_out(const Options& o) {
  if (o.out.empty()) fail(ErrorCode::ConfigError, "--out is required");
  const fs::path dir(o.out);
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) fail(ErrorCode::IoError, o.out + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!o.force) {
        fail(ErrorCode::IoError, "output directory " + o.out + " is not empty (use --force to overwrite)");
      }
      for (const auto& name : kOutputs) fs::remove_all(dir / name);
    }
  }
  fs::create_directories(dir);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) fail(ErrorCode::IoError, "cannot write " + path.string());
}

std::string pm(const std::vector<double>& xs, double scale, int digits) {
  if (xs.empty()) return "n/a";
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0;
  for (double x : xs) var += (x - mean) * (x - mean);
  const double sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
  return fmt::format("{:.{}f} ± {:.{}f}", mean * scale, digits, sd * scale, digits);
}

std::size_t count_failures(std::span<const MatchRecord> records, std::ostream& err) {
  std::size_t n = 0;
  for (const auto& r : records) {
    if (!r.failed()) continue;
    ++n;
    auto it = r.metadata.find("failure");
    err << "agent failure: " << r.player_a_id << " vs " << r.player_b_id << " (seed " << r.seed
        << "): " << (it == r.metadata.end() ? "" : it->second) << "\n";
  }
  return n;
}

int cmd_tournament(const Options& o, std::ostream& out, std::ostream& err) {
  auto cfg = experiments::tournament_config_from_json(load_config(o));
  prepare_out(o);
  if (o.verbose) {
    err << "running " << cfg.players.size() << " players, " << cfg.seeds_per_pairing
        << " seeds per pairing\n";
  }
  auto result = experiments::run_round_robin(cfg);
  experiments::persist(result, o.out);
  for (auto kind : experiments::available_plots(result)) {
    try {
      experiments::emit_plot_data(result, kind,
                                  fs::path(o.out) / "plots" / (std::string(plot_kind_name(kind)) + ".csv"));
    } catch (const Error& e) {
      if (o.verbose) err << "skipping " << plot_kind_name(kind) << " plot: " << e.what() << "\n";
    }
  }

  out << fmt::format("{:<4} {:<40} {:>10} {:>6} {:>6} {:>6}\n", "#", "Player", "Score/rnd", "Wins",
                     "Ties", "Losses");
  int rank = 0;
  for (const auto& row : result.ranking) {
    out << fmt::format("{:<4} {:<40} {:>10.4f} {:>6} {:>6} {:>6}\n", ++rank, row.player,
                       row.mean_score_per_round, row.wins, row.ties, row.losses);
  }
  out << result.records.size() << " matches written to " << o.out << "\n";
  return count_failures(result.records, err) > 0 ? kAgentFailure : kOk;
}

int cmd_switch(const Options& o, std::ostream& out, std::ostream& err) {
  auto cfg = experiments::switch_config_from_json(load_config(o));
  prepare_out(o);
  auto result = experiments::run_switch_battery(cfg);
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  experiments::persist(result, o.out);
  for (auto kind : experiments::available_plots(result)) {
    try {
      experiments::emit_plot_data(result, kind,
                                  fs::path(o.out) / "plots" / (std::string(plot_kind_name(kind)) + ".csv"));
    } catch (const Error& e) {
      if (o.verbose) err << "skipping " << plot_kind_name(kind) << " plot: " << e.what() << "\n";
    }
  }

  out << "Subject: " << result.subject_id << " (window " << cfg.window << ", epsilon " << cfg.epsilon
      << ", " << cfg.seeds << " seeds)\n";
  out << fmt::format("{:<24} {:>8} {:>20} {:>20} {:>18}\n", "Condition", "Speed", "Adaptation Speed",
                     "Coop. Rate (%)", "Payoff");
  for (const auto& c : result.conditions) {
    if (!c.report) {
      out << fmt::format("{:<24} {}\n", c.condition.label, c.report_error);
      continue;
    }
    const auto& rep = *c.report;
    std::vector<double> speeds;
    for (const auto& s : rep.per_record_speed) {
      if (s) speeds.push_back(*s);
    }
    out << fmt::format("{:<24} {:>8} {:>20} {:>20} {:>18}\n", c.condition.label,
                       rep.adaptation_speed ? std::to_string(*rep.adaptation_speed) : "n/a",
                       pm(speeds, 1.0, 1), pm(rep.per_record_post_rate, 100.0, 1),
                       pm(rep.per_record_post_payoff, 1.0, 2));
  }
  return count_failures(result.all_records(), err) > 0 ? kAgentFailure : kOk;
}

int cmd_metrics(const Options& o, std::ostream& out, std::ostream&) {
  if (o.records.empty()) fail(ErrorCode::ConfigError, "a records file is required");
  const fs::path path(o.records);
  auto records = experiments::read_records(path);
  if (records.empty()) fail(ErrorCode::IoError, o.records + " holds no records");

  std::optional<std::vector<std::string>> players;
  const auto summary_path = path.parent_path() / "summary.json";
  if (fs::exists(summary_path)) {
    std::ifstream in(summary_path);
    auto s = Json::parse(in, nullptr, false);
    if (!s.is_discarded() && s.contains("metrics") && s["metrics"].is_object() &&
        s["metrics"].contains("players")) {
      players = s["metrics"]["players"].get<std::vector<std::string>>();
    }
  }
  auto report = metrics::compute_metrics(records, players);
  prepare_out(o);
  const fs::path dir(o.out);
  const auto table = metrics::table_csv(report);
  write_file(dir / "table2.csv", table);
  write_file(dir / "metrics.csv", metrics::metrics_csv(report));
  write_file(dir / "metrics.json", metrics::to_json(report).dump(2) + "\n");
  out << table;
  return kOk;
}

int cmd_agent_check(const Options& o, std::ostream& out, std::ostream& err) {
  auto j = load_config(o);
  j.erase("parallelism");
  if (j.is_object() && j.contains("params") && j["params"].is_object()) j = Json(j["params"]);
  const auto cfg = agent_config_from_json(j);
  try {
    auto r = agent_preflight(cfg);
    out << "action: " << to_char(r.action) << "\n"
        << "latency_ms: " << r.latency.count() << "\n"
        << "retries: " << r.retry_count << "\n"
        << "raw: " << r.raw.substr(0, 200) << "\n";
    return kOk;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AgentFailure && e.code() != ErrorCode::UnparseableResponse) throw;
    err << "agent check failed: " << e.what() << "\n";
    return kAgentCheckFailed;
  }
}

int cmd_plot(const Options& o, std::ostream& out, std::ostream&) {
  if (o.run_dir.empty()) fail(ErrorCode::ConfigError, "--run is required");
  if (o.out.empty()) fail(ErrorCode::ConfigError, "--out is required");
  const auto kind = experiments::plot_kind_from_string(o.kind);
  if (fs::exists(o.out) && !o.force) fail(ErrorCode::IoError, o.out + " exists (use --force to overwrite)");
  if (experiments::result_kind(o.run_dir) == "tournament") {
    auto r = experiments::load_tournament(o.run_dir);
    std::optional<std::string> focal;
    if (!o.player.empty()) focal = o.player;
    experiments::emit_plot_data(r, kind, o.out, focal);
  } else {
    experiments::emit_plot_data(experiments::load_switch(o.run_dir), kind, o.out);
  }
  out << "wrote " << o.out << "\n";
  return kOk;
}

int cmd_serve(const Options& o, std::ostream& out, std::ostream&) {
  const auto colon = o.bind.rfind(':');
  if (colon == std::string::npos) fail(ErrorCode::ConfigError, "--bind must be host:port");
  const std::string host = o.bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(o.bind.substr(colon + 1));
  } catch (const std::exception&) {
    fail(ErrorCode::ConfigError, "invalid port in --bind");
  }

  // Signals are taken by a dedicated thread so shutdown runs outside a handler.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  session::ManagerOptions mo;
  mo.state_dir = o.state_dir;
  session::SessionManager manager(mo);
  std::optional<fs::path> static_dir;
  if (!o.static_dir.empty()) static_dir = o.static_dir;
  session::SessionServer server(manager, static_dir);
  const int bound = server.bind(host, port);
  out << "serving on http://" << host << ":" << bound << " (state in " << o.state_dir << ")" << std::endl;

  std::atomic<bool> done{false};
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  server.listen();
  done = true;
  ::kill(::getpid(), SIGTERM);  // releases the waiter if listen ended on its own
  waiter.join();
  out << "stopped" << std::endl;
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Iterated prisoner's dilemma laboratory", "ipdlab"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&](CLI::App* sub, bool config) {
    if (config) {
      sub->add_option("--config", o.config, "JSON config file")->required();
      sub->add_option("--set", o.sets, "dotted-path override key=value (repeatable)");
    }
    sub->add_flag("--verbose", o.verbose, "progress on stderr");
  };

  auto* tournament = app.add_subcommand("tournament", "run a round-robin tournament");
  common(tournament, true);
  tournament->add_option("--out", o.out, "run directory")->required();
  tournament->add_flag("--force", o.force, "overwrite outputs in a non-empty run directory");
  tournament->add_option("--parallelism", o.parallelism, "concurrent matches")->check(CLI::PositiveNumber);

  auto* sw = app.add_subcommand("switch", "run a strategy-switch battery");
  common(sw, true);
  sw->add_option("--out", o.out, "run directory")->required();
  sw->add_flag("--force", o.force, "overwrite outputs in a non-empty run directory");
  sw->add_option("--parallelism", o.parallelism, "concurrent matches")->check(CLI::PositiveNumber);

  auto* met = app.add_subcommand("metrics", "recompute metrics from a records file");
  common(met, false);
  met->add_option("records", o.records, "records.jsonl")->required();
  met->add_option("--out", o.out, "output directory")->required();
  met->add_flag("--force", o.force, "overwrite outputs in a non-empty directory");

  auto* check = app.add_subcommand("agent-check", "send one synthetic move request to an agent");
  common(check, true);

  auto* serve = app.add_subcommand("serve", "host the live session service");
  common(serve, false);
  serve->add_option("--bind", o.bind, "host:port")->capture_default_str();
  serve->add_option("--state-dir", o.state_dir, "session log directory")->capture_default_str();
  serve->add_option("--static", o.static_dir, "directory with a built web client");

  auto* plot = app.add_subcommand("plot", "emit plot data from a run directory");
  common(plot, false);
  plot->add_option("--run", o.run_dir, "run directory")->required();
  plot->add_option("--kind", o.kind, "win_series, coop_series, recovery, overlay or rankings")->required();
  plot->add_option("--out", o.out, "CSV file")->required();
  plot->add_option("--player", o.player, "focal player for win_series");
  plot->add_flag("--force", o.force, "overwrite an existing file");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    if (tournament->parsed()) return cmd_tournament(o, out, err);
    if (sw->parsed()) return cmd_switch(o, out, err);
    if (met->parsed()) return cmd_metrics(o, out, err);
    if (check->parsed()) return cmd_agent_check(o, out, err);
    if (serve->parsed()) return cmd_serve(o, out, err);
    if (plot->parsed()) return cmd_plot(o, out, err);
  } catch (const Error& e) {
    err << "error [" << code_name(e.code()) << "]: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error [IoError]: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUnexpected;
  }
  return kConfigError;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace ipd::cli
