// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <map>
#include <sstream>

#include "experiments_internal.hpp"
#include "ipd/error.hpp"

namespace ipd::experiments {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + file.string());
  out << text;
  if (!out) fail(ErrorCode::IoError, "write failed for " + file.string());
}

Json read_json(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto j = Json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::IoError, file.string() + " is not valid JSON");
  return j;
}

Json failures_json(std::span<const MatchRecord> records) {
  Json matches = Json::array();
  for (const auto& r : records) {
    if (!r.failed()) continue;
    auto it = r.metadata.find("failure");
    matches.push_back({{"player_a", r.player_a_id},
                       {"player_b", r.player_b_id},
                       {"seed", r.seed},
                       {"rounds_played", r.rounds.size()},
                       {"message", it == r.metadata.end() ? "" : it->second}});
  }
  return Json{{"count", matches.size()}, {"matches", std::move(matches)}};
}

void write_transcripts(const std::vector<Transcript>& transcripts, const fs::path& dir) {
  if (transcripts.empty()) return;
  const auto tdir = dir / "transcripts";
  fs::create_directories(tdir);
  for (const auto& t : transcripts) {
    std::string text;
    for (const auto& line : t.lines) text += line.dump() + "\n";
    write_text(tdir / (t.name + ".jsonl"), text);
  }
}

Json load_summary(const fs::path& dir, const std::string& kind, int reader_version) {
  auto j = read_json(dir / "summary.json");
  if (!j.is_object() || !j.contains("v") || !j["v"].is_number_integer()) {
    fail(ErrorCode::IoError, "summary.json has no schema version");
  }
  const int v = j["v"].get<int>();
  if (v != reader_version) {
    fail(ErrorCode::SchemaVersionMismatch, "summary schema v" + std::to_string(v) +
                                               " cannot be read by v" + std::to_string(reader_version) +
                                               " reader");
  }
  if (j.value("kind", "") != kind) {
    fail(ErrorCode::IoError, "summary.json holds a " + j.value("kind", std::string("unknown")) +
                                 " result, expected " + kind);
  }
  return j;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

std::vector<MatchRecord> read_records(const fs::path& file, int reader_version) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + file.string());
  std::vector<MatchRecord> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    auto j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      fail(ErrorCode::IoError, file.string() + " line " + std::to_string(number) + ": malformed JSON");
    }
    try {
      out.push_back(record_from_json(j, reader_version));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::SchemaVersionMismatch) throw;
      fail(ErrorCode::IoError, file.string() + " line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

void write_records(const std::vector<MatchRecord>& records, const fs::path& file) {
  std::string text;
  for (const auto& r : records) text += record_to_line(r) + "\n";
  write_text(file, text);
}

Json summary_json(const TournamentResult& r) {
  Json ranking = Json::array();
  for (const auto& row : r.ranking) ranking.push_back(to_json(row));
  return Json{{"v", kSummarySchemaVersion},
              {"kind", "tournament"},
              {"config", to_json(r.config)},
              {"players", r.players},
              {"record_count", r.records.size()},
              {"ranking", std::move(ranking)},
              {"metrics", metrics::to_json(r.metrics)},
              {"failures", failures_json(r.records)}};
}

Json summary_json(const SwitchExperimentResult& r) {
  Json conditions = Json::array();
  for (const auto& c : r.conditions) {
    Json cj{{"label", c.condition.label},
            {"opponent", c.opponent_id},
            {"switch_round", c.condition.switch_round},
            {"record_count", c.records.size()}};
    if (c.report) {
      cj["report"] = metrics::to_json(*c.report);
    } else {
      cj["error"] = c.report_error;
    }
    conditions.push_back(std::move(cj));
  }
  const auto all = r.all_records();
  return Json{{"v", kSummarySchemaVersion},
              {"kind", "switch"},
              {"config", to_json(r.config)},
              {"subject", r.subject_id},
              {"conditions", std::move(conditions)},
              {"skipped", r.warnings},
              {"metrics", all.empty() ? Json(nullptr) : metrics::to_json(r.metrics)},
              {"failures", failures_json(all)}};
}

void persist(const TournamentResult& r, const fs::path& dir) {
  ensure_dir(dir);
  write_records(r.records, dir / "records.jsonl");
  write_text(dir / "summary.json", summary_json(r).dump(2) + "\n");
  write_transcripts(r.transcripts, dir);
}

void persist(const SwitchExperimentResult& r, const fs::path& dir) {
  ensure_dir(dir);
  write_records(r.all_records(), dir / "records.jsonl");
  write_text(dir / "summary.json", summary_json(r).dump(2) + "\n");
  write_transcripts(r.transcripts, dir);
}

std::string result_kind(const fs::path& dir) {
  auto j = read_json(dir / "summary.json");
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    fail(ErrorCode::IoError, "summary.json has no result kind");
  }
  return j["kind"].get<std::string>();
}

TournamentResult load_tournament(const fs::path& dir, int reader_version) {
  const auto summary = load_summary(dir, "tournament", reader_version);
  TournamentResult r;
  try {
    r.config = tournament_config_from_json(summary.at("config"));
  } catch (const Error& e) {
    fail(ErrorCode::IoError, std::string("summary.json config: ") + e.what());
  } catch (const Json::exception& e) {
    fail(ErrorCode::IoError, std::string("summary.json: ") + e.what());
  }
  r.players = player_ids(r.config.players);
  r.records = read_records(dir / "records.jsonl");
  r.ranking = compute_ranking(r.records, r.players);
  r.metrics = metrics::compute_metrics(r.records, r.players);
  if (summary_json(r) != summary) {
    fail(ErrorCode::IoError, "summary.json does not match the records in " + dir.string());
  }
  return r;
}

SwitchExperimentResult load_switch(const fs::path& dir, int reader_version) {
  const auto summary = load_summary(dir, "switch", reader_version);
  SwitchExperimentResult r;
  try {
    r.config = switch_config_from_json(summary.at("config"));
    r.subject_id = summary.at("subject").get<std::string>();
    r.warnings = summary.at("skipped").get<std::vector<std::string>>();
    std::map<std::string, std::string> opponents;
    for (const auto& cj : summary.at("conditions")) {
      opponents[cj.at("label").get<std::string>()] = cj.at("opponent").get<std::string>();
    }
    for (const auto& c : r.config.conditions) {
      auto it = opponents.find(c.label);
      if (it == opponents.end()) continue;
      ConditionResult cr;
      cr.condition = c;
      cr.opponent_id = it->second;
      r.conditions.push_back(std::move(cr));
    }
  } catch (const Error& e) {
    fail(ErrorCode::IoError, std::string("summary.json config: ") + e.what());
  } catch (const Json::exception& e) {
    fail(ErrorCode::IoError, std::string("summary.json: ") + e.what());
  }

  for (auto& rec : read_records(dir / "records.jsonl")) {
    auto it = rec.metadata.find("condition");
    ConditionResult* target = nullptr;
    for (auto& c : r.conditions) {
      if (it != rec.metadata.end() && c.condition.label == it->second) target = &c;
    }
    if (!target) fail(ErrorCode::IoError, "record without a known condition label");
    target->records.push_back(std::move(rec));
  }
  for (auto& c : r.conditions) {
    try {
      c.report = metrics::adaptation_report(c.records, r.subject_id, r.config.window, r.config.epsilon);
    } catch (const Error& e) {
      c.report_error = e.what();
    }
  }
  const auto all = r.all_records();
  if (!all.empty()) r.metrics = metrics::compute_metrics(all);
  if (summary_json(r) != summary) {
    fail(ErrorCode::IoError, "summary.json does not match the records in " + dir.string());
  }
  return r;
}

bool equivalent(const TournamentResult& a, const TournamentResult& b) {
  return a.records == b.records && summary_json(a) == summary_json(b);
}

bool equivalent(const SwitchExperimentResult& a, const SwitchExperimentResult& b) {
  return a.all_records() == b.all_records() && summary_json(a) == summary_json(b);
}

}  // namespace ipd::experiments
