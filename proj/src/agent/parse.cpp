// SPDX-License-Identifier: Apache-2.0
#include <cctype>
#include <optional>

#include "ipd/agent.hpp"
#include "ipd/error.hpp"

namespace ipd {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<Action> word_action(std::string_view word) {
  auto w = lower(word);
  if (w == "cooperate" || w == "c") return Action::C;
  if (w == "defect" || w == "d") return Action::D;
  return std::nullopt;
}

bool token_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

// Brace-balanced substring starting at `open`, skipping braces inside strings.
std::optional<std::string_view> balanced_object(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}' && --depth == 0) {
      return s.substr(open, i - open + 1);
    }
  }
  return std::nullopt;
}

std::optional<Action> structured_action(std::string_view raw) {
  std::optional<Action> found;
  for (std::size_t pos = raw.find('{'); pos != std::string_view::npos; pos = raw.find('{', pos + 1)) {
    auto obj = balanced_object(raw, pos);
    if (!obj) continue;
    auto j = Json::parse(*obj, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) continue;
    auto it = j.find("action");
    if (it == j.end() || !it->is_string()) continue;
    if (auto a = word_action(it->get<std::string>())) found = a;
  }
  return found;
}

}  // namespace

Action parse_action(std::string_view raw) {
  if (auto a = structured_action(raw)) return *a;

  std::optional<Action> last;
  std::size_t i = 0;
  while (i < raw.size()) {
    if (!token_char(raw[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < raw.size() && token_char(raw[j])) ++j;
    auto token = raw.substr(i, j - i);
    while (!token.empty() && token.front() == '\'') token.remove_prefix(1);
    while (!token.empty() && token.back() == '\'') token.remove_suffix(1);
    if (auto a = word_action(token)) last = a;
    i = j;
  }
  if (!last) {
    std::string excerpt(raw.substr(0, 120));
    fail(ErrorCode::UnparseableResponse, "no action token in response: \"" + excerpt + "\"");
  }
  return *last;
}

}  // namespace ipd
