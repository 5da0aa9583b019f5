// SPDX-License-Identifier: Apache-2.0
#include "ipd/json_util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ipd::json_util {

namespace {

const Json& field(const Json& j, std::string_view key) {
  auto it = j.find(std::string(key));
  if (it == j.end()) fail(ErrorCode::ConfigError, "missing key \"" + std::string(key) + "\"");
  return *it;
}

}  // namespace

void expect_keys(const Json& j, std::string_view context,
                 std::initializer_list<std::string_view> required,
                 std::initializer_list<std::string_view> optional) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, std::string(context) + " must be a JSON object");
  for (auto key : required) {
    if (!j.contains(std::string(key))) {
      fail(ErrorCode::ConfigError,
           std::string(context) + ": missing key \"" + std::string(key) + "\"");
    }
  }
  for (const auto& [k, _] : j.items()) {
    auto known = [&](std::initializer_list<std::string_view> keys) {
      return std::find(keys.begin(), keys.end(), k) != keys.end();
    };
    if (!known(required) && !known(optional)) {
      fail(ErrorCode::ConfigError, std::string(context) + ": unknown key \"" + k + "\"");
    }
  }
}

double number(const Json& j, std::string_view key) {
  const auto& v = field(j, key);
  if (!v.is_number()) fail(ErrorCode::ConfigError, "\"" + std::string(key) + "\" must be a number");
  return v.get<double>();
}

int integer(const Json& j, std::string_view key) {
  const auto& v = field(j, key);
  if (!v.is_number_integer()) {
    fail(ErrorCode::ConfigError, "\"" + std::string(key) + "\" must be an integer");
  }
  auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    fail(ErrorCode::ConfigError, "\"" + std::string(key) + "\" out of range");
  }
  return static_cast<int>(x);
}

std::uint64_t unsigned64(const Json& j, std::string_view key) {
  const auto& v = field(j, key);
  if (!v.is_number_unsigned()) {
    fail(ErrorCode::ConfigError, "\"" + std::string(key) + "\" must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool boolean(const Json& j, std::string_view key) {
  const auto& v = field(j, key);
  if (!v.is_boolean()) fail(ErrorCode::ConfigError, "\"" + std::string(key) + "\" must be a boolean");
  return v.get<bool>();
}

std::string string(const Json& j, std::string_view key) {
  const auto& v = field(j, key);
  if (!v.is_string()) fail(ErrorCode::ConfigError, "\"" + std::string(key) + "\" must be a string");
  return v.get<std::string>();
}

void apply_override(Json& j, std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    fail(ErrorCode::ConfigError, "override must look like key.path=value: " + std::string(assignment));
  }
  std::string path(assignment.substr(0, eq));
  std::string raw(assignment.substr(eq + 1));

  Json value = Json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = raw;

  Json* node = &j;
  std::size_t start = 0;
  while (true) {
    auto dot = path.find('.', start);
    std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) fail(ErrorCode::ConfigError, "empty segment in override path " + path);
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(part);
      } catch (const std::exception&) {
        fail(ErrorCode::ConfigError, "override path " + path + " indexes an array with " + part);
      }
      if (idx >= node->size()) fail(ErrorCode::ConfigError, "override index out of range: " + path);
      node = &(*node)[idx];
    } else {
      if (!node->is_object()) {
        fail(ErrorCode::ConfigError, "override path " + path + " descends into a non-object");
      }
      node = &(*node)[part];
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

}  // namespace ipd::json_util
