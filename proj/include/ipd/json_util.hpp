// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include "ipd/error.hpp"
#include "json.hpp"

// Strict accessors for hand-written config and record files. Every failure
// is a ConfigError naming the offending key.
namespace ipd::json_util {

using Json = nlohmann::json;

void expect_keys(const Json& j, std::string_view context,
                 std::initializer_list<std::string_view> required,
                 std::initializer_list<std::string_view> optional);

double number(const Json& j, std::string_view key);
int integer(const Json& j, std::string_view key);
std::uint64_t unsigned64(const Json& j, std::string_view key);
bool boolean(const Json& j, std::string_view key);
std::string string(const Json& j, std::string_view key);

// Applies a dotted-path override ("horizon.rounds=100"). The value is parsed
// as JSON when possible, otherwise taken as a string.
void apply_override(Json& j, std::string_view assignment);

}  // namespace ipd::json_util
