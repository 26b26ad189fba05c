#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

namespace wosno::cli {

// Entry point of the `wosno` tool. Exit status: 0 success, 1 usage or
// configuration error, 2 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Parses config text; syntax errors report line and column.
nlohmann::json parse_config(const std::string& text, const std::string& source);

// Applies "a.b.c=value". The value is read as JSON when it parses, otherwise
// as a string.
void apply_override(nlohmann::json& config, std::string_view assignment);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);

// Hash of the canonical config dump, ignoring the worker count.
std::string config_hash(const nlohmann::json& config);

// "# wosno <version> seed=<seed> workers=<workers> config_hash=<hash>"
std::string header_line(const nlohmann::json& config);

// Worker count: the config's "workers" if set, else WOSNO_WORKERS, else 1.
int resolve_workers(const nlohmann::json& config);

}  // namespace wosno::cli
