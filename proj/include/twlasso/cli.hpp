#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace twlasso {

/// Flat key=value settings after merging the config file and flags.
struct RunConfig {
  std::string subcommand;  // simulate, estimate or weights
  std::map<std::string, std::string> values;
  std::optional<std::string> out_path;
  std::string format = "json";  // or csv
  int threads = 1;
  std::optional<std::uint64_t> seed;
};

/// Parses `key = value` lines; '#' starts a comment. Throws ConfigError
/// naming `source` and the line for malformed or repeated keys.
std::map<std::string, std::string> parse_config_text(std::string_view text,
                                                     const std::string& source);

/// Keys accepted by a subcommand (including out, format, threads, seed).
const std::vector<std::string>& known_keys(const std::string& subcommand);

/// Throws ConfigError naming the first unknown key or missing required key.
void validate_config(const RunConfig& config);

/// Executes a validated config. Data goes to `out` (or the output file),
/// diagnostics to `err`.
void run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Full command-line entry point. Returns 0 on success, 1 for user errors
/// (bad flags, config, input data, estimation failures), 2 otherwise.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace twlasso
