#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace lrukit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitNumerical = 2;

/// Subcommand names accepted by run_cli.
const std::vector<std::string>& cli_subcommands();

/// Default RunConfig for a subcommand: seed, output_dir, threads, model, ring, optim and
/// task {name, params}.
nlohmann::json default_run_config(const std::string& subcommand);

/// Merges `overlay` into `base`. Every key of overlay must already exist in base and
/// scalar types must match; violations throw InvalidInput naming the dotted path.
void merge_config(nlohmann::json& base, const nlohmann::json& overlay, const std::string& path = "");

/// Sets a dotted path ("ring.r_max") from a command-line string. The text is parsed as
/// JSON when possible, otherwise taken as a string.
void apply_override(nlohmann::json& config, const std::string& dotted, const std::string& text);

/// Entry point: argv[1] is the subcommand. Returns 0 on success, 1 on validation errors
/// and 2 on numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lrukit
