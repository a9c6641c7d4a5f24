#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pfn/core/error.hpp"

namespace pfn::app {

enum ExitCode : int { ok = 0, failure = 1, usage = 2, data = 3, capacity = 4 };

int exit_code(ErrorKind kind);

/// Flags shared by every subcommand; set flags override the config file.
struct Flags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> checkpoint;
  std::optional<std::string> out;
  std::optional<std::string> bid;
  std::optional<std::string> view;
  std::optional<std::string> scenario;
  std::vector<std::string> inputs;  // positional arguments
};

/// Loads the config named by --config. A run manifest is accepted too; its
/// recorded config is used, so any run can be repeated from its manifest.
nlohmann::json load_config(const Flags& flags);

/// Output directory (--out, then config "out", then ".").
std::filesystem::path output_dir(const Flags& flags, const nlohmann::json& config);

/// Records the resolved config and a fingerprint of every output file.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const nlohmann::json& config,
                    const std::vector<std::filesystem::path>& outputs, const nlohmann::json& extra = {});

int cmd_pretrain(const Flags& flags, std::ostream& out);
int cmd_synth(const Flags& flags, std::ostream& out);
int cmd_bench1(const Flags& flags, std::ostream& out);
int cmd_bench2(const Flags& flags, std::ostream& out);
int cmd_impute(const Flags& flags, std::ostream& out);
int cmd_report(const Flags& flags, std::ostream& out);

/// Full command line entry point: args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pfn::app
