#pragma once

// Subcommand driver: one JSON config in, JSON/CSV/text files out.
// Exit codes: 0 all requested checks pass, 1 some check failed,
// 2 invalid config or input, 3 computation error.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fracshape/io.hpp"

namespace fracshape::cli {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct CommandResult {
  std::vector<Check> checks;
  std::vector<std::filesystem::path> written;

  bool all_pass() const;
};

/// Raised for config schema violations; the message names the field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Runs one command. Relative paths inside `config` resolve against `base_dir`.
/// Throws ConfigError for schema violations and Error for failed computations.
CommandResult run_command(const std::string& command, const io::Json& config, const std::filesystem::path& base_dir,
                          const std::filesystem::path& out_dir);

/// Full command line: `<cmd> --config <path> --out <dir> [--threads N]`.
/// Failing check names go to `err`, one per line.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fracshape::cli
