#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "avgopt/config.hpp"

namespace avgopt {

/// Raised for bad subcommand names or configs that do not suit the command.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommandResult {
  std::string summary;                 // human-readable report
  std::vector<std::string> artifacts;  // file names under the output directory
};

const std::vector<std::string_view>& command_names();

/// Runs solve, learn, plan, sweep, interrupt or model. Files are written
/// under `out_dir` (created if needed) together with manifest.json; progress
/// goes to `progress` when non-null.
CommandResult run_command(std::string_view command, const ExperimentConfig& cfg, const std::string& out_dir,
                          std::ostream* progress);

}  // namespace avgopt
