#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nervus/train/config.hpp"

namespace nervus::train {

enum class Command { kTrain, kTest };

struct Invocation {
  Command command = Command::kTrain;
  TrainConfig config;
  std::optional<std::string> help;  // set when --help was requested
};

/// `args` excludes the program name. Throws ConfigError on unknown flags,
/// bad values or an incompatible task/criterion pair.
Invocation parse_cli(const std::vector<std::string>& args);

/// Runs a command and returns the process exit code: 0 on success, 2 on a
/// usage error, 1 on any other failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nervus::train
