// SPDX-License-Identifier: Apache-2.0
//
// Command orchestration: one entry point per experiment, options validated
// before any computation, artifacts written to an output directory together
// with a meta.json record.

#pragma once

#include "common.hpp"

#include <map>
#include <string>
#include <vector>

namespace mhs::runner {

struct OptionSpec {
  std::string key;
  std::string help;
  std::string default_value;  // empty: no default (optional or required)
  bool flag = false;          // boolean switch
  bool required = false;
};

struct CommandSpec {
  std::string name;
  std::string help;
  std::vector<OptionSpec> options;  // includes the common options
};

const std::vector<CommandSpec>& commands();
const CommandSpec& command(const std::string& name);  // usage error if unknown

using Options = std::map<std::string, std::string>;

// key=value lines; '#' starts a comment; blank lines ignored.
Options parse_config(const std::string& text);
Options load_config(const std::string& path);

struct RunResult {
  std::string summary;                 // short human-readable report
  std::vector<std::string> artifacts;  // paths written, meta.json last
  int status = 0;                      // 0, or an ErrorCode for a failed check
};

// Execute a command.  Unknown options, malformed values and infeasible
// workloads raise Error before any artifact is written.
RunResult run(const std::string& command, const Options& options);

std::string version();

}  // namespace mhs::runner
