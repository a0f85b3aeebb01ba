// Copyright 2026 The ExploitLab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EXPLOITLAB_TOOLS_CLI_H_
#define EXPLOITLAB_TOOLS_CLI_H_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "exploitlab/run_config.h"

namespace exploitlab::cli {

// Resolves a run config: preset (if any), then the config file, then flag
// overrides (a partial RunConfig document). The subcommand fixes the mode;
// a file declaring another mode is a ConfigError. The result is validated
// with all defaults materialised.
RunConfig ResolveConfig(RunMode mode, const std::optional<std::string>& preset,
                        const std::string& scale,
                        const std::optional<std::filesystem::path>& config_file,
                        const nlohmann::json& overrides);

// Mode taken from the file itself ("run" subcommand).
RunConfig ResolveConfigFile(const std::filesystem::path& config_file);

// Parses argv (without the program name) and executes the command. Returns
// the process exit code; messages go to `out` and `err`.
int Main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace exploitlab::cli

#endif  // EXPLOITLAB_TOOLS_CLI_H_
