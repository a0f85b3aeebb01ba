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

#ifndef EXPLOITLAB_CHECKPOINT_H_
#define EXPLOITLAB_CHECKPOINT_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "exploitlab/policy.h"

namespace exploitlab {

// Self-describing binary container:
//   "EXLCKPT1" | u64 header length | JSON header | float64 tensor blob |
//   SHA-256 of everything before it.
// The header carries free-form metadata plus the tensor directory.
struct Container {
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, std::vector<double>> tensors;
};

// Writes to a temporary sibling and renames, so readers never see a partial
// file at `path`.
void WriteContainer(const std::filesystem::path& path, const Container& container);

// Throws IntegrityError on bad magic, truncation, or checksum mismatch; no
// partial state is returned.
Container ReadContainer(const std::filesystem::path& path);

// Hex SHA-256 trailer of a container file (verified).
std::string ContainerHash(const std::filesystem::path& path);

// Policies are stored as tensor "policy/<name>" plus meta["policies"][name]
// holding the architecture and any extra fields.
void PutPolicy(Container& container, const std::string& name,
               const PolicyParams& params,
               const nlohmann::json& extra = nlohmann::json::object());
PolicyParams GetPolicy(const Container& container, const std::string& name);

}  // namespace exploitlab

#endif  // EXPLOITLAB_CHECKPOINT_H_
