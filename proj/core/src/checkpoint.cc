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

#include "exploitlab/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "exploitlab/errors.h"
#include "exploitlab/hash.h"

namespace exploitlab {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

constexpr char kMagic[8] = {'E', 'X', 'L', 'C', 'K', 'P', 'T', '1'};
constexpr std::size_t kDigestSize = 32;

template <typename T>
void Append(std::string& out, const T& value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

std::string ReadAll(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open checkpoint " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Returns the verified payload length (everything before the digest).
std::size_t Verify(const std::string& bytes, const std::filesystem::path& path) {
  if (bytes.size() < sizeof(kMagic) + sizeof(uint64_t) + kDigestSize ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IntegrityError("not a checkpoint or truncated: " + path.string());
  }
  const std::size_t payload = bytes.size() - kDigestSize;
  const auto digest = Sha256(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(bytes.data()), payload));
  if (std::memcmp(digest.data(), bytes.data() + payload, kDigestSize) != 0) {
    throw IntegrityError("checkpoint checksum mismatch (corrupt or truncated): " +
                         path.string());
  }
  return payload;
}

}  // namespace

void WriteContainer(const std::filesystem::path& path, const Container& container) {
  nlohmann::json header;
  header["version"] = 1;
  header["meta"] = container.meta;
  header["tensors"] = nlohmann::json::array();
  for (const auto& [name, values] : container.tensors) {
    header["tensors"].push_back({{"name", name}, {"count", values.size()}});
  }
  const std::string header_text = header.dump();

  std::string bytes(kMagic, sizeof(kMagic));
  Append(bytes, static_cast<uint64_t>(header_text.size()));
  bytes += header_text;
  for (const auto& [name, values] : container.tensors) {
    bytes.append(reinterpret_cast<const char*>(values.data()),
                 values.size() * sizeof(double));
  }
  const auto digest = Sha256(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size()));
  bytes.append(reinterpret_cast<const char*>(digest.data()), digest.size());

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Container ReadContainer(const std::filesystem::path& path) {
  const std::string bytes = ReadAll(path);
  const std::size_t payload = Verify(bytes, path);
  uint64_t header_len = 0;
  std::memcpy(&header_len, bytes.data() + sizeof(kMagic), sizeof(header_len));
  const std::size_t header_start = sizeof(kMagic) + sizeof(uint64_t);
  if (header_len > payload - header_start) {
    throw IntegrityError("checkpoint header overruns file: " + path.string());
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(header_start, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError("checkpoint header unreadable: " + std::string(e.what()));
  }
  Container container;
  container.meta = header.at("meta");
  std::size_t offset = header_start + header_len;
  for (const auto& entry : header.at("tensors")) {
    const auto count = entry.at("count").get<std::size_t>();
    const std::size_t len = count * sizeof(double);
    if (offset + len > payload) {
      throw IntegrityError("checkpoint tensor data truncated: " + path.string());
    }
    std::vector<double> values(count);
    std::memcpy(values.data(), bytes.data() + offset, len);
    offset += len;
    container.tensors.emplace(entry.at("name").get<std::string>(), std::move(values));
  }
  if (offset != payload) {
    throw IntegrityError("checkpoint has trailing bytes: " + path.string());
  }
  return container;
}

std::string ContainerHash(const std::filesystem::path& path) {
  const std::string bytes = ReadAll(path);
  const std::size_t payload = Verify(bytes, path);
  return ToHex(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(bytes.data()) + payload, kDigestSize));
}

void PutPolicy(Container& container, const std::string& name,
               const PolicyParams& params, const nlohmann::json& extra) {
  nlohmann::json entry = extra;
  entry["architecture"] = params.arch();
  entry["hash"] = params.Hash();
  container.meta["policies"][name] = entry;
  container.tensors["policy/" + name] = params.values();
}

PolicyParams GetPolicy(const Container& container, const std::string& name) {
  if (!container.meta.contains("policies") ||
      !container.meta["policies"].contains(name)) {
    throw UsageError("checkpoint has no policy named '" + name + "'");
  }
  const auto& entry = container.meta["policies"][name];
  PolicyParams params(entry.at("architecture").get<Architecture>());
  const auto it = container.tensors.find("policy/" + name);
  if (it == container.tensors.end() || it->second.size() != params.size()) {
    throw IntegrityError("checkpoint policy '" + name + "' has wrong size");
  }
  params.values() = it->second;
  if (entry.contains("hash") && entry["hash"].get<std::string>() != params.Hash()) {
    throw IntegrityError("checkpoint policy '" + name + "' does not match its hash");
  }
  return params;
}

}  // namespace exploitlab
