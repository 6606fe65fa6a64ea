// Copyright 2026 The deskpose Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "deskpose/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "deskpose/error.hpp"

namespace deskpose {

namespace {

constexpr int kFormatVersion = 1;

void append_u64_le(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

uint64_t read_u64_le(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

void append_f64_le(std::string& out, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  append_u64_le(out, bits);
}

double read_f64_le(const unsigned char* p) {
  const uint64_t bits = read_u64_le(p);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

}  // namespace

void Checkpoint::put(const std::string& name, Array a) {
  for (auto& e : entries_)
    if (e.first == name) {
      e.second = std::move(a);
      return;
    }
  entries_.emplace_back(name, std::move(a));
}

const Array& Checkpoint::get(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.first == name) return e.second;
  throw FormatError("checkpoint has no tensor named '" + name + "'");
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.first == name) return true;
  return false;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["format-version"] = kFormatVersion;
  nlohmann::json tensors = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& [name, arr] : ckpt.entries()) {
    nlohmann::json t;
    t["name"] = name;
    t["shape"] = arr.shape;
    t["offset"] = offset;
    tensors.push_back(std::move(t));
    offset += arr.data.size() * sizeof(double);
  }
  header["tensors"] = std::move(tensors);
  const std::string header_str = header.dump();

  std::string blob;
  blob.reserve(8 + header_str.size() + offset);
  append_u64_le(blob, header_str.size());
  blob += header_str;
  for (const auto& [name, arr] : ckpt.entries()) {
    (void)name;
    for (double d : arr.data) append_f64_le(blob, d);
  }

  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + tmp.string() + "' for writing");
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw FormatError("short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, target);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
  if (blob.size() < 8) throw FormatError("checkpoint truncated: missing header length");
  const uint64_t hlen = read_u64_le(bytes);
  if (8 + hlen > blob.size()) throw FormatError("checkpoint truncated: header exceeds file");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(blob.substr(8, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  if (!header.contains("format-version") || header["format-version"].get<int>() != kFormatVersion)
    throw FormatError("unsupported checkpoint format version");

  const size_t payload_start = 8 + hlen;
  const size_t payload_size = blob.size() - payload_start;
  Checkpoint ckpt;
  for (const auto& t : header["tensors"]) {
    const std::string name = t["name"].get<std::string>();
    Shape shape = t["shape"].get<Shape>();
    const uint64_t offset = t["offset"].get<uint64_t>();
    const size_t n = numel_of(shape);
    if (offset + n * sizeof(double) > payload_size)
      throw FormatError("checkpoint payload truncated for tensor '" + name + "'");
    std::vector<double> data(n);
    const unsigned char* p = bytes + payload_start + offset;
    for (size_t i = 0; i < n; ++i) data[i] = read_f64_le(p + i * sizeof(double));
    ckpt.put(name, Array(std::move(shape), std::move(data)));
  }
  return ckpt;
}

}  // namespace deskpose
