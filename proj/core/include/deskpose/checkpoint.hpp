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

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "deskpose/array.hpp"

namespace deskpose {

// Named-tensor container serialized as:
//   [u64 little-endian header length][JSON header][raw payload]
// The header carries format-version, tensor names, shapes, and byte offsets
// into the payload; the payload is little-endian IEEE-754 doubles. The
// round trip is bit-exact, including NaN payloads.
class Checkpoint {
 public:
  void put(const std::string& name, Array a);
  const Array& get(const std::string& name) const;
  bool has(const std::string& name) const;
  const std::vector<std::pair<std::string, Array>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, Array>> entries_;
};

// Writes to a temp file in the same directory, then renames into place.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace deskpose
