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

#include <sstream>
#include <stdexcept>
#include <string>

namespace deskpose {

// Precondition or invariant broken by the caller.
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid or inconsistent configuration.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A verification oracle could not produce a trustworthy answer.
struct OracleError : std::runtime_error {
  explicit OracleError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input that the operation leaves undefined (e.g. no visible keypoints).
struct UndefinedInputError : std::runtime_error {
  explicit UndefinedInputError(const std::string& msg) : std::runtime_error(msg) {}
};

// On-disk format mismatch (wrong version, truncated payload, ...).
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
[[noreturn]] inline void throw_check(const char* kind, const char* expr, const std::string& msg) {
  std::ostringstream os;
  os << kind << ": " << expr;
  if (!msg.empty()) os << " (" << msg << ")";
  throw ContractError(os.str());
}
}  // namespace detail

#define DKP_CHECK(cond, msg)                                              \
  do {                                                                    \
    if (!(cond)) ::deskpose::detail::throw_check("check failed", #cond, (msg)); \
  } while (0)

}  // namespace deskpose
