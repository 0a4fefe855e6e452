// Copyright 2026 The sensilogit Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace sensilogit {

// Error categories double as CLI exit codes.
enum class ErrorKind : int {
  usage = 1,
  data = 2,
  numerical = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& message) {
  throw Error(ErrorKind::usage, message);
}

[[noreturn]] inline void throw_data(const std::string& message) {
  throw Error(ErrorKind::data, message);
}

[[noreturn]] inline void throw_numerical(const std::string& message) {
  throw Error(ErrorKind::numerical, message);
}

}  // namespace sensilogit
