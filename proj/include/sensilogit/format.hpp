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

#include <string>

namespace sensilogit {

/// Shortest decimal text that reads back to the same double; "nan", "inf"
/// and "-inf" for non-finite values.
std::string format_number(double value);

/// Fixed-point text with `digits` decimals, for human-readable summaries.
std::string format_fixed(double value, int digits);

/// Quotes a CSV field when it holds a comma, quote or newline.
std::string csv_field(const std::string& text);

}  // namespace sensilogit
