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

#include <cstdint>
#include <string>
#include <vector>

namespace sensilogit::design {

/// Balanced incomplete block design parameters: t treatments in b blocks of
/// size h, each treatment replicated r times, each pair together lambda times.
struct BibdParams {
  int t = 0;
  int b = 0;
  int h = 0;
  int r = 0;
  int lambda = 0;
};

/// Names every necessary condition that (t, b, h, r) violates; empty when
/// the quadruple is admissible. A complete block (h == t) is admitted with
/// r == lambda.
std::vector<std::string> bibd_violations(int t, int b, int h, int r);

/// Throws a usage error listing all violated conditions.
BibdParams validate_bibd(int t, int b, int h, int r);

/// Treatments are 0-based in `blocks`; serving_orders[k] is a permutation of
/// blocks[k].
struct BibdLayout {
  BibdParams params;
  std::vector<std::vector<int>> blocks;
  std::vector<std::vector<int>> serving_orders;
};

struct GenerateOptions {
  /// Each base block is repeated this many times (scales b, r, lambda).
  int multiplier = 1;
  /// Upper bound on backtracking nodes over all lambda values tried.
  std::uint64_t node_budget = 200'000'000;
  int max_lambda = 12;
};

/// Smallest-lambda design for (t, h) found by backtracking with pair
/// concurrence pruning. The block set does not depend on the seed; only the
/// within-block serving orders do.
BibdLayout generate_bibd(int t, int h, std::uint64_t seed, const GenerateOptions& options = {});

/// Exhaustive replication and pair-concurrence check.
bool is_balanced(const BibdLayout& layout);

struct Serving {
  int panellist = 0;
  int block = 0;
  std::vector<int> order;
};

/// N panellists over the layout's blocks (N a multiple of b). Each block is
/// used N / b times; block assignment and within-block order are seeded.
std::vector<Serving> assign_panellists(const BibdLayout& layout, int panellists,
                                       std::uint64_t seed);

}  // namespace sensilogit::design
