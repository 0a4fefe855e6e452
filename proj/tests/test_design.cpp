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

#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "sensilogit/design.hpp"
#include "sensilogit/error.hpp"

using namespace sensilogit;
using namespace sensilogit::design;

namespace {

bool contains(const std::vector<std::string>& v, const std::string& needle) {
  return std::any_of(v.begin(), v.end(),
                     [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

// Pair and replication counts taken straight from the block list.
void check_counts(const BibdLayout& l) {
  const int t = l.params.t;
  std::vector<int> rep(t, 0);
  std::map<std::pair<int, int>, int> pairs;
  for (const auto& blk : l.blocks) {
    CHECK(static_cast<int>(blk.size()) == l.params.h);
    CHECK(std::set<int>(blk.begin(), blk.end()).size() == blk.size());
    for (std::size_t i = 0; i < blk.size(); ++i) {
      ++rep[blk[i]];
      for (std::size_t j = i + 1; j < blk.size(); ++j) {
        ++pairs[{std::min(blk[i], blk[j]), std::max(blk[i], blk[j])}];
      }
    }
  }
  for (int x : rep) CHECK(x == l.params.r);
  CHECK(static_cast<int>(pairs.size()) == t * (t - 1) / 2);
  for (const auto& [k, n] : pairs) CHECK(n == l.params.lambda);
  CHECK(static_cast<int>(l.blocks.size()) == l.params.b);
}

}  // namespace

TEST_CASE("admissible quadruples") {
  const auto p = validate_bibd(13, 130, 4, 40);
  CHECK(p.lambda == 10);
  CHECK(validate_bibd(7, 7, 3, 3).lambda == 1);
  CHECK(validate_bibd(3, 3, 3, 3).lambda == 3);
  CHECK(bibd_violations(13, 130, 4, 40).empty());
}

TEST_CASE("violations are all named") {
  const auto v = bibd_violations(13, 100, 4, 40);
  CHECK(contains(v, "rt != hb (520 != 400)"));
  CHECK(contains(bibd_violations(6, 4, 3, 2), "non-integer lambda"));
  CHECK(contains(bibd_violations(6, 4, 3, 2), "b < t"));
  CHECK(contains(bibd_violations(0, 1, 1, 1), "parameters must be positive"));
  try {
    validate_bibd(13, 100, 4, 40);
    FAIL("expected a usage error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::usage);
    CHECK(std::string(e.what()).find("rt != hb") != std::string::npos);
  }
}

TEST_CASE("necessary conditions agree with a direct evaluation over a grid") {
  for (int t = 2; t <= 12; ++t) {
    for (int h = 2; h <= t; ++h) {
      for (int r = 1; r <= 12; ++r) {
        for (int b = 1; b <= 40; ++b) {
          bool ok = r * t == h * b && (r * (h - 1)) % (t - 1) == 0;
          if (ok && h < t) {
            const int lambda = r * (h - 1) / (t - 1);
            ok = r > lambda && b >= t;
          }
          CHECK_MESSAGE(bibd_violations(t, b, h, r).empty() == ok, t, " ", b, " ", h, " ", r);
        }
      }
    }
  }
}

TEST_CASE("generated designs are balanced") {
  const auto fano = generate_bibd(7, 3, 1);
  CHECK(fano.params.lambda == 1);
  CHECK(fano.params.b == 7);
  check_counts(fano);
  CHECK(is_balanced(fano));

  GenerateOptions opts;
  opts.multiplier = 10;
  const auto big = generate_bibd(13, 4, 5, opts);
  CHECK(big.params.b == 130);
  CHECK(big.params.r == 40);
  CHECK(big.params.lambda == 10);
  check_counts(big);

  const auto full = generate_bibd(4, 4, 1);
  CHECK(full.params.b == 1);
  check_counts(full);
}

TEST_CASE("serving orders are seeded permutations") {
  const auto a = generate_bibd(7, 3, 11);
  const auto b = generate_bibd(7, 3, 11);
  const auto c = generate_bibd(7, 3, 12);
  CHECK(a.blocks == c.blocks);
  CHECK(a.serving_orders == b.serving_orders);
  for (std::size_t k = 0; k < a.blocks.size(); ++k) {
    auto x = a.blocks[k], y = a.serving_orders[k];
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    CHECK(x == y);
  }
  bool differs = false;
  for (int s = 12; s < 20 && !differs; ++s) differs = generate_bibd(7, 3, s).serving_orders != a.serving_orders;
  CHECK(differs);
}

TEST_CASE("tampered layouts are not balanced") {
  auto l = generate_bibd(7, 3, 1);
  int outsider = 0;
  while (std::find(l.blocks[0].begin(), l.blocks[0].end(), outsider) != l.blocks[0].end()) ++outsider;
  l.blocks[0][0] = outsider;
  CHECK_FALSE(is_balanced(l));
}

TEST_CASE("panellist assignment uses every block equally") {
  const auto l = generate_bibd(7, 3, 3);
  const auto s = assign_panellists(l, 21, 9);
  REQUIRE(s.size() == 21);
  std::vector<int> uses(7, 0);
  for (const auto& x : s) {
    ++uses[x.block];
    auto o = x.order, blk = l.blocks[x.block];
    std::sort(o.begin(), o.end());
    std::sort(blk.begin(), blk.end());
    CHECK(o == blk);
  }
  for (int u : uses) CHECK(u == 3);
  const auto again = assign_panellists(l, 21, 9);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i].order == again[i].order);
  CHECK_THROWS_AS(assign_panellists(l, 20, 9), Error);
}
