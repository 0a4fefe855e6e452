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

#include "sensilogit/design.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "sensilogit/error.hpp"

namespace sensilogit::design {

std::vector<std::string> bibd_violations(int t, int b, int h, int r) {
  std::vector<std::string> out;
  if (t < 2 || b < 1 || h < 2 || r < 1) {
    out.push_back("parameters must be positive with t >= 2 and h >= 2");
    return out;
  }
  if (r * t != h * b) {
    out.push_back("rt != hb (" + std::to_string(r * t) + " != " + std::to_string(h * b) + ")");
  }
  const int num = r * (h - 1);
  const int den = t - 1;
  const bool integral = num % den == 0;
  if (!integral) {
    out.push_back("non-integer lambda (r(h-1)/(t-1) = " + std::to_string(num) + "/" +
                  std::to_string(den) + ")");
  }
  const int lambda = num / den;
  if (integral) {
    const bool complete = h == t;
    if (complete ? r < lambda : r <= lambda) {
      out.push_back("r <= lambda (" + std::to_string(r) + " <= " + std::to_string(lambda) + ")");
    }
  }
  if (b < t && h < t) {
    out.push_back("b < t (" + std::to_string(b) + " < " + std::to_string(t) + ")");
  }
  return out;
}

BibdParams validate_bibd(int t, int b, int h, int r) {
  const auto violations = bibd_violations(t, b, h, r);
  if (!violations.empty()) {
    std::string msg = "invalid BIBD parameters:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw_usage(msg);
  }
  return BibdParams{t, b, h, r, r * (h - 1) / (t - 1)};
}

namespace {

class BlockSearch {
 public:
  BlockSearch(int t, int h, int b, int r, int lambda, std::uint64_t* budget)
      : t_(t), h_(h), b_(b), r_(r), lambda_(lambda), budget_(budget),
        count_(static_cast<std::size_t>(t), 0),
        pairs_(static_cast<std::size_t>(t * t), 0) {}

  bool run() { return place_block(); }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  bool exhausted() const { return out_of_budget_; }

 private:
  int& pair(int a, int c) { return pairs_[static_cast<std::size_t>(a * t_ + c)]; }

  bool place_block() {
    if (static_cast<int>(blocks_.size()) == b_) return true;
    // The next block in lexicographic order must start with the smallest
    // treatment still short of r replications.
    int first = -1;
    for (int x = 0; x < t_; ++x) {
      if (count_[static_cast<std::size_t>(x)] < r_) {
        first = x;
        break;
      }
    }
    if (first < 0) return false;
    current_.assign(1, first);
    ++count_[static_cast<std::size_t>(first)];
    const bool ok = extend(first + 1);
    --count_[static_cast<std::size_t>(first)];
    return ok;
  }

  bool extend(int from) {
    if (*budget_ == 0) {
      out_of_budget_ = true;
      return false;
    }
    --*budget_;
    if (static_cast<int>(current_.size()) == h_) {
      if (!blocks_.empty() && current_ < blocks_.back()) return false;
      blocks_.push_back(current_);
      const auto saved = current_;
      if (place_block()) return true;
      current_ = saved;
      blocks_.pop_back();
      return false;
    }
    const int remaining = h_ - static_cast<int>(current_.size());
    for (int x = from; x <= t_ - remaining; ++x) {
      if (out_of_budget_) return false;
      if (count_[static_cast<std::size_t>(x)] >= r_) continue;
      bool fits = true;
      for (int y : current_) {
        if (pair(y, x) >= lambda_) {
          fits = false;
          break;
        }
      }
      if (!fits) continue;
      for (int y : current_) {
        ++pair(y, x);
        ++pair(x, y);
      }
      ++count_[static_cast<std::size_t>(x)];
      current_.push_back(x);
      if (extend(x + 1)) return true;
      current_.pop_back();
      --count_[static_cast<std::size_t>(x)];
      for (int y : current_) {
        --pair(y, x);
        --pair(x, y);
      }
    }
    return false;
  }

  int t_, h_, b_, r_, lambda_;
  std::uint64_t* budget_;
  std::vector<int> count_;
  std::vector<int> pairs_;
  std::vector<int> current_;
  std::vector<std::vector<int>> blocks_;
  bool out_of_budget_ = false;
};

}  // namespace

BibdLayout generate_bibd(int t, int h, std::uint64_t seed, const GenerateOptions& options) {
  if (t < 2 || h < 2 || h > t) throw_usage("generate_bibd: need 2 <= h <= t");
  if (options.multiplier < 1) throw_usage("generate_bibd: multiplier must be >= 1");
  std::uint64_t budget = options.node_budget;
  for (int lambda = 1; lambda <= options.max_lambda; ++lambda) {
    const int num = lambda * (t - 1);
    if (num % (h - 1) != 0) continue;
    const int r = num / (h - 1);
    if ((r * t) % h != 0) continue;
    const int b = r * t / h;
    if (!bibd_violations(t, b, h, r).empty()) continue;
    BlockSearch search(t, h, b, r, lambda, &budget);
    if (!search.run()) {
      if (search.exhausted()) break;
      continue;
    }
    BibdLayout layout;
    const int m = options.multiplier;
    layout.params = BibdParams{t, b * m, h, r * m, lambda * m};
    for (int rep = 0; rep < m; ++rep) {
      for (const auto& blk : search.blocks()) layout.blocks.push_back(blk);
    }
    std::mt19937_64 rng(seed);
    for (const auto& blk : layout.blocks) {
      auto order = blk;
      std::shuffle(order.begin(), order.end(), rng);
      layout.serving_orders.push_back(std::move(order));
    }
    return layout;
  }
  throw_numerical("no design found within budget for t=" + std::to_string(t) +
                  ", h=" + std::to_string(h));
}

bool is_balanced(const BibdLayout& layout) {
  const auto& p = layout.params;
  if (static_cast<int>(layout.blocks.size()) != p.b) return false;
  std::vector<int> reps(static_cast<std::size_t>(p.t), 0);
  std::vector<int> pairs(static_cast<std::size_t>(p.t * p.t), 0);
  for (const auto& blk : layout.blocks) {
    if (static_cast<int>(blk.size()) != p.h) return false;
    for (std::size_t i = 0; i < blk.size(); ++i) {
      if (blk[i] < 0 || blk[i] >= p.t) return false;
      ++reps[static_cast<std::size_t>(blk[i])];
      for (std::size_t j = i + 1; j < blk.size(); ++j) {
        if (blk[i] == blk[j]) return false;
        const int lo = std::min(blk[i], blk[j]);
        const int hi = std::max(blk[i], blk[j]);
        ++pairs[static_cast<std::size_t>(lo * p.t + hi)];
      }
    }
  }
  for (int x = 0; x < p.t; ++x) {
    if (reps[static_cast<std::size_t>(x)] != p.r) return false;
    for (int y = x + 1; y < p.t; ++y) {
      if (pairs[static_cast<std::size_t>(x * p.t + y)] != p.lambda) return false;
    }
  }
  return true;
}

std::vector<Serving> assign_panellists(const BibdLayout& layout, int panellists,
                                       std::uint64_t seed) {
  const int b = static_cast<int>(layout.blocks.size());
  if (b == 0) throw_usage("assign_panellists: empty layout");
  if (panellists < 1 || panellists % b != 0) {
    throw_usage("panellist count " + std::to_string(panellists) +
                " is not a multiple of the block count " + std::to_string(b));
  }
  std::vector<int> block_of(static_cast<std::size_t>(panellists));
  for (int p = 0; p < panellists; ++p) block_of[static_cast<std::size_t>(p)] = p % b;
  std::mt19937_64 rng(seed);
  std::shuffle(block_of.begin(), block_of.end(), rng);
  std::vector<Serving> out;
  out.reserve(static_cast<std::size_t>(panellists));
  for (int p = 0; p < panellists; ++p) {
    Serving s;
    s.panellist = p;
    s.block = block_of[static_cast<std::size_t>(p)];
    s.order = layout.blocks[static_cast<std::size_t>(s.block)];
    std::shuffle(s.order.begin(), s.order.end(), rng);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace sensilogit::design
