/**
 * Copyright 2026 The tpaware Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "tpaware/perm.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace tpaware {

Reordered reorder(const GroupIndexArray& g_idx) {
  const auto keys = g_idx.entries();
  std::vector<std::int32_t> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::int32_t a, std::int32_t b) { return keys[a] < keys[b]; });

  std::vector<std::int32_t> sorted(keys.size());
  for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = keys[order[i]];
  return {PermutationArray(std::move(order)),
          GroupIndexArray(std::move(sorted), g_idx.group_size(), g_idx.num_groups())};
}

PermutationArray invert(const PermutationArray& p) {
  std::vector<std::int32_t> q(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) q[p[i]] = static_cast<std::int32_t>(i);
  return PermutationArray(std::move(q));
}

PermutationArray compose(const PermutationArray& a, const PermutationArray& b) {
  if (a.size() != b.size()) throw std::invalid_argument("compose: permutation lengths differ");
  std::vector<std::int32_t> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[b[i]];
  return PermutationArray(std::move(out));
}

}  // namespace tpaware
