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

#include "tpaware/synthetic.hpp"

#include <stdexcept>
#include <string>
#include <vector>

#include "tpaware/pipeline.hpp"

namespace tpaware {

DenseProblem normal_weights(std::size_t k1, std::size_t n1, std::size_t n2, std::uint64_t seed) {
  Rng r1(stream_seed(seed, kStreamW1));
  Rng r2(stream_seed(seed, kStreamW2));
  return {normal_matrix(k1, n1, r1), normal_matrix(n1, n2, r2)};
}

Matrix<float> normal_activations(std::size_t m, std::size_t k1, std::uint64_t seed) {
  Rng rng(stream_seed(seed, kStreamX));
  return normal_matrix(m, k1, rng);
}

Matrix<float> lossless_weights(std::size_t rows, std::size_t cols, int group_size, int bits,
                               const PermutationArray& phi, Rng& rng) {
  if (!is_supported_bit_width(bits)) throw std::invalid_argument("lossless_weights: unsupported bit width");
  if (phi.size() != rows) throw std::invalid_argument("lossless_weights: phi length != rows");
  const GroupIndexArray g = group_index_actorder(static_cast<std::int64_t>(rows), group_size, phi);
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(g.num_groups()));
  for (std::size_t r = 0; r < rows; ++r) members[static_cast<std::size_t>(g[r])].push_back(r);
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (members[k].size() < 2) {
      throw std::invalid_argument("lossless_weights: group " + std::to_string(k) + " has fewer than two rows");
    }
  }

  const std::int64_t maxq = (std::int64_t{1} << bits) - 1;
  Matrix<float> w(rows, cols);
  for (const auto& rs : members) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::int64_t z = rng.between(0, maxq);
      for (const std::size_t r : rs) w(r, j) = static_cast<float>(rng.between(-z, maxq - z));
      const std::size_t a = rng.below(rs.size());
      std::size_t b = rng.below(rs.size() - 1);
      if (b >= a) ++b;
      w(rs[a], j) = static_cast<float>(-z);
      w(rs[b], j) = static_cast<float>(maxq - z);
    }
  }
  return w;
}

DenseProblem lossless_problem(std::size_t k1, std::size_t n1, std::size_t n2, int group_size, int bits,
                              std::uint64_t seed) {
  const ActOrder act = derive_act_order(k1, n1, seed);
  Rng r1(stream_seed(seed, kStreamW1));
  Rng r2(stream_seed(seed, kStreamW2));
  return {lossless_weights(k1, n1, group_size, bits, act.phi1, r1),
          lossless_weights(n1, n2, group_size, bits, act.phi2, r2)};
}

}  // namespace tpaware
