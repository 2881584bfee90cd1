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

#include "tpaware/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace tpaware {

namespace {

constexpr std::uint32_t kVersion = 1;
constexpr std::array<char, 4> kMatrixMagic{'T', 'P', 'Q', 'M'};
constexpr std::array<char, 4> kBundleMagic{'T', 'P', 'Q', 'B'};
constexpr std::uint32_t kHasRowPerm = 1u << 0;
constexpr std::uint32_t kHasColPerm = 1u << 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void magic(const std::array<char, 4>& m) { out_.write(m.data(), m.size()); }
  void u32(std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out_.write(bytes, 4);
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void size(std::size_t v) {
    if (v > std::numeric_limits<std::uint32_t>::max()) throw CheckpointError("checkpoint: dimension exceeds 32 bits");
    u32(static_cast<std::uint32_t>(v));
  }
  void check() {
    if (!out_) throw CheckpointError("checkpoint: write failed");
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void magic(const std::array<char, 4>& expected, const char* what) {
    std::array<char, 4> m{};
    in_.read(m.data(), m.size());
    if (!in_ || m != expected) throw CheckpointError(std::string("checkpoint: bad ") + what + " magic");
  }
  std::uint32_t u32() {
    unsigned char b[4];
    in_.read(reinterpret_cast<char*>(b), 4);
    if (!in_) throw CheckpointError("checkpoint: unexpected end of data");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  float f32() { return std::bit_cast<float>(u32()); }

 private:
  std::istream& in_;
};

void write_perm(Writer& w, const PermutationArray& p) {
  for (const std::int32_t e : p.entries()) w.u32(static_cast<std::uint32_t>(e));
}

PermutationArray read_perm(Reader& r, std::size_t n, const char* what) {
  std::vector<std::int32_t> e(n);
  for (auto& v : e) v = static_cast<std::int32_t>(r.u32());
  if (!is_bijection(e)) throw CheckpointError(std::string("checkpoint: ") + what + " is not a permutation");
  return PermutationArray(std::move(e));
}

void read_words(Reader& r, PackedCodes& codes) {
  for (auto& w : codes.words()) w = r.u32();
}

}  // namespace

void write_checkpoint(std::ostream& out, const CheckpointEntry& entry) {
  const QuantizedMatrix& q = entry.matrix;
  q.validate();
  if (entry.row_perm && entry.row_perm->size() != q.rows()) {
    throw CheckpointError("checkpoint: row permutation length != K");
  }
  if (entry.col_perm && entry.col_perm->size() != q.cols()) {
    throw CheckpointError("checkpoint: column permutation length != N");
  }
  Writer w(out);
  w.magic(kMatrixMagic);
  w.u32(kVersion);
  w.size(q.rows());
  w.size(q.cols());
  w.u32(static_cast<std::uint32_t>(q.bits));
  w.u32(static_cast<std::uint32_t>(q.group_size()));
  w.u32(static_cast<std::uint32_t>(q.num_groups()));
  w.u32((entry.row_perm ? kHasRowPerm : 0u) | (entry.col_perm ? kHasColPerm : 0u));
  for (const std::uint32_t word : q.qweight.words()) w.u32(word);
  for (const std::uint32_t word : q.zeros.words()) w.u32(word);
  for (const float s : q.scales.data()) w.f32(s);
  for (const std::int32_t g : q.g_idx.entries()) w.u32(static_cast<std::uint32_t>(g));
  if (entry.row_perm) write_perm(w, *entry.row_perm);
  if (entry.col_perm) write_perm(w, *entry.col_perm);
  w.check();
}

CheckpointEntry read_checkpoint(std::istream& in) {
  Reader r(in);
  r.magic(kMatrixMagic, "matrix");
  if (const std::uint32_t v = r.u32(); v != kVersion) {
    throw CheckpointError("checkpoint: unsupported matrix version " + std::to_string(v));
  }
  const std::uint32_t k = r.u32();
  const std::uint32_t n = r.u32();
  const auto bits = static_cast<int>(r.u32());
  const auto group_size = static_cast<std::int32_t>(r.u32());
  const auto num_groups = static_cast<std::int32_t>(r.u32());
  const std::uint32_t flags = r.u32();
  if (k == 0 || n == 0) throw CheckpointError("checkpoint: empty matrix");
  if (!is_supported_bit_width(bits)) throw CheckpointError("checkpoint: unsupported bit width " + std::to_string(bits));
  if (group_size < 1 || num_groups != num_groups_for(k, group_size)) {
    throw CheckpointError("checkpoint: inconsistent group size / group count");
  }
  if ((flags & ~(kHasRowPerm | kHasColPerm)) != 0) throw CheckpointError("checkpoint: unknown flags");

  CheckpointEntry entry;
  QuantizedMatrix& q = entry.matrix;
  q.bits = bits;
  q.qweight = PackedCodes(k, n, bits);
  q.zeros = PackedCodes(static_cast<std::size_t>(num_groups), n, bits);
  q.scales = Matrix<float>(static_cast<std::size_t>(num_groups), n);
  read_words(r, q.qweight);
  read_words(r, q.zeros);
  for (auto& s : q.scales.data()) s = r.f32();
  std::vector<std::int32_t> g(k);
  for (auto& v : g) v = static_cast<std::int32_t>(r.u32());
  try {
    q.g_idx = GroupIndexArray(std::move(g), group_size, num_groups);
    q.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
  if (!q.g_idx.is_complete()) throw CheckpointError("checkpoint: g_idx does not cover every group exactly");
  if (flags & kHasRowPerm) entry.row_perm = read_perm(r, k, "row permutation");
  if (flags & kHasColPerm) entry.col_perm = read_perm(r, n, "column permutation");
  return entry;
}

void write_prepared(std::ostream& out, const PreparedWeights& pw) {
  Writer w(out);
  w.magic(kBundleMagic);
  w.u32(kVersion);
  w.u32(pw.variant == Variant::naive ? 0u : 1u);
  w.u32(pw.layout == GroupLayout::ordered ? 0u : 1u);
  std::optional<PermutationArray> w1_cols;
  if (pw.variant == Variant::tp_aware) w1_cols = pw.p2;
  write_checkpoint(out, {pw.w1, pw.p1, w1_cols});
  write_checkpoint(out, {pw.w2, pw.p2, std::nullopt});
  w.check();
}

PreparedWeights read_prepared(std::istream& in) {
  Reader r(in);
  r.magic(kBundleMagic, "bundle");
  if (const std::uint32_t v = r.u32(); v != kVersion) {
    throw CheckpointError("checkpoint: unsupported bundle version " + std::to_string(v));
  }
  const std::uint32_t variant = r.u32();
  const std::uint32_t layout = r.u32();
  if (variant > 1 || layout > 1) throw CheckpointError("checkpoint: bad variant or layout tag");
  CheckpointEntry w1 = read_checkpoint(in);
  CheckpointEntry w2 = read_checkpoint(in);

  PreparedWeights pw;
  pw.variant = variant == 0 ? Variant::naive : Variant::tp_aware;
  pw.layout = layout == 0 ? GroupLayout::ordered : GroupLayout::act_order;
  if (!w1.row_perm || !w2.row_perm) throw CheckpointError("checkpoint: bundle records lack row permutations");
  if (w1.matrix.cols() != w2.matrix.rows()) throw CheckpointError("checkpoint: W1 and W2 are not conformable");
  if (pw.variant == Variant::tp_aware) {
    if (!w1.col_perm || !(*w1.col_perm == *w2.row_perm)) {
      throw CheckpointError("checkpoint: tp_aware W1 column permutation must equal P2");
    }
  } else if (w1.col_perm) {
    throw CheckpointError("checkpoint: naive W1 must not carry a column permutation");
  }
  pw.w1 = std::move(w1.matrix);
  pw.w2 = std::move(w2.matrix);
  pw.p1 = std::move(*w1.row_perm);
  pw.p2 = std::move(*w2.row_perm);
  return pw;
}

void save_prepared(const std::filesystem::path& path, const PreparedWeights& pw) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("checkpoint: cannot open " + path.string() + " for writing");
  write_prepared(out, pw);
}

PreparedWeights load_prepared(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path.string());
  return read_prepared(in);
}

}  // namespace tpaware
