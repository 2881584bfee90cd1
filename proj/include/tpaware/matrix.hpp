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

#ifndef TPAWARE_MATRIX_HPP
#define TPAWARE_MATRIX_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tpaware {

/// Dense row-major matrix with value semantics.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw std::invalid_argument("Matrix: data size " + std::to_string(data_.size()) +
                                  " does not match " + std::to_string(rows_) + "x" +
                                  std::to_string(cols_));
    }
  }
  Matrix(std::initializer_list<std::initializer_list<T>> init) {
    rows_ = init.size();
    cols_ = rows_ == 0 ? 0 : init.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) throw std::invalid_argument("Matrix: ragged initializer");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<T> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

  /// Copy of rows [begin, end).
  Matrix slice_rows(std::size_t begin, std::size_t end) const {
    check_range(begin, end, rows_, "slice_rows");
    return Matrix(end - begin, cols_,
                  std::vector<T>(data_.begin() + begin * cols_, data_.begin() + end * cols_));
  }

  /// Copy of columns [begin, end).
  Matrix slice_cols(std::size_t begin, std::size_t end) const {
    check_range(begin, end, cols_, "slice_cols");
    Matrix out(rows_, end - begin);
    for (std::size_t i = 0; i < rows_; ++i) {
      std::copy(data_.begin() + i * cols_ + begin, data_.begin() + i * cols_ + end,
                out.data_.begin() + i * out.cols_);
    }
    return out;
  }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    std::transform(data_.begin(), data_.end(), out.data().begin(),
                   [](const T& v) { return static_cast<U>(v); });
    return out;
  }

 private:
  static void check_range(std::size_t begin, std::size_t end, std::size_t extent, const char* what) {
    if (begin > end || end > extent) {
      throw std::invalid_argument(std::string(what) + ": range [" + std::to_string(begin) + ", " +
                                  std::to_string(end) + ") out of bounds for extent " +
                                  std::to_string(extent));
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <typename T>
Matrix<T> concat_cols(std::span<const Matrix<T>> blocks) {
  if (blocks.empty()) return {};
  const std::size_t rows = blocks.front().rows();
  std::size_t cols = 0;
  for (const auto& b : blocks) {
    if (b.rows() != rows) throw std::invalid_argument("concat_cols: row count mismatch");
    cols += b.cols();
  }
  Matrix<T> out(rows, cols);
  std::size_t offset = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy(b.row(i).begin(), b.row(i).end(), out.row(i).begin() + offset);
    }
    offset += b.cols();
  }
  return out;
}

template <typename T>
Matrix<T> concat_rows(std::span<const Matrix<T>> blocks) {
  if (blocks.empty()) return {};
  const std::size_t cols = blocks.front().cols();
  std::vector<T> data;
  std::size_t rows = 0;
  for (const auto& b : blocks) {
    if (b.cols() != cols) throw std::invalid_argument("concat_rows: column count mismatch");
    data.insert(data.end(), b.data().begin(), b.data().end());
    rows += b.rows();
  }
  return Matrix<T>(rows, cols, std::move(data));
}

template <typename T>
double max_abs(const Matrix<T>& m) {
  double out = 0.0;
  for (const T& v : m.data()) out = std::max(out, std::abs(static_cast<double>(v)));
  return out;
}

template <typename A, typename B>
double max_abs_diff(const Matrix<A>& a, const Matrix<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("max_abs_diff: shape mismatch");
  }
  double out = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    out = std::max(out, std::abs(static_cast<double>(a.data()[k]) - static_cast<double>(b.data()[k])));
  }
  return out;
}

/// Norm-wise relative difference max|a - b| / max|b|; 0 when both are zero.
template <typename A, typename B>
double relative_diff(const Matrix<A>& a, const Matrix<B>& reference) {
  const double diff = max_abs_diff(a, reference);
  const double scale = max_abs(reference);
  if (scale == 0.0) return diff == 0.0 ? 0.0 : diff;
  return diff / scale;
}

}  // namespace tpaware

#endif  // TPAWARE_MATRIX_HPP
