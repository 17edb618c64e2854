#pragma once

#include <cassert>
#include <span>
#include <vector>

namespace manet {

/// Minimal dense row-major matrix. Row counts stay small (heir clusters,
/// actors, events), so no view machinery beyond row spans.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, T value = T{})
      : rows_(rows), cols_(cols), v_(static_cast<size_t>(rows) * cols, value) {
    assert(rows >= 0 && cols >= 0);
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return v_.empty(); }

  T& operator()(int i, int j) {
    assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
    return v_[static_cast<size_t>(i) * cols_ + j];
  }
  const T& operator()(int i, int j) const {
    assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
    return v_[static_cast<size_t>(i) * cols_ + j];
  }

  std::span<T> row(int i) {
    assert(i >= 0 && i < rows_);
    return {v_.data() + static_cast<size_t>(i) * cols_, static_cast<size_t>(cols_)};
  }
  std::span<const T> row(int i) const {
    assert(i >= 0 && i < rows_);
    return {v_.data() + static_cast<size_t>(i) * cols_, static_cast<size_t>(cols_)};
  }

  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }
  size_t size() const { return v_.size(); }

  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> v_;
};

}  // namespace manet
