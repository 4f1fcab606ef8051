#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace wtt {

// Row-major 2D grid, row j = 0 is the southern edge.
template <class T>
class Field2D {
 public:
  Field2D() = default;
  Field2D(int nx, int ny, T init = T{})
      : nx_(nx), ny_(ny), data_(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), init) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool in_bounds(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }

  T& operator()(int i, int j) {
    assert(in_bounds(i, j));
    return data_[static_cast<std::size_t>(j) * nx_ + i];
  }
  const T& operator()(int i, int j) const {
    assert(in_bounds(i, j));
    return data_[static_cast<std::size_t>(j) * nx_ + i];
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <class U>
  bool same_shape(const Field2D<U>& o) const {
    return nx_ == o.nx() && ny_ == o.ny();
  }

  friend bool operator==(const Field2D&, const Field2D&) = default;

 private:
  int nx_ = 0;
  int ny_ = 0;
  std::vector<T> data_;
};

using SolidMask = Field2D<unsigned char>;

}  // namespace wtt
