#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "heterformer/error.hpp"

namespace heterformer::numcore {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace detail {

struct TensorStorage {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until a gradient is first accumulated
  bool tracked = false;
};

}  // namespace detail

/// Dense row-major array of doubles with an optional gradient buffer.
///
/// Tensor is a handle: copies share storage, which is what lets a parameter
/// be consumed by many operations and collect every gradient contribution.
/// Use clone() for an independent copy. Rank is 0 (scalar), 1 (vector) or 2
/// (matrix); row-wise operations view a vector as a single row.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape) : Tensor(std::move(shape), {}) {}

  Tensor(Shape shape, std::vector<double> values)
      : storage_(std::make_shared<detail::TensorStorage>()) {
    for (auto extent : shape) {
      if (extent == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
    }
    if (shape.size() > 2) throw DimensionError("tensor rank above 2 is unsupported: " + shape_string(shape));
    const auto n = shape_size(shape);
    if (values.empty()) values.assign(n, 0.0);
    if (values.size() != n) {
      throw DimensionError("tensor of shape " + shape_string(shape) + " needs " + std::to_string(n) +
                           " values, got " + std::to_string(values.size()));
    }
    storage_->shape = std::move(shape);
    storage_->values = std::move(values);
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor scalar(double v) { return Tensor(Shape{}, {v}); }
  static Tensor vector(std::vector<double> v) {
    const auto n = v.size();
    return Tensor(Shape{n}, std::move(v));
  }
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v = {}) {
    return Tensor(Shape{rows, cols}, std::move(v));
  }
  static Tensor identity(std::size_t n) {
    Tensor t = zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) t.storage_->values[i * n + i] = 1.0;
    return t;
  }

  bool defined() const { return static_cast<bool>(storage_); }
  const Shape& shape() const { return storage_->shape; }
  std::size_t rank() const { return storage_->shape.size(); }
  std::size_t size() const { return storage_->values.size(); }
  std::size_t rows() const { return rank() == 2 ? storage_->shape[0] : 1; }
  std::size_t cols() const { return rank() == 0 ? 1 : storage_->shape.back(); }

  std::span<const double> data() const { return storage_->values; }
  std::span<double> mutable_data() { return storage_->values; }
  const std::vector<double>& values() const { return storage_->values; }

  double operator[](std::size_t i) const { return storage_->values[i]; }
  double at(std::size_t r, std::size_t c) const { return storage_->values[r * cols() + c]; }
  double item() const {
    if (size() != 1) throw ContractError("item() on non-scalar tensor " + shape_string(shape()));
    return storage_->values[0];
  }

  /// Leaves marked tracked receive gradients during backward().
  bool tracked() const { return storage_ && storage_->tracked; }
  Tensor& set_tracked(bool on = true) {
    storage_->tracked = on;
    return *this;
  }

  bool has_grad() const { return !storage_->grad.empty(); }
  /// Gradient view; all zeros when nothing has been accumulated yet.
  std::vector<double> grad() const {
    return has_grad() ? storage_->grad : std::vector<double>(size(), 0.0);
  }
  std::span<double> grad_buffer() const {
    if (storage_->grad.empty()) storage_->grad.assign(size(), 0.0);
    return storage_->grad;
  }
  std::span<const double> grad_view() const { return storage_->grad; }
  void zero_grad() { storage_->grad.clear(); }

  Tensor clone() const {
    Tensor t(shape(), storage_->values);
    t.storage_->tracked = storage_->tracked;
    return t;
  }
  /// Untracked copy of the values.
  Tensor detach() const { return Tensor(shape(), storage_->values); }

  bool same_storage(const Tensor& other) const { return storage_ == other.storage_; }

 private:
  std::shared_ptr<detail::TensorStorage> storage_;
};

}  // namespace heterformer::numcore
