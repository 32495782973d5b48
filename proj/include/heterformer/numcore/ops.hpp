#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "heterformer/numcore/kernels.hpp"
#include "heterformer/numcore/tape.hpp"
#include "heterformer/numcore/tensor.hpp"

namespace heterformer::numcore {

/// Boolean mask for masked_softmax: 1 keeps a position, 0 removes it. Either
/// one entry per column (shared by every row) or one entry per element.
using Mask = std::vector<std::uint8_t>;

namespace detail {

inline bool should_record(std::initializer_list<const Tensor*> inputs) {
  if (active_tape() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->tracked()) return true;
  }
  return false;
}

template <class Fn>
void record(Tensor& out, Fn&& fn) {
  out.set_tracked(true);
  active_tape()->record(std::forward<Fn>(fn));
}

inline void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw DimensionError(std::string(op) + " expects a matrix, got " + shape_string(t.shape()));
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

// Output keeps the row structure of the input: a vector stays a vector.
inline Shape row_shape(const Tensor& like, std::size_t rows, std::size_t cols) {
  if (like.rank() <= 1 && rows == 1) return Shape{cols};
  return Shape{rows, cols};
}

}  // namespace detail

/// a[m x k] * b[k x n]
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require_matrix(a, "matmul");
  detail::require_matrix(b, "matmul");
  const auto m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions disagree, " + shape_string(a.shape()) + " * " +
                         shape_string(b.shape()));
  }
  Tensor out = Tensor::zeros({m, n});
  kernels::gemm_nn(a.data().data(), b.data().data(), out.mutable_data().data(), m, k, n);
  if (detail::should_record({&a, &b})) {
    detail::record(out, [a, b, out, m, k, n]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad_view().data();
      if (a.tracked()) kernels::gemm_nt(g, b.data().data(), a.grad_buffer().data(), m, n, k);
      if (b.tracked()) kernels::gemm_tn(a.data().data(), g, b.grad_buffer().data(), m, k, n);
    });
  }
  return out;
}

/// a[m x k] * b[n x k]^T. A vector `a` is treated as one row and the result
/// is a vector, which makes this the natural row-vector projection x W^T.
inline Tensor matmul_bt(const Tensor& a, const Tensor& b) {
  detail::require_matrix(b, "matmul_bt");
  if (a.rank() == 0) throw DimensionError("matmul_bt: scalar operand");
  const auto m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) {
    throw DimensionError("matmul_bt: inner dimensions disagree, " + shape_string(a.shape()) + " * " +
                         shape_string(b.shape()) + "^T");
  }
  Tensor out = Tensor::zeros(detail::row_shape(a, m, n));
  kernels::gemm_nt(a.data().data(), b.data().data(), out.mutable_data().data(), m, k, n);
  if (detail::should_record({&a, &b})) {
    detail::record(out, [a, b, out, m, k, n]() mutable {
      if (!out.has_grad()) return;
      const double* g = out.grad_view().data();
      if (a.tracked()) kernels::gemm_nn(g, b.data().data(), a.grad_buffer().data(), m, n, k);
      if (b.tracked()) kernels::gemm_tn(g, a.data().data(), b.grad_buffer().data(), m, n, k);
    });
  }
  return out;
}

inline Tensor transpose(const Tensor& a) {
  detail::require_matrix(a, "transpose");
  const auto m = a.rows(), n = a.cols();
  Tensor out = Tensor::zeros({n, m});
  auto o = out.mutable_data();
  const auto x = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) o[j * m + i] = x[i * n + j];
  if (detail::should_record({&a})) {
    detail::record(out, [a, out, m, n]() mutable {
      if (!out.has_grad() || !a.tracked()) return;
      auto g = out.grad_view();
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
    });
  }
  return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "add");
  Tensor out = a.detach();
  auto o = out.mutable_data();
  const auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += y[i];
  if (detail::should_record({&a, &b})) {
    detail::record(out, [a, b, out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad_view();
      for (const Tensor* t : {&a, &b}) {
        if (!t->tracked()) continue;
        auto gt = t->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i];
      }
    });
  }
  return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "sub");
  Tensor out = a.detach();
  auto o = out.mutable_data();
  const auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= y[i];
  if (detail::should_record({&a, &b})) {
    detail::record(out, [a, b, out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad_view();
      if (a.tracked()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.tracked()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

/// Elementwise product.
inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "mul");
  Tensor out = a.detach();
  auto o = out.mutable_data();
  const auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= y[i];
  if (detail::should_record({&a, &b})) {
    detail::record(out, [a, b, out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad_view();
      if (a.tracked()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
      }
      if (b.tracked()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
      }
    });
  }
  return out;
}

inline Tensor scale(const Tensor& a, double factor) {
  Tensor out = a.detach();
  for (double& v : out.mutable_data()) v *= factor;
  if (detail::should_record({&a})) {
    detail::record(out, [a, out, factor]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad_view();
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
    });
  }
  return out;
}

/// x[n x d] + bias[d], bias broadcast over rows.
inline Tensor add_bias(const Tensor& x, const Tensor& bias) {
  const auto n = x.rows(), d = x.cols();
  if (bias.size() != d) {
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) + " does not match rows of " +
                         shape_string(x.shape()));
  }
  Tensor out = x.detach();
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) o[i * d + j] += bias[j];
  if (detail::should_record({&x, &bias})) {
    detail::record(out, [x, bias, out, n, d]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad_view();
      if (x.tracked()) {
        auto gx = x.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (bias.tracked()) {
        auto gb = bias.grad_buffer();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < d; ++j) gb[j] += g[i * d + j];
      }
    });
  }
  return out;
}

/// x W^T (+ b): the row-vector affine map used by every projection.
inline Tensor linear(const Tensor& x, const Tensor& weight) { return matmul_bt(x, weight); }
inline Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return add_bias(matmul_bt(x, weight), bias);
}

/// Row-wise softmax over the last axis restricted to unmasked positions.
/// Masked positions come out exactly 0 and receive exactly 0 gradient.
inline Tensor masked_softmax(const Tensor& logits, const Mask& mask) {
  const auto n = logits.rows(), c = logits.cols();
  const bool per_row = mask.size() == c;
  if (!per_row && mask.size() != logits.size()) {
    throw DimensionError("masked_softmax: mask of length " + std::to_string(mask.size()) +
                         " fits neither the columns nor the elements of " + shape_string(logits.shape()));
  }
  auto keep = [&](std::size_t i, std::size_t j) { return mask[per_row ? j : i * c + j] != 0; };
  Tensor out = Tensor::zeros(logits.shape());
  auto o = out.mutable_data();
  const auto x = logits.data();
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < c; ++j) {
      if (!keep(i, j)) continue;
      any = true;
      mx = std::max(mx, x[i * c + j]);
    }
    if (!any) throw ContractError("masked_softmax: row " + std::to_string(i) + " is fully masked");
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (!keep(i, j)) continue;
      o[i * c + j] = std::exp(x[i * c + j] - mx);
      total += o[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) o[i * c + j] /= total;
  }
  if (detail::should_record({&logits})) {
    detail::record(out, [logits, out, n, c]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad_view();
      auto y = out.data();
      auto gx = logits.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        const double inner = kernels::dot(&g[i * c], &y[i * c], c);
        for (std::size_t j = 0; j < c; ++j) {
          const double yj = y[i * c + j];
          if (yj != 0.0) gx[i * c + j] += yj * (g[i * c + j] - inner);
        }
      }
    });
  }
  return out;
}

inline Tensor softmax(const Tensor& logits) { return masked_softmax(logits, Mask(logits.cols(), 1)); }

inline constexpr double kLayerNormEps = 1e-12;

/// Normalizes each row over the last axis, then applies gamma * x + beta.
inline Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = kLayerNormEps) {
  const auto n = x.rows(), d = x.cols();
  if (gamma.size() != d || beta.size() != d) {
    throw DimensionError("layer_norm: gamma " + shape_string(gamma.shape()) + " / beta " +
                         shape_string(beta.shape()) + " do not match width of " + shape_string(x.shape()));
  }
  Tensor out = Tensor::zeros(x.shape());
  std::vector<double> xhat(x.size());
  std::vector<double> rstd(n);
  auto o = out.mutable_data();
  const auto v = x.data();
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += v[i * d + j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = v[i * d + j] - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(d);
    rstd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[i * d + j] = (v[i * d + j] - mean) * rstd[i];
      o[i * d + j] = gamma[j] * xhat[i * d + j] + beta[j];
    }
  }
  if (detail::should_record({&x, &gamma, &beta})) {
    detail::record(out, [x, gamma, beta, out, xhat = std::move(xhat), rstd = std::move(rstd), n, d]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad_view();
      if (gamma.tracked() || beta.tracked()) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < d; ++j) {
            if (gamma.tracked()) gamma.grad_buffer()[j] += g[i * d + j] * xhat[i * d + j];
            if (beta.tracked()) beta.grad_buffer()[j] += g[i * d + j];
          }
        }
      }
      if (!x.tracked()) return;
      auto gx = x.grad_buffer();
      std::vector<double> dxhat(d);
      for (std::size_t i = 0; i < n; ++i) {
        double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          dxhat[j] = g[i * d + j] * gamma[j];
          mean_dxhat += dxhat[j];
          mean_dxhat_xhat += dxhat[j] * xhat[i * d + j];
        }
        mean_dxhat /= static_cast<double>(d);
        mean_dxhat_xhat /= static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j) {
          gx[i * d + j] += rstd[i] * (dxhat[j] - mean_dxhat - xhat[i * d + j] * mean_dxhat_xhat);
        }
      }
    });
  }
  return out;
}

namespace detail {
inline constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
inline constexpr double kGeluA = 0.044715;
}  // namespace detail

inline double gelu_scalar(double x) {
  return 0.5 * x * (1.0 + std::tanh(detail::kGeluC * (x + detail::kGeluA * x * x * x)));
}

/// Tanh-approximation GELU.
inline Tensor gelu(const Tensor& x) {
  Tensor out = x.detach();
  for (double& v : out.mutable_data()) v = gelu_scalar(v);
  if (detail::should_record({&x})) {
    detail::record(out, [x, out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad_view();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = x[i];
        const double t = std::tanh(detail::kGeluC * (v + detail::kGeluA * v * v * v));
        const double dt = (1.0 - t * t) * detail::kGeluC * (1.0 + 3.0 * detail::kGeluA * v * v);
        gx[i] += g[i] * (0.5 * (1.0 + t) + 0.5 * v * dt);
      }
    });
  }
  return out;
}

inline Tensor relu(const Tensor& x) {
  Tensor out = x.detach();
  for (double& v : out.mutable_data()) v = v > 0.0 ? v : 0.0;
  if (detail::should_record({&x})) {
    detail::record(out, [x, out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad_view();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (x[i] > 0.0) gx[i] += g[i];
    });
  }
  return out;
}

/// Rows `ids` of `table`; the backward pass scatter-adds into the table.
inline Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  detail::require_matrix(table, "gather_rows");
  const auto d = table.cols();
  if (ids.empty()) throw DimensionError("gather_rows: empty index list");
  Tensor out = Tensor::zeros({ids.size(), d});
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= table.rows()) {
      throw DimensionError("gather_rows: index " + std::to_string(ids[i]) + " out of range for " +
                           shape_string(table.shape()));
    }
    std::copy_n(table.data().begin() + static_cast<std::ptrdiff_t>(ids[i] * d), d, o.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  if (detail::should_record({&table})) {
    detail::record(out, [table, out, idx = std::vector<std::size_t>(ids.begin(), ids.end()), d]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad_view();
      auto gt = table.grad_buffer();
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) gt[idx[i] * d + j] += g[i * d + j];
    });
  }
  return out;
}

inline Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  const auto d = x.cols();
  if (count == 0 || begin + count > x.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside " + shape_string(x.shape()));
  }
  Tensor out(Shape{count, d},
             std::vector<double>(x.data().begin() + static_cast<std::ptrdiff_t>(begin * d),
                                 x.data().begin() + static_cast<std::ptrdiff_t>((begin + count) * d)));
  if (detail::should_record({&x})) {
    detail::record(out, [x, out, begin, d]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad_view();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gx[begin * d + i] += g[i];
    });
  }
  return out;
}

/// Row `index` as a vector.
inline Tensor row(const Tensor& x, std::size_t index) {
  const auto d = x.cols();
  if (index >= x.rows()) {
    throw DimensionError("row: index " + std::to_string(index) + " outside " + shape_string(x.shape()));
  }
  Tensor out(Shape{d}, std::vector<double>(x.data().begin() + static_cast<std::ptrdiff_t>(index * d),
                                           x.data().begin() + static_cast<std::ptrdiff_t>((index + 1) * d)));
  if (detail::should_record({&x})) {
    detail::record(out, [x, out, index, d]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad_view();
      auto gx = x.grad_buffer();
      for (std::size_t j = 0; j < d; ++j) gx[index * d + j] += g[j];
    });
  }
  return out;
}

inline Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  const auto n = x.rows(), d = x.cols();
  if (count == 0 || begin + count > d) {
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside " + shape_string(x.shape()));
  }
  Tensor out = Tensor::zeros(detail::row_shape(x, n, count));
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < count; ++j) o[i * count + j] = x[i * d + begin + j];
  if (detail::should_record({&x})) {
    detail::record(out, [x, out, begin, n, d, count]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad_view();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < count; ++j) gx[i * d + begin + j] += g[i * count + j];
    });
  }
  return out;
}

/// Stacks row blocks; vectors count as single rows.
inline Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const auto d = parts.front().cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.cols() != d || p.rank() == 0) {
      throw DimensionError("concat_rows: width mismatch " + shape_string(parts.front().shape()) + " vs " +
                           shape_string(p.shape()));
    }
    total += p.rows();
  }
  std::vector<double> values;
  values.reserve(total * d);
  bool any_tracked = false;
  for (const auto& p : parts) {
    values.insert(values.end(), p.data().begin(), p.data().end());
    any_tracked = any_tracked || p.tracked();
  }
  Tensor out(Shape{total, d}, std::move(values));
  if (active_tape() != nullptr && any_tracked) {
    detail::record(out, [parts, out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad_view();
      std::size_t offset = 0;
      for (auto& p : parts) {
        if (p.tracked()) {
          auto gp = p.grad_buffer();
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offset + i];
        }
        offset += p.size();
      }
    });
  }
  return out;
}

/// Side-by-side concatenation of equal-height blocks.
inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const auto n = parts.front().rows();
  std::size_t width = 0;
  bool any_tracked = false;
  for (const auto& p : parts) {
    if (p.rows() != n) {
      throw DimensionError("concat_cols: height mismatch " + shape_string(parts.front().shape()) + " vs " +
                           shape_string(p.shape()));
    }
    width += p.cols();
    any_tracked = any_tracked || p.tracked();
  }
  Tensor out = Tensor::zeros(detail::row_shape(parts.front(), n, width));
  auto o = out.mutable_data();
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto w = p.cols();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) o[i * width + offset + j] = p[i * w + j];
    offset += w;
  }
  if (active_tape() != nullptr && any_tracked) {
    detail::record(out, [parts, out, n, width]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad_view();
      std::size_t off = 0;
      for (auto& p : parts) {
        const auto w = p.cols();
        if (p.tracked()) {
          auto gp = p.grad_buffer();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < w; ++j) gp[i * w + j] += g[i * width + off + j];
        }
        off += w;
      }
    });
  }
  return out;
}

inline Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  Tensor out = Tensor::scalar(total);
  if (detail::should_record({&x})) {
    detail::record(out, [x, out]() mutable {
      if (!out.has_grad()) return;
      const double g = out.grad_view()[0];
      for (double& gx : x.grad_buffer()) gx += g;
    });
  }
  return out;
}

inline Tensor dot(const Tensor& a, const Tensor& b) { return sum(mul(a, b)); }

/// Column means over rows: [n x d] -> [d].
inline Tensor mean_rows(const Tensor& x) {
  const auto n = x.rows(), d = x.cols();
  Tensor out = Tensor::zeros({d});
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) o[j] += x[i * d + j];
  for (double& v : o) v /= static_cast<double>(n);
  if (detail::should_record({&x})) {
    detail::record(out, [x, out, n, d]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad_view();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += g[j] / static_cast<double>(n);
    });
  }
  return out;
}

/// Mean over rows of -log softmax(logits[i])[targets[i]], max-stabilized.
inline Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets) {
  const auto n = logits.rows(), c = logits.cols();
  if (targets.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         shape_string(logits.shape()));
  }
  std::vector<double> probs(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (targets[i] >= c) throw DimensionError("cross_entropy: target " + std::to_string(targets[i]) + " >= " + std::to_string(c));
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, logits[i * c + j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      probs[i * c + j] = std::exp(logits[i * c + j] - mx);
      z += probs[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] /= z;
    total += (mx + std::log(z)) - logits[i * c + targets[i]];
  }
  Tensor out = Tensor::scalar(total / static_cast<double>(n));
  if (detail::should_record({&logits})) {
    detail::record(out, [logits, out, probs = std::move(probs), tgt = std::vector<std::size_t>(targets.begin(), targets.end()), n, c]() mutable {
      if (!out.has_grad()) return;
      const double g = out.grad_view()[0] / static_cast<double>(n);
      auto gx = logits.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g * probs[i * c + j];
        gx[i * c + tgt[i]] -= g;
      }
    });
  }
  return out;
}

inline bool all_finite(const Tensor& t) {
  for (double v : t.data())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace heterformer::numcore
