#pragma once

#include "fatigue/types.hpp"

#include <random>
#include <string>
#include <vector>

namespace fatigue::nn {

/// One sample per element, each channels x time.
template <typename Scalar>
using Batch = std::vector<Matrix<Scalar>>;

template <typename Scalar>
struct Parameter {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;

  Parameter() = default;
  Parameter(std::string n, Index rows, Index cols)
      : name(std::move(n)), value(Matrix<Scalar>::Zero(rows, cols)),
        grad(Matrix<Scalar>::Zero(rows, cols)) {}

  Index size() const { return value.size(); }
};

/// Non-trainable state carried in checkpoints (batch-norm running statistics).
template <typename Scalar>
struct Buffer {
  std::string name;
  Matrix<Scalar> value;
};

template <typename Scalar>
void uniform_fill(Matrix<Scalar>& m, Scalar bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-static_cast<double>(bound),
                                              static_cast<double>(bound));
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(dist(rng));
}

template <typename Scalar>
Index channels(const Batch<Scalar>& x) {
  return x.empty() ? 0 : x.front().rows();
}

template <typename Scalar>
Index length(const Batch<Scalar>& x) {
  return x.empty() ? 0 : x.front().cols();
}

/// Stacks channels of `parts` (same batch size and length) per sample.
template <typename Scalar>
Batch<Scalar> concat_channels(const std::vector<const Batch<Scalar>*>& parts) {
  const std::size_t b = parts.front()->size();
  Batch<Scalar> out(b);
  Index total = 0;
  for (const auto* p : parts) total += channels(*p);
  const Index len = length(*parts.front());
  for (std::size_t i = 0; i < b; ++i) {
    out[i].resize(total, len);
    Index row = 0;
    for (const auto* p : parts) {
      const auto& m = (*p)[i];
      out[i].middleRows(row, m.rows()) = m;
      row += m.rows();
    }
  }
  return out;
}

template <typename Scalar>
Batch<Scalar> slice_channels(const Batch<Scalar>& x, Index first, Index count) {
  Batch<Scalar> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i].middleRows(first, count);
  return out;
}

template <typename Scalar>
void add_inplace(Batch<Scalar>& acc, const Batch<Scalar>& x) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
}

/// C x L samples -> (C*L) x B, feature index c*L + t.
template <typename Scalar>
Matrix<Scalar> flatten(const Batch<Scalar>& x) {
  const Index c = channels(x), len = length(x);
  Matrix<Scalar> out(c * len, static_cast<Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        out.col(static_cast<Index>(i)).data(), c, len) = x[i];
  }
  return out;
}

template <typename Scalar>
Batch<Scalar> unflatten(const Matrix<Scalar>& m, Index c, Index len) {
  Batch<Scalar> out(static_cast<std::size_t>(m.cols()));
  for (Index i = 0; i < m.cols(); ++i) {
    out[static_cast<std::size_t>(i)] =
        Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            m.col(i).data(), c, len);
  }
  return out;
}

/// F x B features viewed as B samples of F x 1.
template <typename Scalar>
Batch<Scalar> columns_as_batch(const Matrix<Scalar>& m) {
  Batch<Scalar> out(static_cast<std::size_t>(m.cols()));
  for (Index i = 0; i < m.cols(); ++i) out[static_cast<std::size_t>(i)] = m.col(i);
  return out;
}

template <typename Scalar>
Matrix<Scalar> batch_as_columns(const Batch<Scalar>& x) {
  Matrix<Scalar> out(channels(x), static_cast<Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) out.col(static_cast<Index>(i)) = x[i].col(0);
  return out;
}

template <typename Scalar>
bool all_finite(const Batch<Scalar>& x) {
  for (const auto& m : x) {
    if (!m.allFinite()) return false;
  }
  return true;
}

}  // namespace fatigue::nn
