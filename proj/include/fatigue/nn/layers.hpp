#pragma once

// Building blocks for the classifiers. Every layer caches what its backward
// pass needs during forward; backward accumulates into Parameter::grad and
// returns the gradient with respect to the layer input.

#include "fatigue/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace fatigue::nn {

template <typename Scalar>
using ParamVisitor = std::function<void(Parameter<Scalar>&)>;
template <typename Scalar>
using BufferVisitor = std::function<void(Buffer<Scalar>&)>;

/// Stride-1 dilated 1D convolution with explicit zero padding.
template <typename Scalar>
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(const std::string& name, Index in, Index out, Index kernel, Index dilation,
         Index pad_left, Index pad_right, bool bias = true)
      : in_(in), out_(out), kernel_(kernel), dilation_(dilation), pad_left_(pad_left),
        pad_right_(pad_right), has_bias_(bias), weight_(name + ".weight", out, kernel * in) {
    if (bias) bias_ = Parameter<Scalar>(name + ".bias", out, 1);
  }

  /// Zero padding that preserves length; the extra element of an even total
  /// goes on the right.
  static Conv1d same(const std::string& name, Index in, Index out, Index kernel,
                     Index dilation = 1, bool bias = true) {
    const Index total = dilation * (kernel - 1);
    return Conv1d(name, in, out, kernel, dilation, total / 2, total - total / 2, bias);
  }

  void init(std::mt19937_64& rng) {
    const auto bound = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(in_ * kernel_)));
    uniform_fill(weight_.value, bound, rng);
    if (has_bias_) uniform_fill(bias_.value, bound, rng);
  }

  Index in_channels() const { return in_; }
  Index out_channels() const { return out_; }
  Index kernel() const { return kernel_; }
  Index dilation() const { return dilation_; }

  Index output_length(Index len) const {
    return len + pad_left_ + pad_right_ - dilation_ * (kernel_ - 1);
  }

  Batch<Scalar> forward(const Batch<Scalar>& x) {
    input_ = x;
    Batch<Scalar> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const Index lout = output_length(x[i].cols());
      if (is_pointwise()) {
        y[i].noalias() = weight_.value * x[i];
      } else {
        im2col(x[i], lout);
        y[i].noalias() = weight_.value * cols_;
      }
      if (has_bias_) y[i].colwise() += bias_.value.col(0);
    }
    return y;
  }

  Batch<Scalar> backward(const Batch<Scalar>& dy) {
    Batch<Scalar> dx(dy.size());
    for (std::size_t i = 0; i < dy.size(); ++i) {
      const auto& x = input_[i];
      if (has_bias_) bias_.grad.col(0) += dy[i].rowwise().sum();
      if (is_pointwise()) {
        weight_.grad.noalias() += dy[i] * x.transpose();
        dx[i].noalias() = weight_.value.transpose() * dy[i];
        continue;
      }
      const Index lout = dy[i].cols();
      im2col(x, lout);
      weight_.grad.noalias() += dy[i] * cols_.transpose();
      dcols_.noalias() = weight_.value.transpose() * dy[i];
      dx[i] = Matrix<Scalar>::Zero(in_, x.cols());
      for (Index k = 0; k < kernel_; ++k) {
        const auto [t0, src0, n] = tap_range(k, x.cols(), lout);
        if (n > 0) dx[i].middleCols(src0, n) += dcols_.block(k * in_, t0, in_, n);
      }
    }
    return dx;
  }

  void visit(const ParamVisitor<Scalar>& f) {
    f(weight_);
    if (has_bias_) f(bias_);
  }

  Parameter<Scalar>& weight() { return weight_; }
  Parameter<Scalar>& bias() { return bias_; }

 private:
  struct Tap {
    Index t0, src0, n;
  };

  bool is_pointwise() const { return kernel_ == 1 && pad_left_ == 0 && pad_right_ == 0; }

  // Output positions t in [t0, t0+n) read input column t + k*dilation - pad_left.
  Tap tap_range(Index k, Index len, Index lout) const {
    const Index offset = k * dilation_ - pad_left_;
    const Index t0 = std::max<Index>(0, -offset);
    const Index t1 = std::min<Index>(lout, len - offset);
    return {t0, t0 + offset, std::max<Index>(0, t1 - t0)};
  }

  void im2col(const Matrix<Scalar>& x, Index lout) {
    cols_.setZero(kernel_ * in_, lout);
    for (Index k = 0; k < kernel_; ++k) {
      const auto [t0, src0, n] = tap_range(k, x.cols(), lout);
      if (n > 0) cols_.block(k * in_, t0, in_, n) = x.middleCols(src0, n);
    }
  }

  Index in_ = 0, out_ = 0, kernel_ = 1, dilation_ = 1, pad_left_ = 0, pad_right_ = 0;
  bool has_bias_ = true;
  Parameter<Scalar> weight_;
  Parameter<Scalar> bias_;
  Batch<Scalar> input_;
  Matrix<Scalar> cols_, dcols_;
};

/// Batch normalization over (batch, time) per channel. Training mode uses
/// batch statistics and updates the running estimates; eval mode uses the
/// running estimates only.
template <typename Scalar>
class BatchNorm1d {
 public:
  BatchNorm1d() = default;
  BatchNorm1d(const std::string& name, Index channels, double momentum = 0.1, double eps = 1e-5)
      : channels_(channels), momentum_(momentum), eps_(eps),
        gamma_(name + ".gamma", channels, 1), beta_(name + ".beta", channels, 1),
        running_mean_{name + ".running_mean", Matrix<Scalar>::Zero(channels, 1)},
        running_var_{name + ".running_var", Matrix<Scalar>::Ones(channels, 1)} {
    gamma_.value.setOnes();
  }

  Batch<Scalar> forward(const Batch<Scalar>& x, bool training) {
    training_ = training;
    Batch<Scalar> y(x.size());
    if (training) {
      Vector<Scalar> mean = Vector<Scalar>::Zero(channels_);
      count_ = 0;
      for (const auto& m : x) {
        mean += m.rowwise().sum();
        count_ += m.cols();
      }
      mean /= static_cast<Scalar>(count_);
      Vector<Scalar> var = Vector<Scalar>::Zero(channels_);
      for (const auto& m : x) var += (m.colwise() - mean).rowwise().squaredNorm();
      var /= static_cast<Scalar>(count_);
      inv_std_ = (var.array() + static_cast<Scalar>(eps_)).rsqrt().matrix();

      const auto mom = static_cast<Scalar>(momentum_);
      const Scalar unbiased =
          count_ > 1 ? static_cast<Scalar>(count_) / static_cast<Scalar>(count_ - 1) : Scalar(1);
      running_mean_.value = (1 - mom) * running_mean_.value + mom * mean;
      running_var_.value = (1 - mom) * running_var_.value + mom * unbiased * var;

      xhat_.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        xhat_[i] = ((x[i].colwise() - mean).array().colwise() * inv_std_.array()).matrix();
        y[i] = ((xhat_[i].array().colwise() * gamma_.value.col(0).array()).colwise() +
                beta_.value.col(0).array())
                   .matrix();
      }
    } else {
      inv_std_ = (running_var_.value.col(0).array() + static_cast<Scalar>(eps_)).rsqrt().matrix();
      const Vector<Scalar> scale = gamma_.value.col(0).cwiseProduct(inv_std_);
      const Vector<Scalar> shift =
          beta_.value.col(0) - scale.cwiseProduct(running_mean_.value.col(0));
      xhat_.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        xhat_[i] = ((x[i].colwise() - running_mean_.value.col(0)).array().colwise() *
                    inv_std_.array())
                       .matrix();
        y[i] = ((x[i].array().colwise() * scale.array()).colwise() + shift.array()).matrix();
      }
    }
    return y;
  }

  Batch<Scalar> backward(const Batch<Scalar>& dy) {
    Vector<Scalar> sum_dy = Vector<Scalar>::Zero(channels_);
    Vector<Scalar> sum_dy_xhat = Vector<Scalar>::Zero(channels_);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      sum_dy += dy[i].rowwise().sum();
      sum_dy_xhat += dy[i].cwiseProduct(xhat_[i]).rowwise().sum();
    }
    gamma_.grad.col(0) += sum_dy_xhat;
    beta_.grad.col(0) += sum_dy;

    Batch<Scalar> dx(dy.size());
    const Vector<Scalar> g = gamma_.value.col(0).cwiseProduct(inv_std_);
    if (!training_) {
      for (std::size_t i = 0; i < dy.size(); ++i) {
        dx[i] = (dy[i].array().colwise() * g.array()).matrix();
      }
      return dx;
    }
    const auto n = static_cast<Scalar>(count_);
    const Vector<Scalar> mean_dy = sum_dy / n;
    const Vector<Scalar> mean_dy_xhat = sum_dy_xhat / n;
    for (std::size_t i = 0; i < dy.size(); ++i) {
      auto centered = (dy[i].colwise() - mean_dy).array() -
                      xhat_[i].array().colwise() * mean_dy_xhat.array();
      dx[i] = (centered.colwise() * g.array()).matrix();
    }
    return dx;
  }

  void visit(const ParamVisitor<Scalar>& f) {
    f(gamma_);
    f(beta_);
  }
  void visit_buffers(const BufferVisitor<Scalar>& f) {
    f(running_mean_);
    f(running_var_);
  }

 private:
  Index channels_ = 0;
  double momentum_ = 0.1, eps_ = 1e-5;
  Parameter<Scalar> gamma_, beta_;
  Buffer<Scalar> running_mean_, running_var_;
  bool training_ = true;
  Index count_ = 0;
  Vector<Scalar> inv_std_;
  Batch<Scalar> xhat_;
};

template <typename Scalar>
class Relu {
 public:
  Batch<Scalar> forward(const Batch<Scalar>& x) {
    Batch<Scalar> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i].cwiseMax(Scalar(0));
    output_ = y;
    return y;
  }
  Batch<Scalar> backward(const Batch<Scalar>& dy) const {
    Batch<Scalar> dx(dy.size());
    for (std::size_t i = 0; i < dy.size(); ++i) {
      dx[i] = (output_[i].array() > Scalar(0)).select(dy[i], Scalar(0));
    }
    return dx;
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x) {
    Matrix<Scalar> y = x.cwiseMax(Scalar(0));
    dense_output_ = y;
    return y;
  }
  Matrix<Scalar> backward(const Matrix<Scalar>& dy) const {
    return (dense_output_.array() > Scalar(0)).select(dy, Scalar(0));
  }

 private:
  Batch<Scalar> output_;
  Matrix<Scalar> dense_output_;
};

/// Max pooling; padded positions never win. Ties go to the earliest index.
template <typename Scalar>
class MaxPool1d {
 public:
  MaxPool1d() = default;
  MaxPool1d(Index kernel, Index stride, Index pad_left = 0, Index pad_right = 0)
      : kernel_(kernel), stride_(stride), pad_left_(pad_left), pad_right_(pad_right) {}

  static MaxPool1d same(Index kernel) {
    return MaxPool1d(kernel, 1, (kernel - 1) / 2, kernel - 1 - (kernel - 1) / 2);
  }

  Index output_length(Index len) const {
    const Index span = len + pad_left_ + pad_right_ - kernel_;
    return span < 0 ? 0 : span / stride_ + 1;
  }

  Batch<Scalar> forward(const Batch<Scalar>& x) {
    Batch<Scalar> y(x.size());
    argmax_.assign(x.size(), Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>());
    input_len_ = x.empty() ? 0 : x.front().cols();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const Index len = x[i].cols(), lout = output_length(len);
      y[i].resize(x[i].rows(), lout);
      argmax_[i].resize(x[i].rows(), lout);
      for (Index t = 0; t < lout; ++t) {
        const Index lo = std::max<Index>(0, t * stride_ - pad_left_);
        const Index hi = std::min<Index>(len, t * stride_ - pad_left_ + kernel_);
        for (Index c = 0; c < x[i].rows(); ++c) {
          Index best = lo;
          Scalar v = x[i](c, lo);
          for (Index s = lo + 1; s < hi; ++s) {
            if (x[i](c, s) > v) {
              v = x[i](c, s);
              best = s;
            }
          }
          y[i](c, t) = v;
          argmax_[i](c, t) = best;
        }
      }
    }
    return y;
  }

  Batch<Scalar> backward(const Batch<Scalar>& dy) const {
    Batch<Scalar> dx(dy.size());
    for (std::size_t i = 0; i < dy.size(); ++i) {
      dx[i] = Matrix<Scalar>::Zero(dy[i].rows(), input_len_);
      for (Index t = 0; t < dy[i].cols(); ++t) {
        for (Index c = 0; c < dy[i].rows(); ++c) dx[i](c, argmax_[i](c, t)) += dy[i](c, t);
      }
    }
    return dx;
  }

 private:
  Index kernel_ = 2, stride_ = 2, pad_left_ = 0, pad_right_ = 0;
  Index input_len_ = 0;
  std::vector<Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>> argmax_;
};

/// Mean over time: C x L samples -> C x B.
template <typename Scalar>
class GlobalAvgPool {
 public:
  Matrix<Scalar> forward(const Batch<Scalar>& x) {
    len_ = length(x);
    Matrix<Scalar> y(channels(x), static_cast<Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
      y.col(static_cast<Index>(i)) = x[i].rowwise().mean();
    }
    return y;
  }
  Batch<Scalar> backward(const Matrix<Scalar>& dy) const {
    Batch<Scalar> dx(static_cast<std::size_t>(dy.cols()));
    const Scalar inv = Scalar(1) / static_cast<Scalar>(len_);
    for (Index i = 0; i < dy.cols(); ++i) {
      dx[static_cast<std::size_t>(i)] = (dy.col(i) * inv).replicate(1, len_);
    }
    return dx;
  }

 private:
  Index len_ = 0;
};

/// Fully connected layer on F x B feature columns.
template <typename Scalar>
class Dense {
 public:
  Dense() = default;
  Dense(const std::string& name, Index in, Index out)
      : in_(in), out_(out), weight_(name + ".weight", out, in), bias_(name + ".bias", out, 1) {}

  void init(std::mt19937_64& rng) {
    const auto bound = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(in_)));
    uniform_fill(weight_.value, bound, rng);
    uniform_fill(bias_.value, bound, rng);
  }

  Index in_features() const { return in_; }
  Index out_features() const { return out_; }

  Matrix<Scalar> forward(const Matrix<Scalar>& x) {
    input_ = x;
    Matrix<Scalar> y = weight_.value * x;
    y.colwise() += bias_.value.col(0);
    return y;
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& dy) {
    weight_.grad.noalias() += dy * input_.transpose();
    bias_.grad.col(0) += dy.rowwise().sum();
    return weight_.value.transpose() * dy;
  }

  void visit(const ParamVisitor<Scalar>& f) {
    f(weight_);
    f(bias_);
  }

  Parameter<Scalar>& weight() { return weight_; }
  Parameter<Scalar>& bias() { return bias_; }

 private:
  Index in_ = 0, out_ = 0;
  Parameter<Scalar> weight_, bias_;
  Matrix<Scalar> input_;
};

/// Column-wise softmax of K x B logits.
template <typename Scalar>
Matrix<Scalar> softmax(const Matrix<Scalar>& logits) {
  Matrix<Scalar> p = (logits.rowwise() - logits.colwise().maxCoeff()).array().exp().matrix();
  p.array().rowwise() /= p.colwise().sum().array();
  return p;
}

/// Gradient wrt logits given gradient wrt probabilities `p`.
template <typename Scalar>
Matrix<Scalar> softmax_backward(const Matrix<Scalar>& p, const Matrix<Scalar>& dp) {
  const auto dot = p.cwiseProduct(dp).colwise().sum();
  return p.cwiseProduct(dp.rowwise() - dot);
}

}  // namespace fatigue::nn
