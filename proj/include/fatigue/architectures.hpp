#pragma once

// Concrete classifier classes. Most callers only need models.hpp; these are
// exposed for introspection (widths, embeddings, branch outputs).

#include "fatigue/models.hpp"

namespace fatigue {

/// Dense block of dilated convolutions (conv -> BN -> ReLU per layer, each
/// layer fed the concatenation of the input and all earlier outputs), global
/// average pooling, linear embedding, then BN -> ReLU -> linear head.
template <typename Scalar>
class Ekyt final : public Model<Scalar> {
 public:
  explicit Ekyt(const ModelSpec& spec);

  Index pre_pool_width() const;
  Index embedding_dim() const { return embed_.out_features(); }
  const std::vector<Index>& dilations() const { return dilations_; }
  /// Embedding (embedding_dim x B) from the last forward.
  const Matrix<Scalar>& embedding() const { return embedding_; }

  void visit_parameters(const nn::ParamVisitor<Scalar>& f) override;
  void visit_buffers(const nn::BufferVisitor<Scalar>& f) override;

 protected:
  Matrix<Scalar> forward_logits(const nn::Batch<Scalar>& x) override;
  void backward_logits(const Matrix<Scalar>& dlogits) override;

 private:
  std::vector<Index> dilations_;
  std::vector<nn::Conv1d<Scalar>> convs_;
  std::vector<nn::BatchNorm1d<Scalar>> bns_;
  std::vector<nn::Relu<Scalar>> relus_;
  nn::GlobalAvgPool<Scalar> gap_;
  nn::Dense<Scalar> embed_;
  nn::BatchNorm1d<Scalar> head_bn_;
  nn::Relu<Scalar> head_relu_;
  nn::Dense<Scalar> out_;
  std::vector<Index> part_widths_;
  Matrix<Scalar> embedding_;
};

template <typename Scalar>
class Fcn final : public Model<Scalar> {
 public:
  explicit Fcn(const ModelSpec& spec);
  std::vector<Index> widths() const;

  void visit_parameters(const nn::ParamVisitor<Scalar>& f) override;
  void visit_buffers(const nn::BufferVisitor<Scalar>& f) override;

 protected:
  Matrix<Scalar> forward_logits(const nn::Batch<Scalar>& x) override;
  void backward_logits(const Matrix<Scalar>& dlogits) override;

 private:
  std::array<nn::Conv1d<Scalar>, 3> convs_;
  std::array<nn::BatchNorm1d<Scalar>, 3> bns_;
  std::array<nn::Relu<Scalar>, 3> relus_;
  nn::GlobalAvgPool<Scalar> gap_;
  nn::Dense<Scalar> out_;
};

/// Inception blocks with an optional bottleneck, three parallel convolutions
/// and a max-pool branch; residual shortcuts every third block.
template <typename Scalar>
class Inception final : public Model<Scalar> {
 public:
  explicit Inception(const ModelSpec& spec);

  int block_count() const { return static_cast<int>(blocks_.size()); }
  Index block_output_width() const;
  /// 1-based block numbers after which a shortcut is added.
  std::vector<int> residual_after() const;

  void visit_parameters(const nn::ParamVisitor<Scalar>& f) override;
  void visit_buffers(const nn::BufferVisitor<Scalar>& f) override;

 protected:
  Matrix<Scalar> forward_logits(const nn::Batch<Scalar>& x) override;
  void backward_logits(const Matrix<Scalar>& dlogits) override;

 private:
  struct Block {
    bool use_bottleneck = false;
    nn::Conv1d<Scalar> bottleneck;
    std::array<nn::Conv1d<Scalar>, 3> convs;
    nn::MaxPool1d<Scalar> pool;
    nn::Conv1d<Scalar> pool_conv;
    nn::BatchNorm1d<Scalar> bn;
    nn::Relu<Scalar> relu;
    Index branch_width = 0;

    nn::Batch<Scalar> forward(const nn::Batch<Scalar>& x, bool training);
    nn::Batch<Scalar> backward(const nn::Batch<Scalar>& dy);
  };
  struct Shortcut {
    int after_block = 0;  // 1-based
    nn::Conv1d<Scalar> conv;
    nn::BatchNorm1d<Scalar> bn;
    nn::Relu<Scalar> relu;
  };

  std::vector<Block> blocks_;
  std::vector<Shortcut> shortcuts_;
  nn::GlobalAvgPool<Scalar> gap_;
  nn::Dense<Scalar> out_;
};

/// Independent per-channel convolution towers, concatenated into a hidden
/// fully connected layer.
template <typename Scalar>
class Mcdcnn final : public Model<Scalar> {
 public:
  explicit Mcdcnn(const ModelSpec& spec);

  Index flatten_width() const { return hidden_.in_features(); }
  Index hidden_width() const { return hidden_.out_features(); }
  /// Flattened features of channel `c` from the last forward (F x B).
  Matrix<Scalar> branch_output(Index c) const;
  /// Parameters belonging to channel `c`'s tower.
  std::vector<nn::Parameter<Scalar>*> branch_parameters(Index c);

  void visit_parameters(const nn::ParamVisitor<Scalar>& f) override;

 protected:
  Matrix<Scalar> forward_logits(const nn::Batch<Scalar>& x) override;
  void backward_logits(const Matrix<Scalar>& dlogits) override;

 private:
  struct Tower {
    nn::Conv1d<Scalar> conv1, conv2;
    nn::Relu<Scalar> relu1, relu2;
    nn::MaxPool1d<Scalar> pool1, pool2;
    Index out_len = 0;
  };
  std::vector<Tower> towers_;
  Index per_channel_ = 0;
  Matrix<Scalar> features_;
  nn::Dense<Scalar> hidden_;
  nn::Relu<Scalar> hidden_relu_;
  nn::Dense<Scalar> out_;
};

template <typename Scalar>
class Tcn final : public Model<Scalar> {
 public:
  explicit Tcn(const ModelSpec& spec);
  std::vector<Index> widths() const;

  void visit_parameters(const nn::ParamVisitor<Scalar>& f) override;

 protected:
  Matrix<Scalar> forward_logits(const nn::Batch<Scalar>& x) override;
  void backward_logits(const Matrix<Scalar>& dlogits) override;

 private:
  std::array<nn::Conv1d<Scalar>, 3> convs_;
  std::array<nn::Relu<Scalar>, 3> relus_;
  nn::GlobalAvgPool<Scalar> gap_;
  nn::Dense<Scalar> out_;
};

template <typename Scalar>
class TleNet final : public Model<Scalar> {
 public:
  explicit TleNet(const ModelSpec& spec);

  Index flatten_width() const { return hidden_.in_features(); }
  Index hidden_width() const { return hidden_.out_features(); }
  std::array<Index, 2> filters() const {
    return {conv1_.out_channels(), conv2_.out_channels()};
  }

  void visit_parameters(const nn::ParamVisitor<Scalar>& f) override;

 protected:
  Matrix<Scalar> forward_logits(const nn::Batch<Scalar>& x) override;
  void backward_logits(const Matrix<Scalar>& dlogits) override;

 private:
  nn::Conv1d<Scalar> conv1_, conv2_;
  nn::MaxPool1d<Scalar> pool1_, pool2_;
  Index pooled_len_ = 0;
  nn::Dense<Scalar> hidden_;
  nn::Relu<Scalar> hidden_relu_;
  nn::Dense<Scalar> out_;
};

}  // namespace fatigue
