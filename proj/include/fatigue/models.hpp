#pragma once

#include "fatigue/nn/layers.hpp"
#include "fatigue/types.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

namespace fatigue {

enum class ModelKind { EKYT, FCN, TCN, INCEPTION, MCDCNN, TLENET };

/// Row order of the accuracy tables.
inline constexpr std::array<ModelKind, 6> kAllModels = {
    ModelKind::EKYT,   ModelKind::FCN,    ModelKind::TCN,
    ModelKind::MCDCNN, ModelKind::TLENET, ModelKind::INCEPTION};

std::string_view to_string(ModelKind kind);
/// Accepts the canonical names plus "TLE-NET" and "INCEPTIONTIME" (case-insensitive).
std::optional<ModelKind> parse_model_kind(std::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::EKYT;
  Index in_channels = 4;
  Index input_len = 1250;
  Index n_classes = 2;
  std::uint64_t seed = 0;

  // EKYT dense block
  int ekyt_layers = 8;
  Index ekyt_growth = 32;
  Index ekyt_embedding = 128;
  Index ekyt_max_dilation = 64;

  // InceptionTime
  int inception_depth = 6;
  Index inception_filters = 32;
  Index inception_bottleneck = 32;
  bool inception_residual = true;
  std::array<Index, 3> inception_kernels = {8, 4, 2};

  Index mcdcnn_hidden = 732;
  Index tlenet_hidden = 500;

  /// Throws Errc::InvalidSpec.
  void validate() const;
};

/// Dilation of EKYT dense layer `i`: 2^i, held at the cap once reached.
std::vector<Index> ekyt_dilations(const ModelSpec& spec);

enum class Mode { Train, Eval };

template <typename Scalar>
class Model {
 public:
  explicit Model(ModelSpec spec) : spec_(std::move(spec)) {}
  virtual ~Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelSpec& spec() const { return spec_; }
  Mode mode() const { return mode_; }
  void set_mode(Mode m) { mode_ = m; }
  bool training() const { return mode_ == Mode::Train; }

  /// B x 2 class probabilities; column 1 is the fatigue class.
  /// Throws ShapeMismatch / NonFiniteInput.
  Matrix<Scalar> forward(const nn::Batch<Scalar>& x);

  /// Back-propagates dLoss/dProbs (B x 2) from the last forward, accumulating
  /// parameter gradients. Throws NonFiniteGradient.
  void backward(const Matrix<Scalar>& grad_probs);

  void zero_grad();
  std::vector<nn::Parameter<Scalar>*> parameters();
  std::vector<nn::Buffer<Scalar>*> buffers();
  Index parameter_count();

  virtual void visit_parameters(const nn::ParamVisitor<Scalar>& f) = 0;
  virtual void visit_buffers(const nn::BufferVisitor<Scalar>& /*f*/) {}

 protected:
  virtual Matrix<Scalar> forward_logits(const nn::Batch<Scalar>& x) = 0;
  virtual void backward_logits(const Matrix<Scalar>& dlogits) = 0;

 private:
  ModelSpec spec_;
  Mode mode_ = Mode::Train;
  Matrix<Scalar> probs_;  // K x B
};

template <typename Scalar>
std::unique_ptr<Model<Scalar>> build_ekyt(const ModelSpec& spec);
template <typename Scalar>
std::unique_ptr<Model<Scalar>> build_fcn(const ModelSpec& spec);
template <typename Scalar>
std::unique_ptr<Model<Scalar>> build_inception(const ModelSpec& spec);
template <typename Scalar>
std::unique_ptr<Model<Scalar>> build_mcdcnn(const ModelSpec& spec);
template <typename Scalar>
std::unique_ptr<Model<Scalar>> build_tcn(const ModelSpec& spec);
template <typename Scalar>
std::unique_ptr<Model<Scalar>> build_tlenet(const ModelSpec& spec);

/// Dispatches on spec.kind.
template <typename Scalar>
std::unique_ptr<Model<Scalar>> make_model(const ModelSpec& spec);

}  // namespace fatigue
