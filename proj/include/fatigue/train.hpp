#pragma once

#include "fatigue/models.hpp"
#include "fatigue/preprocess.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fatigue {

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] inside the loss.
inline constexpr double kProbClamp = 1e-7;

/// Mean binary cross-entropy of the fatigue-class probability (column 1 of
/// the B x 2 `probs`) against 0/1 labels.
template <typename Scalar>
Scalar bce_loss(const Matrix<Scalar>& probs, std::span<const int> labels);

/// dLoss/dProbs, B x 2. Zero where the clamp is active.
template <typename Scalar>
Matrix<Scalar> bce_loss_grad(const Matrix<Scalar>& probs, std::span<const int> labels);

enum class OptimizerKind { Adam, SgdMomentum };
enum class Precision { Float32, Float64 };

std::string_view to_string(OptimizerKind k);
std::string_view to_string(Precision p);

template <typename Scalar>
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(const std::vector<nn::Parameter<Scalar>*>& params) = 0;
};

template <typename Scalar>
class Adam final : public Optimizer<Scalar> {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(const std::vector<nn::Parameter<Scalar>*>& params) override;

 private:
  double lr_, beta1_, beta2_, eps_;
  long step_ = 0;
  std::vector<Matrix<Scalar>> m_, v_;
};

template <typename Scalar>
class SgdMomentum final : public Optimizer<Scalar> {
 public:
  explicit SgdMomentum(double lr, double momentum = 0.9) : lr_(lr), momentum_(momentum) {}
  void step(const std::vector<nn::Parameter<Scalar>*>& params) override;

 private:
  double lr_, momentum_;
  std::vector<Matrix<Scalar>> velocity_;
};

struct TrainConfig {
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::uint64_t seed = 42;
  double split_fraction = 0.8;
  bool stratify = true;
  bool shuffle = true;
  Precision precision = Precision::Float32;
  ChannelConfig channels;

  /// Throws Errc::InvalidConfig.
  void validate() const;
};

struct UserSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

/// Participant-level split. With `stratify`, each class is shuffled and cut
/// separately at round(fraction * n_class), keeping at least one participant
/// of every class on each side. Throws TooFewParticipants.
UserSplit split_users(std::span<const std::string> participants, std::span<const bool> labels,
                      double fraction, std::uint64_t seed, bool stratify);

struct TrainResult {
  std::vector<double> loss_curve;  // mean loss per epoch
  int epochs_run = 0;
};

/// Called after each epoch with (epoch index, mean loss); return false to stop.
using EpochCallback = std::function<bool(int, double)>;

/// Mini-batch training on windows whose data are already normalized. Throws
/// EmptyTrainingSet, NonFiniteLoss, NonFiniteGradient, ShapeMismatch.
template <typename Scalar>
TrainResult train(Model<Scalar>& model, std::span<const Window> windows, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

/// Threshold sweep over distinct scores, highest first, from (0,0) to (1,1).
/// Tied scores produce one diagonal step. Both classes must be present.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);
double auc_trapezoid(std::span<const RocPoint> roc);

struct EvalResult {
  Task task = Task::VRG;
  ModelKind model = ModelKind::EKYT;
  int window_s = 0;
  double accuracy = 0.0;
  double participant_accuracy = 0.0;
  std::vector<RocPoint> roc;
  double auc = 0.0;  // NaN when the test set holds a single class
  std::size_t n_test_windows = 0;
  std::size_t n_test_participants = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<double> loss_curve;
};

/// Fatigue-class probability for every window, EVAL mode.
template <typename Scalar>
std::vector<double> predict_scores(Model<Scalar>& model, std::span<const Window> windows,
                                   int batch_size = 64);

/// Accuracy (argmax vs label), ROC/AUC and a participant-level vote on the
/// mean score. Switches the model to EVAL mode. Throws EmptyTestSet.
template <typename Scalar>
EvalResult evaluate(Model<Scalar>& model, std::span<const Window> windows, int batch_size = 64);

/// The window-level metrics from precomputed scores.
EvalResult evaluate_scores(std::span<const double> scores, std::span<const Window> windows);

}  // namespace fatigue
