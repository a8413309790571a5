#include "fatigue/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace fatigue {

template <typename Scalar>
Scalar bce_loss(const Matrix<Scalar>& probs, std::span<const int> labels) {
  if (probs.cols() != 2 || probs.rows() != static_cast<Index>(labels.size()) || labels.empty()) {
    throw Error(Errc::ShapeMismatch, "bce_loss expects B x 2 probabilities and B labels");
  }
  const auto lo = static_cast<Scalar>(kProbClamp);
  const auto hi = static_cast<Scalar>(1.0 - kProbClamp);
  Scalar sum = 0;
  for (Index i = 0; i < probs.rows(); ++i) {
    const Scalar p = std::clamp(probs(i, 1), lo, hi);
    sum -= labels[static_cast<std::size_t>(i)] != 0 ? std::log(p) : std::log1p(-p);
  }
  return sum / static_cast<Scalar>(probs.rows());
}

template <typename Scalar>
Matrix<Scalar> bce_loss_grad(const Matrix<Scalar>& probs, std::span<const int> labels) {
  if (probs.cols() != 2 || probs.rows() != static_cast<Index>(labels.size()) || labels.empty()) {
    throw Error(Errc::ShapeMismatch, "bce_loss_grad expects B x 2 probabilities and B labels");
  }
  const auto lo = static_cast<Scalar>(kProbClamp);
  const auto hi = static_cast<Scalar>(1.0 - kProbClamp);
  const Scalar inv_b = Scalar(1) / static_cast<Scalar>(probs.rows());
  Matrix<Scalar> grad = Matrix<Scalar>::Zero(probs.rows(), 2);
  for (Index i = 0; i < probs.rows(); ++i) {
    const Scalar p = probs(i, 1);
    if (p < lo || p > hi) continue;
    grad(i, 1) = labels[static_cast<std::size_t>(i)] != 0 ? -inv_b / p : inv_b / (1 - p);
  }
  return grad;
}

std::string_view to_string(OptimizerKind k) {
  return k == OptimizerKind::Adam ? "adam" : "sgd_momentum";
}

std::string_view to_string(Precision p) { return p == Precision::Float32 ? "float32" : "float64"; }

template <typename Scalar>
void Adam<Scalar>::step(const std::vector<nn::Parameter<Scalar>*>& params) {
  if (m_.empty()) {
    for (auto* p : params) {
      m_.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  const auto b1 = static_cast<Scalar>(beta1_), b2 = static_cast<Scalar>(beta2_);
  const auto step_size = static_cast<Scalar>(lr_ / c1);
  const auto inv_c2 = static_cast<Scalar>(1.0 / c2);
  const auto eps = static_cast<Scalar>(eps_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    m_[i] = b1 * m_[i] + (1 - b1) * p.grad;
    v_[i] = b2 * v_[i] + (1 - b2) * p.grad.cwiseAbs2();
    p.value.array() -=
        step_size * m_[i].array() / ((v_[i].array() * inv_c2).sqrt() + eps);
  }
}

template <typename Scalar>
void SgdMomentum<Scalar>::step(const std::vector<nn::Parameter<Scalar>*>& params) {
  if (velocity_.empty()) {
    for (auto* p : params) {
      velocity_.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  const auto mom = static_cast<Scalar>(momentum_), lr = static_cast<Scalar>(lr_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity_[i] = mom * velocity_[i] + params[i]->grad;
    params[i]->value -= lr * velocity_[i];
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(Errc::InvalidConfig, "epochs must be >= 1");
  if (batch_size < 1) throw Error(Errc::InvalidConfig, "batch_size must be >= 1");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw Error(Errc::InvalidConfig, "split_fraction must lie in (0, 1)");
  }
  if (!(learning_rate >= 0.0)) throw Error(Errc::InvalidConfig, "learning_rate must be >= 0");
  channels.validate();
}

namespace {

std::size_t train_count(std::size_t n, double fraction) {
  auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

}  // namespace

UserSplit split_users(std::span<const std::string> participants, std::span<const bool> labels,
                      double fraction, std::uint64_t seed, bool stratify) {
  if (participants.size() != labels.size()) {
    throw Error(Errc::LengthMismatch, "participants and labels differ in length");
  }
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(Errc::InvalidConfig, "split fraction must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  UserSplit split;
  auto cut = [&](std::vector<std::string> ids) {
    std::sort(ids.begin(), ids.end());
    std::shuffle(ids.begin(), ids.end(), rng);
    const std::size_t k = train_count(ids.size(), fraction);
    split.train_ids.insert(split.train_ids.end(), ids.begin(),
                           ids.begin() + static_cast<std::ptrdiff_t>(k));
    split.test_ids.insert(split.test_ids.end(), ids.begin() + static_cast<std::ptrdiff_t>(k),
                          ids.end());
  };
  if (stratify) {
    std::vector<std::string> pos, neg;
    for (std::size_t i = 0; i < participants.size(); ++i) {
      (labels[i] ? pos : neg).push_back(participants[i]);
    }
    if (pos.size() < 2 || neg.size() < 2) {
      throw Error(Errc::TooFewParticipants,
                  "stratified split needs at least 2 participants per class (have " +
                      std::to_string(neg.size()) + " non-fatigued, " +
                      std::to_string(pos.size()) + " fatigued)");
    }
    cut(std::move(neg));
    cut(std::move(pos));
  } else {
    if (participants.size() < 2) {
      throw Error(Errc::TooFewParticipants, "split needs at least 2 participants");
    }
    cut(std::vector<std::string>(participants.begin(), participants.end()));
  }
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

namespace {

template <typename Scalar>
nn::Batch<Scalar> gather(std::span<const Window> windows, std::span<const std::size_t> idx) {
  nn::Batch<Scalar> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(windows[i].data.template cast<Scalar>());
  return out;
}

}  // namespace

template <typename Scalar>
TrainResult train(Model<Scalar>& model, std::span<const Window> windows, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (windows.empty()) throw Error(Errc::EmptyTrainingSet, "no training windows");
  for (const auto& w : windows) {
    if (w.duration_s != windows.front().duration_s) {
      throw Error(Errc::ShapeMismatch, "training windows differ in duration");
    }
  }

  std::unique_ptr<Optimizer<Scalar>> opt;
  if (cfg.optimizer == OptimizerKind::Adam) {
    opt = std::make_unique<Adam<Scalar>>(cfg.learning_rate);
  } else {
    opt = std::make_unique<SgdMomentum<Scalar>>(cfg.learning_rate);
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  const auto params = model.parameters();
  model.set_mode(Mode::Train);

  TrainResult result;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t n = std::min(bs, order.size() - start);
      std::span<const std::size_t> idx(order.data() + start, n);
      std::vector<int> labels(n);
      for (std::size_t k = 0; k < n; ++k) labels[k] = windows[idx[k]].label ? 1 : 0;

      model.zero_grad();
      const Matrix<Scalar> probs = model.forward(gather<Scalar>(windows, idx));
      const Scalar loss = bce_loss<Scalar>(probs, labels);
      if (!std::isfinite(static_cast<double>(loss))) {
        throw Error(Errc::NonFiniteLoss, "loss became non-finite in epoch " +
                                             std::to_string(epoch + 1));
      }
      model.backward(bce_loss_grad<Scalar>(probs, labels));
      opt->step(params);
      total += static_cast<double>(loss) * static_cast<double>(n);
    }
    const double mean = total / static_cast<double>(order.size());
    result.loss_curve.push_back(mean);
    result.epochs_run = epoch + 1;
    if (on_epoch && !on_epoch(epoch, mean)) break;
  }
  return result;
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(Errc::LengthMismatch, "scores and labels differ in length");
  }
  const auto pos = static_cast<double>(std::count_if(labels.begin(), labels.end(),
                                                     [](int l) { return l != 0; }));
  const double neg = static_cast<double>(labels.size()) - pos;
  if (pos == 0.0 || neg == 0.0) return {};

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> roc{{0.0, 0.0}};
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] != 0 ? tp : fp) += 1.0;
      ++i;
    }
    roc.push_back({fp / neg, tp / pos});
  }
  return roc;
}

double auc_trapezoid(std::span<const RocPoint> roc) {
  if (roc.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) * 0.5;
  }
  return area;
}

template <typename Scalar>
std::vector<double> predict_scores(Model<Scalar>& model, std::span<const Window> windows,
                                   int batch_size) {
  model.set_mode(Mode::Eval);
  std::vector<double> scores;
  scores.reserve(windows.size());
  const auto bs = static_cast<std::size_t>(std::max(1, batch_size));
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < windows.size(); start += bs) {
    const std::size_t n = std::min(bs, windows.size() - start);
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), start);
    const Matrix<Scalar> probs = model.forward(gather<Scalar>(windows, idx));
    for (Index i = 0; i < probs.rows(); ++i) scores.push_back(static_cast<double>(probs(i, 1)));
  }
  return scores;
}

EvalResult evaluate_scores(std::span<const double> scores, std::span<const Window> windows) {
  if (windows.empty()) throw Error(Errc::EmptyTestSet, "no test windows");
  if (scores.size() != windows.size()) {
    throw Error(Errc::LengthMismatch, "scores and windows differ in length");
  }
  EvalResult r;
  std::vector<int> labels(windows.size());
  std::size_t correct = 0;
  std::map<std::string, std::pair<double, std::size_t>> by_participant;
  std::map<std::string, bool> participant_label;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    labels[i] = windows[i].label ? 1 : 0;
    // argmax over (1 - p, p); ties resolve to class 0
    const bool predicted = scores[i] > 0.5;
    if (predicted == windows[i].label) ++correct;
    auto& acc = by_participant[windows[i].participant_id];
    acc.first += scores[i];
    acc.second += 1;
    participant_label[windows[i].participant_id] = windows[i].label;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(windows.size());
  std::size_t p_correct = 0;
  for (const auto& [pid, acc] : by_participant) {
    const bool predicted = acc.first / static_cast<double>(acc.second) > 0.5;
    if (predicted == participant_label[pid]) ++p_correct;
  }
  r.n_test_windows = windows.size();
  r.n_test_participants = by_participant.size();
  r.participant_accuracy =
      static_cast<double>(p_correct) / static_cast<double>(by_participant.size());
  r.roc = roc_curve(scores, labels);
  r.auc = auc_trapezoid(r.roc);
  return r;
}

template <typename Scalar>
EvalResult evaluate(Model<Scalar>& model, std::span<const Window> windows, int batch_size) {
  if (windows.empty()) throw Error(Errc::EmptyTestSet, "no test windows");
  const auto scores = predict_scores(model, windows, batch_size);
  EvalResult r = evaluate_scores(scores, windows);
  r.model = model.spec().kind;
  r.task = windows.front().task;
  r.window_s = windows.front().duration_s;
  r.seed = model.spec().seed;
  return r;
}

#define FATIGUE_INSTANTIATE(S)                                                              \
  template S bce_loss<S>(const Matrix<S>&, std::span<const int>);                           \
  template Matrix<S> bce_loss_grad<S>(const Matrix<S>&, std::span<const int>);              \
  template class Adam<S>;                                                                   \
  template class SgdMomentum<S>;                                                            \
  template TrainResult train<S>(Model<S>&, std::span<const Window>, const TrainConfig&,     \
                                const EpochCallback&);                                      \
  template std::vector<double> predict_scores<S>(Model<S>&, std::span<const Window>, int); \
  template EvalResult evaluate<S>(Model<S>&, std::span<const Window>, int);

FATIGUE_INSTANTIATE(float)
FATIGUE_INSTANTIATE(double)

#undef FATIGUE_INSTANTIATE

}  // namespace fatigue
