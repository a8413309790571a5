#include "fatigue/architectures.hpp"
#include "fatigue/models.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace fatigue {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::EKYT: return "EKYT";
    case ModelKind::FCN: return "FCN";
    case ModelKind::TCN: return "TCN";
    case ModelKind::INCEPTION: return "INCEPTION";
    case ModelKind::MCDCNN: return "MCDCNN";
    case ModelKind::TLENET: return "TLENET";
  }
  return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "TLE-NET" || up == "TLE_NET") return ModelKind::TLENET;
  if (up == "INCEPTIONTIME") return ModelKind::INCEPTION;
  for (ModelKind k : kAllModels) {
    if (to_string(k) == up) return k;
  }
  return std::nullopt;
}

void ModelSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(Errc::InvalidSpec, msg); };
  if (in_channels != 4) fail("in_channels must be 4");
  if (n_classes != 2) fail("n_classes must be 2");
  if (input_len < 1) fail("input_len must be positive");
  switch (kind) {
    case ModelKind::EKYT:
      if (ekyt_layers < 1 || ekyt_growth < 1 || ekyt_embedding < 1 || ekyt_max_dilation < 1) {
        fail("EKYT hyperparameters must be positive");
      }
      break;
    case ModelKind::INCEPTION:
      if (inception_depth < 1 || inception_filters < 1 || inception_bottleneck < 1) {
        fail("InceptionTime hyperparameters must be positive");
      }
      break;
    case ModelKind::MCDCNN:
      if (input_len / 2 / 2 < 1) fail("MCDCNN needs input_len >= 4");
      if (mcdcnn_hidden < 1) fail("MCDCNN hidden width must be positive");
      break;
    case ModelKind::TLENET:
      if (input_len / 2 / 4 < 1) fail("TLE-Net needs input_len >= 8");
      if (tlenet_hidden < 1) fail("TLE-Net hidden width must be positive");
      break;
    case ModelKind::FCN:
    case ModelKind::TCN:
      break;
  }
}

std::vector<Index> ekyt_dilations(const ModelSpec& spec) {
  std::vector<Index> out;
  Index d = 1;
  for (int i = 0; i < spec.ekyt_layers; ++i) {
    out.push_back(std::min(d, spec.ekyt_max_dilation));
    d *= 2;
  }
  return out;
}

// ---- Model base -----------------------------------------------------------

template <typename Scalar>
Matrix<Scalar> Model<Scalar>::forward(const nn::Batch<Scalar>& x) {
  if (x.empty()) throw Error(Errc::ShapeMismatch, "empty batch");
  for (const auto& s : x) {
    if (s.rows() != spec_.in_channels || s.cols() != spec_.input_len) {
      throw Error(Errc::ShapeMismatch, "expected " + std::to_string(spec_.in_channels) + "x" +
                                           std::to_string(spec_.input_len) + " sample, got " +
                                           std::to_string(s.rows()) + "x" +
                                           std::to_string(s.cols()));
    }
  }
  if (!nn::all_finite(x)) throw Error(Errc::NonFiniteInput, "batch contains non-finite values");
  probs_ = nn::softmax(forward_logits(x));
  return probs_.transpose();
}

template <typename Scalar>
void Model<Scalar>::backward(const Matrix<Scalar>& grad_probs) {
  if (grad_probs.rows() != probs_.cols() || grad_probs.cols() != probs_.rows()) {
    throw Error(Errc::ShapeMismatch, "gradient shape does not match last forward");
  }
  backward_logits(nn::softmax_backward(probs_, Matrix<Scalar>(grad_probs.transpose())));
  bool finite = true;
  visit_parameters([&](nn::Parameter<Scalar>& p) { finite = finite && p.grad.allFinite(); });
  if (!finite) throw Error(Errc::NonFiniteGradient, "non-finite parameter gradient");
}

template <typename Scalar>
void Model<Scalar>::zero_grad() {
  visit_parameters([](nn::Parameter<Scalar>& p) { p.grad.setZero(); });
}

template <typename Scalar>
std::vector<nn::Parameter<Scalar>*> Model<Scalar>::parameters() {
  std::vector<nn::Parameter<Scalar>*> out;
  visit_parameters([&](nn::Parameter<Scalar>& p) { out.push_back(&p); });
  return out;
}

template <typename Scalar>
std::vector<nn::Buffer<Scalar>*> Model<Scalar>::buffers() {
  std::vector<nn::Buffer<Scalar>*> out;
  visit_buffers([&](nn::Buffer<Scalar>& b) { out.push_back(&b); });
  return out;
}

template <typename Scalar>
Index Model<Scalar>::parameter_count() {
  Index n = 0;
  visit_parameters([&](nn::Parameter<Scalar>& p) { n += p.size(); });
  return n;
}

namespace {

template <typename Scalar>
std::vector<nn::Batch<Scalar>> split_channels(const nn::Batch<Scalar>& x,
                                              const std::vector<Index>& widths) {
  std::vector<nn::Batch<Scalar>> parts;
  Index row = 0;
  for (Index w : widths) {
    parts.push_back(nn::slice_channels(x, row, w));
    row += w;
  }
  return parts;
}

std::string layer_name(const std::string& prefix, std::size_t i, const std::string& leaf) {
  return prefix + "." + std::to_string(i) + "." + leaf;
}

}  // namespace

// ---- EKYT -----------------------------------------------------------------

template <typename Scalar>
Ekyt<Scalar>::Ekyt(const ModelSpec& spec) : Model<Scalar>(spec) {
  spec.validate();
  dilations_ = ekyt_dilations(spec);
  Index width = spec.in_channels;
  part_widths_ = {width};
  for (std::size_t i = 0; i < dilations_.size(); ++i) {
    convs_.push_back(nn::Conv1d<Scalar>::same(layer_name("dense", i, "conv"), width,
                                              spec.ekyt_growth, 3, dilations_[i]));
    bns_.emplace_back(layer_name("dense", i, "bn"), spec.ekyt_growth);
    relus_.emplace_back();
    width += spec.ekyt_growth;
    part_widths_.push_back(spec.ekyt_growth);
  }
  embed_ = nn::Dense<Scalar>("embed", width, spec.ekyt_embedding);
  head_bn_ = nn::BatchNorm1d<Scalar>("head.bn", spec.ekyt_embedding);
  out_ = nn::Dense<Scalar>("head.fc", spec.ekyt_embedding, spec.n_classes);

  std::mt19937_64 rng(spec.seed);
  for (auto& c : convs_) c.init(rng);
  embed_.init(rng);
  out_.init(rng);
}

template <typename Scalar>
Index Ekyt<Scalar>::pre_pool_width() const {
  Index w = 0;
  for (Index p : part_widths_) w += p;
  return w;
}

template <typename Scalar>
Matrix<Scalar> Ekyt<Scalar>::forward_logits(const nn::Batch<Scalar>& x) {
  std::vector<nn::Batch<Scalar>> outs;
  outs.reserve(convs_.size() + 1);
  outs.push_back(x);
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    std::vector<const nn::Batch<Scalar>*> parts;
    for (const auto& o : outs) parts.push_back(&o);
    auto h = convs_[i].forward(nn::concat_channels(parts));
    outs.push_back(relus_[i].forward(bns_[i].forward(h, this->training())));
  }
  std::vector<const nn::Batch<Scalar>*> parts;
  for (const auto& o : outs) parts.push_back(&o);
  embedding_ = embed_.forward(gap_.forward(nn::concat_channels(parts)));
  auto h = head_relu_.forward(
      nn::batch_as_columns(head_bn_.forward(nn::columns_as_batch(embedding_), this->training())));
  return out_.forward(h);
}

template <typename Scalar>
void Ekyt<Scalar>::backward_logits(const Matrix<Scalar>& dlogits) {
  auto dh = head_relu_.backward(out_.backward(dlogits));
  auto demb = nn::batch_as_columns(head_bn_.backward(nn::columns_as_batch(dh)));
  auto grads = split_channels(gap_.backward(embed_.backward(demb)), part_widths_);
  for (std::size_t i = convs_.size(); i-- > 0;) {
    auto din = convs_[i].backward(bns_[i].backward(relus_[i].backward(grads[i + 1])));
    std::vector<Index> widths(part_widths_.begin(),
                              part_widths_.begin() + static_cast<std::ptrdiff_t>(i + 1));
    auto pieces = split_channels(din, widths);
    for (std::size_t j = 0; j <= i; ++j) nn::add_inplace(grads[j], pieces[j]);
  }
}

template <typename Scalar>
void Ekyt<Scalar>::visit_parameters(const nn::ParamVisitor<Scalar>& f) {
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    convs_[i].visit(f);
    bns_[i].visit(f);
  }
  embed_.visit(f);
  head_bn_.visit(f);
  out_.visit(f);
}

template <typename Scalar>
void Ekyt<Scalar>::visit_buffers(const nn::BufferVisitor<Scalar>& f) {
  for (auto& bn : bns_) bn.visit_buffers(f);
  head_bn_.visit_buffers(f);
}

// ---- FCN ------------------------------------------------------------------

template <typename Scalar>
Fcn<Scalar>::Fcn(const ModelSpec& spec) : Model<Scalar>(spec) {
  spec.validate();
  constexpr std::array<Index, 3> kWidths = {128, 256, 128};
  constexpr std::array<Index, 3> kKernels = {8, 5, 3};
  Index in = spec.in_channels;
  for (std::size_t i = 0; i < 3; ++i) {
    convs_[i] = nn::Conv1d<Scalar>::same(layer_name("block", i, "conv"), in, kWidths[i],
                                         kKernels[i]);
    bns_[i] = nn::BatchNorm1d<Scalar>(layer_name("block", i, "bn"), kWidths[i]);
    in = kWidths[i];
  }
  out_ = nn::Dense<Scalar>("fc", in, spec.n_classes);
  std::mt19937_64 rng(spec.seed);
  for (auto& c : convs_) c.init(rng);
  out_.init(rng);
}

template <typename Scalar>
std::vector<Index> Fcn<Scalar>::widths() const {
  return {convs_[0].out_channels(), convs_[1].out_channels(), convs_[2].out_channels()};
}

template <typename Scalar>
Matrix<Scalar> Fcn<Scalar>::forward_logits(const nn::Batch<Scalar>& x) {
  nn::Batch<Scalar> h = x;
  for (std::size_t i = 0; i < 3; ++i) {
    h = relus_[i].forward(bns_[i].forward(convs_[i].forward(h), this->training()));
  }
  return out_.forward(gap_.forward(h));
}

template <typename Scalar>
void Fcn<Scalar>::backward_logits(const Matrix<Scalar>& dlogits) {
  auto d = gap_.backward(out_.backward(dlogits));
  for (std::size_t i = 3; i-- > 0;) {
    d = convs_[i].backward(bns_[i].backward(relus_[i].backward(d)));
  }
}

template <typename Scalar>
void Fcn<Scalar>::visit_parameters(const nn::ParamVisitor<Scalar>& f) {
  for (std::size_t i = 0; i < 3; ++i) {
    convs_[i].visit(f);
    bns_[i].visit(f);
  }
  out_.visit(f);
}

template <typename Scalar>
void Fcn<Scalar>::visit_buffers(const nn::BufferVisitor<Scalar>& f) {
  for (auto& bn : bns_) bn.visit_buffers(f);
}

// ---- InceptionTime --------------------------------------------------------

template <typename Scalar>
nn::Batch<Scalar> Inception<Scalar>::Block::forward(const nn::Batch<Scalar>& x, bool training) {
  const nn::Batch<Scalar> b = use_bottleneck ? bottleneck.forward(x) : x;
  auto c0 = convs[0].forward(b);
  auto c1 = convs[1].forward(b);
  auto c2 = convs[2].forward(b);
  auto m = pool_conv.forward(pool.forward(x));
  return relu.forward(bn.forward(nn::concat_channels<Scalar>({&c0, &c1, &c2, &m}), training));
}

template <typename Scalar>
nn::Batch<Scalar> Inception<Scalar>::Block::backward(const nn::Batch<Scalar>& dy) {
  auto d = bn.backward(relu.backward(dy));
  auto parts = split_channels(d, {branch_width, branch_width, branch_width, branch_width});
  auto db = convs[0].backward(parts[0]);
  nn::add_inplace(db, convs[1].backward(parts[1]));
  nn::add_inplace(db, convs[2].backward(parts[2]));
  auto dx = use_bottleneck ? bottleneck.backward(db) : db;
  nn::add_inplace(dx, pool.backward(pool_conv.backward(parts[3])));
  return dx;
}

template <typename Scalar>
Inception<Scalar>::Inception(const ModelSpec& spec) : Model<Scalar>(spec) {
  spec.validate();
  const Index f = spec.inception_filters;
  Index in = spec.in_channels;
  Index residual_in = in;
  for (int i = 0; i < spec.inception_depth; ++i) {
    const std::string p = "block." + std::to_string(i);
    Block blk;
    blk.branch_width = f;
    blk.use_bottleneck = in > 1;
    Index branch_in = in;
    if (blk.use_bottleneck) {
      blk.bottleneck =
          nn::Conv1d<Scalar>::same(p + ".bottleneck", in, spec.inception_bottleneck, 1, 1, false);
      branch_in = spec.inception_bottleneck;
    }
    for (std::size_t k = 0; k < 3; ++k) {
      blk.convs[k] = nn::Conv1d<Scalar>::same(p + ".conv" + std::to_string(k), branch_in, f,
                                              spec.inception_kernels[k], 1, false);
    }
    blk.pool = nn::MaxPool1d<Scalar>::same(3);
    blk.pool_conv = nn::Conv1d<Scalar>::same(p + ".pool_conv", in, f, 1, 1, false);
    blk.bn = nn::BatchNorm1d<Scalar>(p + ".bn", 4 * f);
    blocks_.push_back(std::move(blk));
    in = 4 * f;
    if (spec.inception_residual && (i + 1) % 3 == 0) {
      const std::string sp = "shortcut." + std::to_string(shortcuts_.size());
      Shortcut sc;
      sc.after_block = i + 1;
      sc.conv = nn::Conv1d<Scalar>::same(sp + ".conv", residual_in, in, 1, 1, false);
      sc.bn = nn::BatchNorm1d<Scalar>(sp + ".bn", in);
      shortcuts_.push_back(std::move(sc));
      residual_in = in;
    }
  }
  out_ = nn::Dense<Scalar>("fc", in, spec.n_classes);

  std::mt19937_64 rng(spec.seed);
  for (auto& b : blocks_) {
    if (b.use_bottleneck) b.bottleneck.init(rng);
    for (auto& c : b.convs) c.init(rng);
    b.pool_conv.init(rng);
  }
  for (auto& s : shortcuts_) s.conv.init(rng);
  out_.init(rng);
}

template <typename Scalar>
Index Inception<Scalar>::block_output_width() const {
  return 4 * blocks_.front().branch_width;
}

template <typename Scalar>
std::vector<int> Inception<Scalar>::residual_after() const {
  std::vector<int> out;
  for (const auto& s : shortcuts_) out.push_back(s.after_block);
  return out;
}

template <typename Scalar>
Matrix<Scalar> Inception<Scalar>::forward_logits(const nn::Batch<Scalar>& x) {
  nn::Batch<Scalar> h = x;
  nn::Batch<Scalar> residual = x;
  std::size_t next = 0;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    h = blocks_[i].forward(h, this->training());
    if (next < shortcuts_.size() && shortcuts_[next].after_block == static_cast<int>(i + 1)) {
      auto& sc = shortcuts_[next++];
      auto s = sc.bn.forward(sc.conv.forward(residual), this->training());
      nn::add_inplace(s, h);
      h = sc.relu.forward(s);
      residual = h;
    }
  }
  return out_.forward(gap_.forward(h));
}

template <typename Scalar>
void Inception<Scalar>::backward_logits(const Matrix<Scalar>& dlogits) {
  nn::Batch<Scalar> d = gap_.backward(out_.backward(dlogits));
  // Gradient flowing into the current residual source, added when the walk
  // reaches the block that produced it.
  nn::Batch<Scalar> d_residual;
  std::size_t next = shortcuts_.size();
  for (std::size_t i = blocks_.size(); i-- > 0;) {
    if (next > 0 && shortcuts_[next - 1].after_block == static_cast<int>(i + 1)) {
      auto& sc = shortcuts_[--next];
      if (!d_residual.empty()) nn::add_inplace(d, d_residual);
      auto ds = sc.relu.backward(d);
      d_residual = sc.conv.backward(sc.bn.backward(ds));
      d = ds;
    }
    d = blocks_[i].backward(d);
  }
}

template <typename Scalar>
void Inception<Scalar>::visit_parameters(const nn::ParamVisitor<Scalar>& f) {
  for (auto& b : blocks_) {
    if (b.use_bottleneck) b.bottleneck.visit(f);
    for (auto& c : b.convs) c.visit(f);
    b.pool_conv.visit(f);
    b.bn.visit(f);
  }
  for (auto& s : shortcuts_) {
    s.conv.visit(f);
    s.bn.visit(f);
  }
  out_.visit(f);
}

template <typename Scalar>
void Inception<Scalar>::visit_buffers(const nn::BufferVisitor<Scalar>& f) {
  for (auto& b : blocks_) b.bn.visit_buffers(f);
  for (auto& s : shortcuts_) s.bn.visit_buffers(f);
}

// ---- MCDCNN ---------------------------------------------------------------

template <typename Scalar>
Mcdcnn<Scalar>::Mcdcnn(const ModelSpec& spec) : Model<Scalar>(spec) {
  spec.validate();
  constexpr Index kFilters = 8;
  for (Index c = 0; c < spec.in_channels; ++c) {
    const std::string p = "channel." + std::to_string(c);
    Tower t;
    t.conv1 = nn::Conv1d<Scalar>::same(p + ".conv1", 1, kFilters, 5);
    t.conv2 = nn::Conv1d<Scalar>::same(p + ".conv2", kFilters, kFilters, 5);
    t.pool1 = nn::MaxPool1d<Scalar>(2, 2);
    t.pool2 = nn::MaxPool1d<Scalar>(2, 2);
    t.out_len = t.pool2.output_length(t.pool1.output_length(spec.input_len));
    towers_.push_back(std::move(t));
  }
  per_channel_ = kFilters * towers_.front().out_len;
  hidden_ = nn::Dense<Scalar>("hidden", per_channel_ * spec.in_channels, spec.mcdcnn_hidden);
  out_ = nn::Dense<Scalar>("fc", spec.mcdcnn_hidden, spec.n_classes);

  std::mt19937_64 rng(spec.seed);
  for (auto& t : towers_) {
    t.conv1.init(rng);
    t.conv2.init(rng);
  }
  hidden_.init(rng);
  out_.init(rng);
}

template <typename Scalar>
Matrix<Scalar> Mcdcnn<Scalar>::branch_output(Index c) const {
  return features_.middleRows(c * per_channel_, per_channel_);
}

template <typename Scalar>
std::vector<nn::Parameter<Scalar>*> Mcdcnn<Scalar>::branch_parameters(Index c) {
  std::vector<nn::Parameter<Scalar>*> out;
  auto& t = towers_[static_cast<std::size_t>(c)];
  t.conv1.visit([&](nn::Parameter<Scalar>& p) { out.push_back(&p); });
  t.conv2.visit([&](nn::Parameter<Scalar>& p) { out.push_back(&p); });
  return out;
}

template <typename Scalar>
Matrix<Scalar> Mcdcnn<Scalar>::forward_logits(const nn::Batch<Scalar>& x) {
  features_.resize(per_channel_ * static_cast<Index>(towers_.size()),
                   static_cast<Index>(x.size()));
  for (std::size_t c = 0; c < towers_.size(); ++c) {
    auto& t = towers_[c];
    auto h = nn::slice_channels(x, static_cast<Index>(c), 1);
    h = t.pool1.forward(t.relu1.forward(t.conv1.forward(h)));
    h = t.pool2.forward(t.relu2.forward(t.conv2.forward(h)));
    features_.middleRows(static_cast<Index>(c) * per_channel_, per_channel_) = nn::flatten(h);
  }
  return out_.forward(hidden_relu_.forward(hidden_.forward(features_)));
}

template <typename Scalar>
void Mcdcnn<Scalar>::backward_logits(const Matrix<Scalar>& dlogits) {
  Matrix<Scalar> dfeat = hidden_.backward(hidden_relu_.backward(out_.backward(dlogits)));
  for (std::size_t c = 0; c < towers_.size(); ++c) {
    auto& t = towers_[c];
    auto d = nn::unflatten<Scalar>(
        dfeat.middleRows(static_cast<Index>(c) * per_channel_, per_channel_),
        t.conv2.out_channels(), t.out_len);
    d = t.conv2.backward(t.relu2.backward(t.pool2.backward(d)));
    t.conv1.backward(t.relu1.backward(t.pool1.backward(d)));
  }
}

template <typename Scalar>
void Mcdcnn<Scalar>::visit_parameters(const nn::ParamVisitor<Scalar>& f) {
  for (auto& t : towers_) {
    t.conv1.visit(f);
    t.conv2.visit(f);
  }
  hidden_.visit(f);
  out_.visit(f);
}

// ---- TCN ------------------------------------------------------------------

template <typename Scalar>
Tcn<Scalar>::Tcn(const ModelSpec& spec) : Model<Scalar>(spec) {
  spec.validate();
  constexpr std::array<Index, 3> kWidths = {64, 128, 256};
  Index in = spec.in_channels;
  for (std::size_t i = 0; i < 3; ++i) {
    convs_[i] = nn::Conv1d<Scalar>(layer_name("conv", i, "conv"), in, kWidths[i], 3, 1, 1, 1);
    in = kWidths[i];
  }
  out_ = nn::Dense<Scalar>("fc", in, spec.n_classes);
  std::mt19937_64 rng(spec.seed);
  for (auto& c : convs_) c.init(rng);
  out_.init(rng);
}

template <typename Scalar>
std::vector<Index> Tcn<Scalar>::widths() const {
  return {convs_[0].out_channels(), convs_[1].out_channels(), convs_[2].out_channels()};
}

template <typename Scalar>
Matrix<Scalar> Tcn<Scalar>::forward_logits(const nn::Batch<Scalar>& x) {
  nn::Batch<Scalar> h = x;
  for (std::size_t i = 0; i < 3; ++i) h = relus_[i].forward(convs_[i].forward(h));
  return out_.forward(gap_.forward(h));
}

template <typename Scalar>
void Tcn<Scalar>::backward_logits(const Matrix<Scalar>& dlogits) {
  auto d = gap_.backward(out_.backward(dlogits));
  for (std::size_t i = 3; i-- > 0;) d = convs_[i].backward(relus_[i].backward(d));
}

template <typename Scalar>
void Tcn<Scalar>::visit_parameters(const nn::ParamVisitor<Scalar>& f) {
  for (auto& c : convs_) c.visit(f);
  out_.visit(f);
}

// ---- TLE-Net --------------------------------------------------------------

template <typename Scalar>
TleNet<Scalar>::TleNet(const ModelSpec& spec) : Model<Scalar>(spec) {
  spec.validate();
  conv1_ = nn::Conv1d<Scalar>::same("conv1", spec.in_channels, 5, 5);
  pool1_ = nn::MaxPool1d<Scalar>(2, 2);
  conv2_ = nn::Conv1d<Scalar>::same("conv2", 5, 20, 5);
  pool2_ = nn::MaxPool1d<Scalar>(4, 4);
  pooled_len_ = pool2_.output_length(pool1_.output_length(spec.input_len));
  hidden_ = nn::Dense<Scalar>("hidden", 20 * pooled_len_, spec.tlenet_hidden);
  out_ = nn::Dense<Scalar>("fc", spec.tlenet_hidden, spec.n_classes);
  std::mt19937_64 rng(spec.seed);
  conv1_.init(rng);
  conv2_.init(rng);
  hidden_.init(rng);
  out_.init(rng);
}

template <typename Scalar>
Matrix<Scalar> TleNet<Scalar>::forward_logits(const nn::Batch<Scalar>& x) {
  auto h = pool2_.forward(conv2_.forward(pool1_.forward(conv1_.forward(x))));
  return out_.forward(hidden_relu_.forward(hidden_.forward(nn::flatten(h))));
}

template <typename Scalar>
void TleNet<Scalar>::backward_logits(const Matrix<Scalar>& dlogits) {
  Matrix<Scalar> d = hidden_.backward(hidden_relu_.backward(out_.backward(dlogits)));
  auto db = nn::unflatten<Scalar>(d, conv2_.out_channels(), pooled_len_);
  conv1_.backward(pool1_.backward(conv2_.backward(pool2_.backward(db))));
}

template <typename Scalar>
void TleNet<Scalar>::visit_parameters(const nn::ParamVisitor<Scalar>& f) {
  conv1_.visit(f);
  conv2_.visit(f);
  hidden_.visit(f);
  out_.visit(f);
}

// ---- builders -------------------------------------------------------------

namespace {

template <ModelKind Kind>
void require_kind(const ModelSpec& spec) {
  if (spec.kind != Kind) {
    throw Error(Errc::InvalidSpec, "spec kind " + std::string(to_string(spec.kind)) +
                                       " passed to builder for " +
                                       std::string(to_string(Kind)));
  }
}

}  // namespace

template <typename Scalar>
std::unique_ptr<Model<Scalar>> build_ekyt(const ModelSpec& spec) {
  require_kind<ModelKind::EKYT>(spec);
  return std::make_unique<Ekyt<Scalar>>(spec);
}

template <typename Scalar>
std::unique_ptr<Model<Scalar>> build_fcn(const ModelSpec& spec) {
  require_kind<ModelKind::FCN>(spec);
  return std::make_unique<Fcn<Scalar>>(spec);
}

template <typename Scalar>
std::unique_ptr<Model<Scalar>> build_inception(const ModelSpec& spec) {
  require_kind<ModelKind::INCEPTION>(spec);
  return std::make_unique<Inception<Scalar>>(spec);
}

template <typename Scalar>
std::unique_ptr<Model<Scalar>> build_mcdcnn(const ModelSpec& spec) {
  require_kind<ModelKind::MCDCNN>(spec);
  return std::make_unique<Mcdcnn<Scalar>>(spec);
}

template <typename Scalar>
std::unique_ptr<Model<Scalar>> build_tcn(const ModelSpec& spec) {
  require_kind<ModelKind::TCN>(spec);
  return std::make_unique<Tcn<Scalar>>(spec);
}

template <typename Scalar>
std::unique_ptr<Model<Scalar>> build_tlenet(const ModelSpec& spec) {
  require_kind<ModelKind::TLENET>(spec);
  return std::make_unique<TleNet<Scalar>>(spec);
}

template <typename Scalar>
std::unique_ptr<Model<Scalar>> make_model(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::EKYT: return build_ekyt<Scalar>(spec);
    case ModelKind::FCN: return build_fcn<Scalar>(spec);
    case ModelKind::TCN: return build_tcn<Scalar>(spec);
    case ModelKind::INCEPTION: return build_inception<Scalar>(spec);
    case ModelKind::MCDCNN: return build_mcdcnn<Scalar>(spec);
    case ModelKind::TLENET: return build_tlenet<Scalar>(spec);
  }
  throw Error(Errc::InvalidSpec, "unknown model kind");
}

#define FATIGUE_INSTANTIATE(S)                                                  \
  template class Model<S>;                                                      \
  template class Ekyt<S>;                                                       \
  template class Fcn<S>;                                                        \
  template class Inception<S>;                                                  \
  template class Mcdcnn<S>;                                                     \
  template class Tcn<S>;                                                        \
  template class TleNet<S>;                                                     \
  template std::unique_ptr<Model<S>> build_ekyt<S>(const ModelSpec&);           \
  template std::unique_ptr<Model<S>> build_fcn<S>(const ModelSpec&);            \
  template std::unique_ptr<Model<S>> build_inception<S>(const ModelSpec&);      \
  template std::unique_ptr<Model<S>> build_mcdcnn<S>(const ModelSpec&);         \
  template std::unique_ptr<Model<S>> build_tcn<S>(const ModelSpec&);            \
  template std::unique_ptr<Model<S>> build_tlenet<S>(const ModelSpec&);         \
  template std::unique_ptr<Model<S>> make_model<S>(const ModelSpec&);

FATIGUE_INSTANTIATE(float)
FATIGUE_INSTANTIATE(double)

#undef FATIGUE_INSTANTIATE

}  // namespace fatigue
