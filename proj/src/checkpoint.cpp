#include "fatigue/checkpoint.hpp"

#include "fatigue/util.hpp"

#include <cstring>

namespace fatigue {

namespace {

constexpr const char* kFormat = "gazefatigue-checkpoint";

template <typename T>
constexpr const char* dtype_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

template <typename T>
std::string to_hex(const Matrix<T>& m) {
  static constexpr char kDigits[] = "0123456789abcdef";
  const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
  const std::size_t n = static_cast<std::size_t>(m.size()) * sizeof(T);
  std::string out(2 * n, '0');
  for (std::size_t i = 0; i < n; ++i) {
    out[2 * i] = kDigits[bytes[i] >> 4];
    out[2 * i + 1] = kDigits[bytes[i] & 0xf];
  }
  return out;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  throw Error(Errc::Io, "bad hex digit in checkpoint payload");
}

template <typename T>
std::vector<T> from_hex(const std::string& hex, std::size_t count) {
  if (hex.size() != 2 * count * sizeof(T)) throw Error(Errc::Io, "payload size mismatch");
  std::vector<unsigned char> bytes(count * sizeof(T));
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<unsigned char>(hex_value(hex[2 * i]) * 16 + hex_value(hex[2 * i + 1]));
  }
  std::vector<T> out(count);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

template <typename Scalar>
nlohmann::json array_entry(const std::string& name, const Matrix<Scalar>& m) {
  return {{"name", name},
          {"shape", {m.rows(), m.cols()}},
          {"dtype", dtype_name<Scalar>()},
          {"data", to_hex(m)}};
}

template <typename Scalar>
void restore(const nlohmann::json& entry, const std::string& name, Matrix<Scalar>& dst) {
  if (entry.at("name").get<std::string>() != name) {
    throw Error(Errc::ShapeMismatch, "checkpoint entry '" + entry.at("name").get<std::string>() +
                                         "' where '" + name + "' was expected");
  }
  const auto rows = entry.at("shape").at(0).get<Index>();
  const auto cols = entry.at("shape").at(1).get<Index>();
  if (rows != dst.rows() || cols != dst.cols()) {
    throw Error(Errc::ShapeMismatch, "shape of '" + name + "' differs from the model");
  }
  const auto count = static_cast<std::size_t>(rows * cols);
  const auto dtype = entry.at("dtype").get<std::string>();
  const auto& hex = entry.at("data").get_ref<const std::string&>();
  if (dtype == "f32") {
    auto v = from_hex<float>(hex, count);
    for (std::size_t i = 0; i < count; ++i) dst.data()[i] = static_cast<Scalar>(v[i]);
  } else if (dtype == "f64") {
    auto v = from_hex<double>(hex, count);
    for (std::size_t i = 0; i < count; ++i) dst.data()[i] = static_cast<Scalar>(v[i]);
  } else {
    throw Error(Errc::Io, "unknown dtype '" + dtype + "'");
  }
}

}  // namespace

nlohmann::json spec_to_json(const ModelSpec& s) {
  return {{"kind", std::string(to_string(s.kind))},
          {"in_channels", s.in_channels},
          {"input_len", s.input_len},
          {"n_classes", s.n_classes},
          {"seed", s.seed},
          {"ekyt_layers", s.ekyt_layers},
          {"ekyt_growth", s.ekyt_growth},
          {"ekyt_embedding", s.ekyt_embedding},
          {"ekyt_max_dilation", s.ekyt_max_dilation},
          {"inception_depth", s.inception_depth},
          {"inception_filters", s.inception_filters},
          {"inception_bottleneck", s.inception_bottleneck},
          {"inception_residual", s.inception_residual},
          {"inception_kernels", s.inception_kernels},
          {"mcdcnn_hidden", s.mcdcnn_hidden},
          {"tlenet_hidden", s.tlenet_hidden}};
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  auto kind = parse_model_kind(j.at("kind").get<std::string>());
  if (!kind) throw Error(Errc::InvalidSpec, "unknown model kind in checkpoint");
  s.kind = *kind;
  s.in_channels = j.at("in_channels").get<Index>();
  s.input_len = j.at("input_len").get<Index>();
  s.n_classes = j.at("n_classes").get<Index>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.ekyt_layers = j.value("ekyt_layers", s.ekyt_layers);
  s.ekyt_growth = j.value("ekyt_growth", s.ekyt_growth);
  s.ekyt_embedding = j.value("ekyt_embedding", s.ekyt_embedding);
  s.ekyt_max_dilation = j.value("ekyt_max_dilation", s.ekyt_max_dilation);
  s.inception_depth = j.value("inception_depth", s.inception_depth);
  s.inception_filters = j.value("inception_filters", s.inception_filters);
  s.inception_bottleneck = j.value("inception_bottleneck", s.inception_bottleneck);
  s.inception_residual = j.value("inception_residual", s.inception_residual);
  s.inception_kernels = j.value("inception_kernels", s.inception_kernels);
  s.mcdcnn_hidden = j.value("mcdcnn_hidden", s.mcdcnn_hidden);
  s.tlenet_hidden = j.value("tlenet_hidden", s.tlenet_hidden);
  return s;
}

template <typename Scalar>
nlohmann::json checkpoint_to_json(Model<Scalar>& model, const std::string& config_hash) {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = 1;
  j["spec"] = spec_to_json(model.spec());
  j["config_hash"] = config_hash;
  j["parameters"] = nlohmann::json::array();
  model.visit_parameters([&](nn::Parameter<Scalar>& p) {
    j["parameters"].push_back(array_entry(p.name, p.value));
  });
  j["buffers"] = nlohmann::json::array();
  model.visit_buffers([&](nn::Buffer<Scalar>& b) {
    j["buffers"].push_back(array_entry(b.name, b.value));
  });
  return j;
}

template <typename Scalar>
LoadedModel<Scalar> checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kFormat) {
      throw Error(Errc::Io, "not a checkpoint");
    }
    LoadedModel<Scalar> out;
    out.model = make_model<Scalar>(spec_from_json(j.at("spec")));
    out.config_hash = j.value("config_hash", "");
    const auto& params = j.at("parameters");
    const auto& bufs = j.at("buffers");
    std::size_t i = 0;
    out.model->visit_parameters([&](nn::Parameter<Scalar>& p) {
      if (i >= params.size()) throw Error(Errc::ShapeMismatch, "checkpoint has too few parameters");
      restore(params[i++], p.name, p.value);
    });
    if (i != params.size()) throw Error(Errc::ShapeMismatch, "checkpoint has extra parameters");
    i = 0;
    out.model->visit_buffers([&](nn::Buffer<Scalar>& b) {
      if (i >= bufs.size()) throw Error(Errc::ShapeMismatch, "checkpoint has too few buffers");
      restore(bufs[i++], b.name, b.value);
    });
    if (i != bufs.size()) throw Error(Errc::ShapeMismatch, "checkpoint has extra buffers");
    out.model->set_mode(Mode::Eval);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Io, std::string("malformed checkpoint: ") + e.what());
  }
}

template <typename Scalar>
void save_checkpoint(Model<Scalar>& model, const std::filesystem::path& path,
                     const std::string& config_hash) {
  util::write_file_atomic(path, checkpoint_to_json(model, config_hash).dump());
}

template <typename Scalar>
LoadedModel<Scalar> load_checkpoint(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(util::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Io, "cannot parse checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json<Scalar>(j);
}

#define FATIGUE_INSTANTIATE(S)                                                             \
  template nlohmann::json checkpoint_to_json<S>(Model<S>&, const std::string&);           \
  template LoadedModel<S> checkpoint_from_json<S>(const nlohmann::json&);                 \
  template void save_checkpoint<S>(Model<S>&, const std::filesystem::path&,               \
                                   const std::string&);                                   \
  template LoadedModel<S> load_checkpoint<S>(const std::filesystem::path&);

FATIGUE_INSTANTIATE(float)
FATIGUE_INSTANTIATE(double)

#undef FATIGUE_INSTANTIATE

}  // namespace fatigue
