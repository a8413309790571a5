#pragma once

#include "fatigue/models.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <string>

namespace fatigue {

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

/// Self-describing checkpoint: spec, config hash and every parameter and
/// buffer as {name, shape, dtype, hex of the raw little-endian payload}.
template <typename Scalar>
nlohmann::json checkpoint_to_json(Model<Scalar>& model, const std::string& config_hash);

template <typename Scalar>
struct LoadedModel {
  std::unique_ptr<Model<Scalar>> model;
  std::string config_hash;
};

/// Rebuilds the model from the stored spec and overwrites its state. A payload
/// stored in the other precision is converted. Throws Errc::Io on malformed
/// input and Errc::ShapeMismatch when names or shapes disagree.
template <typename Scalar>
LoadedModel<Scalar> checkpoint_from_json(const nlohmann::json& j);

template <typename Scalar>
void save_checkpoint(Model<Scalar>& model, const std::filesystem::path& path,
                     const std::string& config_hash);
template <typename Scalar>
LoadedModel<Scalar> load_checkpoint(const std::filesystem::path& path);

}  // namespace fatigue
