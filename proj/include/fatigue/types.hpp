#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fatigue {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

enum class Errc {
  MissingColumn,
  NonMonotoneTime,
  EmptyRecording,
  ZeroVector,
  InvalidSpec,
  ShapeMismatch,
  NonFiniteInput,
  NonFiniteGradient,
  NonFiniteLoss,
  EmptyTrainingSet,
  EmptyTestSet,
  TooFewParticipants,
  LengthMismatch,
  DegenerateTest,
  MissingSignal,
  MissingRatings,
  InvalidConfig,
  Io,
};

std::string_view to_string(Errc code);

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

enum class Task { VRG, PUR, VID, TEX, RAN };

inline constexpr std::array<Task, 5> kAllTasks = {Task::VRG, Task::PUR, Task::VID, Task::TEX,
                                                  Task::RAN};

std::string_view to_string(Task task);
std::optional<Task> parse_task(std::string_view name);

/// Nominal GazeBaseVR sampling rate.
inline constexpr double kSampleRateHz = 250.0;

inline constexpr std::array<int, 4> kWindowDurations = {5, 10, 15, 20};

}  // namespace fatigue
