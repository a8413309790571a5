#pragma once

// Central-difference gradient checks in double precision.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace gradcheck {

inline constexpr double kEps = 1e-3;
inline constexpr double kTol = 1e-4;

/// ||a - b|| / max(||a||, ||b||); zero when both vanish.
inline double rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  if (scale < 1e-12) return 0.0;
  return (a - b).norm() / scale;
}

/// As rel_error, but gradients whose norms both stay below `floor` count as
/// zero. Needed where a parameter has no effect on the loss (a convolution
/// bias followed by batch norm in training mode).
inline double rel_error_floor(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double floor) {
  const double scale = std::max(a.norm(), b.norm());
  if (scale < floor) return 0.0;
  return (a - b).norm() / scale;
}

/// dL/dx by perturbing every entry of `x` in place; `loss` re-evaluates L.
template <typename F>
Eigen::MatrixXd numeric(Eigen::MatrixXd& x, F&& loss, double eps = kEps) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double keep = x(i, j);
      x(i, j) = keep + eps;
      const double up = loss();
      x(i, j) = keep - eps;
      const double down = loss();
      x(i, j) = keep;
      g(i, j) = (up - down) / (2.0 * eps);
    }
  }
  return g;
}

/// Same, restricted to the listed (row, col) coordinates; other entries are 0.
template <typename F>
Eigen::MatrixXd numeric_at(Eigen::MatrixXd& x, const std::vector<std::pair<Eigen::Index, Eigen::Index>>& at,
                           F&& loss, double eps = kEps) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (auto [i, j] : at) {
    const double keep = x(i, j);
    x(i, j) = keep + eps;
    const double up = loss();
    x(i, j) = keep - eps;
    const double down = loss();
    x(i, j) = keep;
    g(i, j) = (up - down) / (2.0 * eps);
  }
  return g;
}

inline Eigen::MatrixXd random(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng,
                              double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
  }
  return m;
}

inline std::vector<Eigen::MatrixXd> random_batch(std::size_t b, Eigen::Index r, Eigen::Index c,
                                                 std::mt19937_64& rng) {
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t i = 0; i < b; ++i) out.push_back(random(r, c, rng));
  return out;
}

/// sum(r .* y) over a batch: the projection loss used to test a layer.
inline double project(const std::vector<Eigen::MatrixXd>& r, const std::vector<Eigen::MatrixXd>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r[i].cwiseProduct(y[i]).sum();
  return s;
}

}  // namespace gradcheck
