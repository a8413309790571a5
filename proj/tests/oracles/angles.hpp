#pragma once

// 50-digit evaluation of the gaze angle formulas, independent of libm.

#include "fatigue/preprocess.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

inline fatigue::GazeAngles big_angles(const fatigue::GazeVector& v) {
  using Big = boost::multiprecision::cpp_bin_float_50;
  const Big x(v.x()), y(v.y()), z(v.z());
  const Big to_deg = Big(180) / boost::math::constants::pi<Big>();
  const Big h = atan2(x, sqrt(y * y + z * z)) * to_deg;
  const Big vv = atan2(y, z) * to_deg;
  return {static_cast<double>(h), static_cast<double>(vv)};
}

}  // namespace oracle
