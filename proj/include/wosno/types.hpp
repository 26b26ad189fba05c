#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace wosno {

template <int D>
using Vec = Eigen::Matrix<double, D, 1>;
using Vec2 = Vec<2>;
using Vec3 = Vec<3>;

// Contract violations a caller can act on: exterior queries, malformed
// input files, shape mismatches.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failures of the numerics themselves (majorant violated, divergence,
// failed identity checks). The CLI maps these to exit status 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace wosno
