#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>

namespace motifdash {

// All numeric state is dense double-precision. Row index = sequence
// position (time), column index = channel.
using Matrix = Eigen::MatrixXd;

using Rng = std::mt19937_64;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

// Uniform init scaled by fan-in: U[-sqrt(1/fan_in), +sqrt(1/fan_in)].
Matrix init_uniform(Eigen::Index rows, Eigen::Index cols, int fan_in, Rng& rng);

}  // namespace motifdash
