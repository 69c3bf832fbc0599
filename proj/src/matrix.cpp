#include "motifdash/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace motifdash {

Matrix init_uniform(Eigen::Index rows, Eigen::Index cols, int fan_in, Rng& rng) {
  if (fan_in < 1) throw std::invalid_argument("init_uniform: fan_in must be >= 1");
  const double bound = std::sqrt(1.0 / fan_in);
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = u(rng);
  return m;
}

}  // namespace motifdash
