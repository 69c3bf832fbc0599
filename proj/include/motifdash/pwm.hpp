#pragma once

#include <string>

#include "motifdash/matrix.hpp"

namespace motifdash {

inline constexpr char kAlphabet[4] = {'A', 'C', 'G', 'T'};

// Position weight matrix: one row per motif position, columns ordered
// A,C,G,T, each row a probability distribution.
struct Pwm {
  Matrix probs;  // width x 4
  std::string name;
  double pseudocount = 0.0;

  int width() const { return static_cast<int>(probs.rows()); }
};

}  // namespace motifdash
