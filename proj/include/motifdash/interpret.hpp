#pragma once

#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "motifdash/autodiff.hpp"
#include "motifdash/matrix.hpp"
#include "motifdash/models.hpp"

namespace motifdash::interpret {

struct InterpretError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-position influence magnitudes from one backward pass of the
// positive-class pre-softmax score with respect to the input.
struct SaliencyMap {
  std::vector<double> magnitudes;  // length T, >= 0
  Matrix raw_gradient;             // T x 4
};

SaliencyMap saliency_map(const models::Model& model, const Matrix& one_hot);

// Prediction probability over growing prefixes (forward) and growing
// suffixes from the right (backward). Positions below the model's
// minimum admissible length carry the first computable value.
struct TemporalScores {
  std::vector<double> forward;
  std::vector<double> backward;
};

TemporalScores temporal_output_scores(const models::Model& model, const Matrix& one_hot);

struct ClassOptConfig {
  double lambda = 0.01;  // L2 penalty weight
  int steps = 500;
  double step_size = 0.1;
  std::uint64_t seed = 0;
  enum class Init { kZeros, kSmallUniform } init = Init::kZeros;
};

struct OptimizedInput {
  Matrix x_star;                   // T x 4, unconstrained reals
  std::vector<double> score_trace; // positive score per step
  Matrix display;                  // per-position softmax of x_star
  double final_score = 0.0;
};

// Gradient ascent on score(X) - lambda*||X||^2 over an unconstrained
// T x 4 input; model weights stay frozen.
OptimizedInput class_optimize(const models::Model& model, int T, const ClassOptConfig& cfg);

// Same optimization over a caller-built graph; `fixed` supplies bindings
// for any inputs other than the optimized one.
OptimizedInput class_optimize_on(autodiff::Graph& graph, autodiff::NodeId input,
                                 autodiff::NodeId score,
                                 std::unordered_map<int, Matrix> fixed,
                                 const ClassOptConfig& cfg);

// First-layer convolution activation baseline: the length-9 input window
// centered on the receptive field of the strongest (position, filter)
// activation, clipped to the sequence bounds.
struct ConvActivationMotif {
  std::string subsequence;
  int start = 0;  // 0-based
};

ConvActivationMotif conv_activation_motif(const models::Model& model, const Matrix& one_hot);

// JSON serializations for the dashboard pipeline.
std::string saliency_json(const std::string& id, const SaliencyMap& sal);
std::string temporal_json(const std::string& id, const TemporalScores& ts);
std::string class_opt_json(const std::string& preset, const ClassOptConfig& cfg,
                           const OptimizedInput& opt);

}  // namespace motifdash::interpret
