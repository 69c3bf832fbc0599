#include "motifdash/interpret.hpp"

#include <cmath>

#include <json.hpp>

#include "motifdash/data.hpp"

namespace motifdash::interpret {

using models::Model;
using models::ModelConfig;

SaliencyMap saliency_map(const Model& model, const Matrix& one_hot) {
  const int T = static_cast<int>(one_hot.rows());
  auto bound = model.bind(T);
  bound->run(one_hot);
  bound->graph.backward(bound->logit_pos);
  SaliencyMap sal;
  sal.raw_gradient = bound->graph.adjoint(bound->input);
  sal.magnitudes.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    // pointwise product with the one-hot input keeps only the active
    // channel; the magnitude is that entry's absolute value
    double v = 0.0;
    for (int c = 0; c < 4; ++c) v += sal.raw_gradient(t, c) * one_hot(t, c);
    sal.magnitudes[static_cast<std::size_t>(t)] = std::abs(v);
  }
  return sal;
}

TemporalScores temporal_output_scores(const Model& model, const Matrix& one_hot) {
  if (model.config().architecture == ModelConfig::Arch::kCnn)
    throw InterpretError("temporal output scores are unsupported for the CNN architecture");
  const int T = static_cast<int>(one_hot.rows());
  const int min_len = model.min_length();
  if (T < min_len) throw InterpretError("sequence shorter than model minimum length");

  TemporalScores ts;
  ts.forward.resize(static_cast<std::size_t>(T));
  ts.backward.resize(static_cast<std::size_t>(T));
  for (int t = min_len; t <= T; ++t) {
    ts.forward[static_cast<std::size_t>(t - 1)] =
        model.predict(one_hot.topRows(t)).prob_positive;
    ts.backward[static_cast<std::size_t>(t - 1)] =
        model.predict(one_hot.bottomRows(t)).prob_positive;
  }
  for (int t = 0; t < min_len - 1; ++t) {
    ts.forward[static_cast<std::size_t>(t)] = ts.forward[static_cast<std::size_t>(min_len - 1)];
    ts.backward[static_cast<std::size_t>(t)] = ts.backward[static_cast<std::size_t>(min_len - 1)];
  }
  return ts;
}

OptimizedInput class_optimize_on(autodiff::Graph& g, autodiff::NodeId input,
                                 autodiff::NodeId score,
                                 std::unordered_map<int, Matrix> fixed,
                                 const ClassOptConfig& cfg) {
  if (cfg.steps < 1) throw InterpretError("class optimization needs at least one step");
  const Eigen::Index T = g.value(input).rows();
  const Eigen::Index C = g.value(input).cols();

  autodiff::NodeId objective =
      g.add(score, g.scalar_scale(g.sum_squares(input), -cfg.lambda));

  Rng rng(cfg.seed);
  Matrix x;
  if (cfg.init == ClassOptConfig::Init::kZeros)
    x = Matrix::Zero(T, C);
  else
    x = init_uniform(T, C, 1, rng) * 0.01;

  OptimizedInput out;
  for (int step = 0; step < cfg.steps; ++step) {
    fixed[input.v] = x;
    g.forward(fixed);
    const double s = g.value(score)(0, 0);
    if (!std::isfinite(s))
      throw InterpretError("non-finite score at optimization step " + std::to_string(step));
    out.score_trace.push_back(s);
    g.backward(objective);
    x += cfg.step_size * g.adjoint(input);
  }
  fixed[input.v] = x;
  g.forward(fixed);
  out.final_score = g.value(score)(0, 0);
  out.x_star = x;

  out.display = Matrix::Zero(T, C);
  for (Eigen::Index t = 0; t < T; ++t) {
    const double mx = x.row(t).maxCoeff();
    Eigen::ArrayXd e = (x.row(t).array() - mx).exp();
    out.display.row(t) = e / e.sum();
  }
  return out;
}

OptimizedInput class_optimize(const Model& model, int T, const ClassOptConfig& cfg) {
  auto bound = model.bind(T);
  Matrix label(1, 2);
  label << 1.0, 0.0;
  std::unordered_map<int, Matrix> fixed{
      {bound->mask.v, Matrix::Ones(1, bound->feature_dim)}, {bound->label.v, label}};
  return class_optimize_on(bound->graph, bound->input, bound->logit_pos, std::move(fixed),
                           cfg);
}

ConvActivationMotif conv_activation_motif(const Model& model, const Matrix& one_hot) {
  const auto& cfg = model.config();
  if (cfg.conv_layers == 0)
    throw InterpretError("convolution activation motif is unsupported for the RNN architecture");
  const int k = cfg.conv_filter_sizes.front();
  if (k > 9) throw InterpretError("first-layer filter width exceeds the motif width 9");
  const int T = static_cast<int>(one_hot.rows());
  if (T < 9) throw InterpretError("sequence shorter than the motif width 9");

  auto bound = model.bind(T);
  bound->run(one_hot);
  const Matrix& act = bound->graph.value(bound->first_conv);

  // first maximum wins ties, scanning positions then filters
  int best_t = 0, best_i = 0;
  double best = act(0, 0);
  for (int t = 0; t < act.rows(); ++t)
    for (int i = 0; i < act.cols(); ++i)
      if (act(t, i) > best) {
        best = act(t, i);
        best_t = t;
        best_i = i;
      }
  (void)best_i;

  const int center = best_t + (k - 1) / 2;
  int start = std::clamp(center - 4, 0, T - 9);
  ConvActivationMotif out;
  out.start = start;
  const data::DnaSequence seq = data::one_hot_decode(one_hot);
  out.subsequence = seq.chars.substr(static_cast<std::size_t>(start), 9);
  return out;
}

std::string saliency_json(const std::string& id, const SaliencyMap& sal) {
  nlohmann::json j{{"id", id}, {"magnitudes", sal.magnitudes}};
  return j.dump(2);
}

std::string temporal_json(const std::string& id, const TemporalScores& ts) {
  nlohmann::json j{{"id", id}, {"forward", ts.forward}, {"backward", ts.backward}};
  return j.dump(2);
}

std::string class_opt_json(const std::string& preset, const ClassOptConfig& cfg,
                           const OptimizedInput& opt) {
  auto matrix_rows = [](const Matrix& m) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      std::vector<double> row;
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  nlohmann::json j{{"preset", preset},
                   {"lambda", cfg.lambda},
                   {"steps", cfg.steps},
                   {"matrix", matrix_rows(opt.x_star)},
                   {"display-matrix", matrix_rows(opt.display)},
                   {"score-trace", opt.score_trace}};
  return j.dump(2);
}

}  // namespace motifdash::interpret
