#include "motifdash/nn.hpp"

#include <stdexcept>
#include <unordered_map>

namespace motifdash::nn {

Matrix init_params(Eigen::Index rows, Eigen::Index cols, int fan_in, Rng& rng) {
  return init_uniform(rows, cols, fan_in, rng);
}

ConvLayerParams ConvLayerParams::init(int n_out, int n_in, int k, Rng& rng) {
  ConvLayerParams p;
  p.n_out = n_out;
  p.n_in = n_in;
  p.k = k;
  p.W = init_params(n_out, static_cast<Eigen::Index>(n_in) * k, n_in * k, rng);
  p.B = Matrix::Zero(1, n_out);
  return p;
}

LstmParams LstmParams::init(int d, int n_in, Rng& rng) {
  LstmParams p;
  p.d = d;
  p.n_in = n_in;
  for (Matrix* w : {&p.Wi, &p.Wf, &p.Wo, &p.Wg}) *w = init_params(d, n_in, n_in, rng);
  for (Matrix* u : {&p.Ui, &p.Uf, &p.Uo, &p.Ug}) *u = init_params(d, d, d, rng);
  for (Matrix* b : {&p.bi, &p.bf, &p.bo, &p.bg}) *b = Matrix::Zero(1, d);
  return p;
}

LstmNodeSet add_lstm_params(Graph& g, const LstmParams& p, const std::string& prefix) {
  LstmNodeSet s;
  s.Wi = g.parameter(p.Wi, prefix + ".Wi");
  s.Wf = g.parameter(p.Wf, prefix + ".Wf");
  s.Wo = g.parameter(p.Wo, prefix + ".Wo");
  s.Wg = g.parameter(p.Wg, prefix + ".Wg");
  s.Ui = g.parameter(p.Ui, prefix + ".Ui");
  s.Uf = g.parameter(p.Uf, prefix + ".Uf");
  s.Uo = g.parameter(p.Uo, prefix + ".Uo");
  s.Ug = g.parameter(p.Ug, prefix + ".Ug");
  s.bi = g.parameter(p.bi, prefix + ".bi");
  s.bf = g.parameter(p.bf, prefix + ".bf");
  s.bo = g.parameter(p.bo, prefix + ".bo");
  s.bg = g.parameter(p.bg, prefix + ".bg");
  s.WiT = g.transpose(s.Wi);
  s.WfT = g.transpose(s.Wf);
  s.WoT = g.transpose(s.Wo);
  s.WgT = g.transpose(s.Wg);
  s.UiT = g.transpose(s.Ui);
  s.UfT = g.transpose(s.Uf);
  s.UoT = g.transpose(s.Uo);
  s.UgT = g.transpose(s.Ug);
  return s;
}

LstmStepNodes lstm_step_nodes(Graph& g, NodeId x_t, NodeId h_prev, NodeId c_prev,
                              const LstmNodeSet& p) {
  auto gate = [&](NodeId wT, NodeId uT, NodeId b) {
    return g.add(g.add(g.matmul(x_t, wT), g.matmul(h_prev, uT)), b);
  };
  NodeId i = g.sigmoid(gate(p.WiT, p.UiT, p.bi));
  NodeId f = g.sigmoid(gate(p.WfT, p.UfT, p.bf));
  NodeId o = g.sigmoid(gate(p.WoT, p.UoT, p.bo));
  NodeId cand = g.tanh(gate(p.WgT, p.UgT, p.bg));
  NodeId c = g.add(g.elem_mul(f, c_prev), g.elem_mul(i, cand));
  NodeId h = g.elem_mul(o, g.tanh(c));
  return {h, c};
}

namespace {

NodeId mean_of(Graph& g, const std::vector<NodeId>& xs) {
  NodeId acc = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) acc = g.add(acc, xs[i]);
  return g.scalar_scale(acc, 1.0 / static_cast<double>(xs.size()));
}

}  // namespace

BilstmNodes bilstm_over_rows(Graph& g, const std::vector<NodeId>& rows,
                             const LstmNodeSet& fwd, const LstmNodeSet& bwd, int d) {
  if (rows.empty()) throw std::invalid_argument("bilstm: T must be >= 1");
  BilstmNodes out;
  // initial states h_0 = c_0 = 0
  NodeId h0 = g.constant(Matrix::Zero(1, d));
  NodeId c0 = g.constant(Matrix::Zero(1, d));

  NodeId h = h0, c = c0;
  for (NodeId x_t : rows) {
    auto step = lstm_step_nodes(g, x_t, h, c, fwd);
    h = step.h;
    c = step.c;
    out.fwd_h.push_back(h);
  }
  h = h0;
  c = c0;
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    auto step = lstm_step_nodes(g, *it, h, c, bwd);
    h = step.h;
    c = step.c;
    out.bwd_h.push_back(h);
  }
  out.fwd_mean = mean_of(g, out.fwd_h);
  out.bwd_mean = mean_of(g, out.bwd_h);
  return out;
}

BilstmNodes bilstm_nodes(Graph& g, NodeId input, int T, const LstmNodeSet& fwd,
                         const LstmNodeSet& bwd, int d) {
  if (T < 1) throw std::invalid_argument("bilstm: T must be >= 1");
  const int n_in = static_cast<int>(g.value(input).cols());
  std::vector<NodeId> rows;
  rows.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) rows.push_back(g.slice(input, t, 1, 0, n_in));
  return bilstm_over_rows(g, rows, fwd, bwd, d);
}

NodeId conv_relu_nodes(Graph& g, NodeId x, NodeId w, NodeId b, int k) {
  return g.relu(g.conv1d(x, w, b, k));
}

// ---- eager wrappers ----

Matrix conv1d(const Matrix& input, const ConvLayerParams& params) {
  if (input.cols() != params.n_in)
    throw std::invalid_argument("conv1d: input has " + std::to_string(input.cols()) +
                                " channels, params expect " + std::to_string(params.n_in));
  Graph g;
  NodeId x = g.input(static_cast<int>(input.rows()), params.n_in, "x");
  NodeId w = g.parameter(params.W, "W");
  NodeId b = g.parameter(params.B, "B");
  NodeId z = conv_relu_nodes(g, x, w, b, params.k);
  g.forward({{x.v, input}});
  return g.value(z);
}

Matrix maxpool1d(const Matrix& input, PoolSpec spec) {
  Graph g;
  NodeId x = g.input(static_cast<int>(input.rows()), static_cast<int>(input.cols()), "x");
  NodeId y = g.maxpool1d(x, spec.m);
  g.forward({{x.v, input}});
  return g.value(y);
}

Matrix global_maxpool(const Matrix& input) {
  Graph g;
  NodeId x = g.input(static_cast<int>(input.rows()), static_cast<int>(input.cols()), "x");
  NodeId y = g.global_maxpool(x);
  g.forward({{x.v, input}});
  return g.value(y);
}

std::pair<Matrix, Matrix> lstm_step(const Matrix& x_t, const Matrix& h_prev,
                                    const Matrix& c_prev, const LstmParams& params) {
  if (x_t.rows() != 1 || x_t.cols() != params.n_in || h_prev.rows() != 1 ||
      h_prev.cols() != params.d || c_prev.rows() != 1 || c_prev.cols() != params.d)
    throw std::invalid_argument("lstm_step: shape mismatch against params");
  Graph g;
  NodeId x = g.input(1, params.n_in, "x");
  NodeId h = g.input(1, params.d, "h_prev");
  NodeId c = g.input(1, params.d, "c_prev");
  LstmNodeSet set = add_lstm_params(g, params, "lstm");
  auto step = lstm_step_nodes(g, x, h, c, set);
  g.forward({{x.v, x_t}, {h.v, h_prev}, {c.v, c_prev}});
  return {g.value(step.h), g.value(step.c)};
}

std::pair<Matrix, Matrix> bilstm(const Matrix& input, const LstmParams& fwd,
                                 const LstmParams& bwd) {
  Graph g;
  const int T = static_cast<int>(input.rows());
  NodeId x = g.input(T, static_cast<int>(input.cols()), "x");
  LstmNodeSet f = add_lstm_params(g, fwd, "fwd");
  LstmNodeSet b = add_lstm_params(g, bwd, "bwd");
  BilstmNodes nodes = bilstm_nodes(g, x, T, f, b, fwd.d);
  g.forward({{x.v, input}});
  return {g.value(nodes.fwd_mean), g.value(nodes.bwd_mean)};
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, const DropoutSpec& spec,
                    Rng& rng) {
  if (!(spec.keep > 0.0 && spec.keep <= 1.0))
    throw std::invalid_argument("dropout: keep probability must be in (0,1]");
  if (!spec.enabled || spec.keep == 1.0) return Matrix::Ones(rows, cols);
  Matrix mask(rows, cols);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      mask(r, c) = u(rng) < spec.keep ? 1.0 / spec.keep : 0.0;
  return mask;
}

Matrix dropout(const Matrix& input, const DropoutSpec& spec, Rng& rng) {
  if (!spec.enabled) return input;
  return input.cwiseProduct(dropout_mask(input.rows(), input.cols(), spec, rng));
}

}  // namespace motifdash::nn
