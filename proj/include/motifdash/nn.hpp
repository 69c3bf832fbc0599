#pragma once

#include <string>
#include <utility>
#include <vector>

#include "motifdash/autodiff.hpp"
#include "motifdash/matrix.hpp"

namespace motifdash::nn {

using autodiff::Graph;
using autodiff::NodeId;

// Temporal convolution filter bank. W stores filter i, channel j, tap z
// at W(i, z*n_in + j); B is a 1 x n_out bias row.
struct ConvLayerParams {
  int n_out = 0;
  int n_in = 0;
  int k = 0;
  Matrix W;
  Matrix B;

  static ConvLayerParams init(int n_out, int n_in, int k, Rng& rng);
};

struct PoolSpec {
  int m = 1;
};

// Gate weights W^* are d x n_in, recurrences U^* are d x d, biases 1 x d.
struct LstmParams {
  int d = 0;
  int n_in = 0;
  Matrix Wi, Wf, Wo, Wg;
  Matrix Ui, Uf, Uo, Ug;
  Matrix bi, bf, bo, bg;

  static LstmParams init(int d, int n_in, Rng& rng);
};

struct DropoutSpec {
  double keep = 1.0;
  bool enabled = false;  // true only during training
};

// ---- graph fragment builders ----

// Parameter nodes for one LSTM direction, with transposes built once so
// steps can reuse them.
struct LstmNodeSet {
  NodeId Wi, Wf, Wo, Wg, Ui, Uf, Uo, Ug;          // parameters (spec shapes)
  NodeId WiT, WfT, WoT, WgT, UiT, UfT, UoT, UgT;  // transposed views
  NodeId bi, bf, bo, bg;
};

LstmNodeSet add_lstm_params(Graph& g, const LstmParams& p, const std::string& prefix);

struct LstmStepNodes {
  NodeId h, c;
};

LstmStepNodes lstm_step_nodes(Graph& g, NodeId x_t, NodeId h_prev, NodeId c_prev,
                              const LstmNodeSet& p);

// Runs both directions over a T x n_in node and returns the temporal mean
// of each direction's hidden outputs (each 1 x d). per-timestep outputs
// are kept for stacking; bwd_h[i] corresponds to input row T-1-i.
struct BilstmNodes {
  NodeId fwd_mean, bwd_mean;
  std::vector<NodeId> fwd_h, bwd_h;
};

BilstmNodes bilstm_nodes(Graph& g, NodeId input, int T, const LstmNodeSet& fwd,
                         const LstmNodeSet& bwd, int d);

// Same, over an explicit list of 1 x n_in row nodes (used for stacking a
// second recurrent layer over per-timestep outputs).
BilstmNodes bilstm_over_rows(Graph& g, const std::vector<NodeId>& rows,
                             const LstmNodeSet& fwd, const LstmNodeSet& bwd, int d);

// Convolution layer fragment: zero right-padded conv plus fused ReLU.
NodeId conv_relu_nodes(Graph& g, NodeId x, NodeId w, NodeId b, int k);

// ---- eager layer application (thin wrappers over a throwaway graph) ----

Matrix conv1d(const Matrix& input, const ConvLayerParams& params);
Matrix maxpool1d(const Matrix& input, PoolSpec spec);
Matrix global_maxpool(const Matrix& input);
std::pair<Matrix, Matrix> lstm_step(const Matrix& x_t, const Matrix& h_prev,
                                    const Matrix& c_prev, const LstmParams& params);
// Returns (h_fwd_mean, h_bwd_mean); the caller concatenates.
std::pair<Matrix, Matrix> bilstm(const Matrix& input, const LstmParams& fwd,
                                 const LstmParams& bwd);

// Inverted dropout: Bernoulli(keep)/keep mask in training mode, identity
// at inference.
Matrix dropout(const Matrix& input, const DropoutSpec& spec, Rng& rng);
Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, const DropoutSpec& spec,
                    Rng& rng);

Matrix init_params(Eigen::Index rows, Eigen::Index cols, int fan_in, Rng& rng);

}  // namespace motifdash::nn
