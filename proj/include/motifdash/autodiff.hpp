#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "motifdash/matrix.hpp"

namespace motifdash::autodiff {

enum class Op {
  kInput,
  kParameter,
  kConstant,
  kMatMul,
  kAdd,           // equal shapes, or rhs a 1xN row broadcast over rows
  kElemMul,
  kSigmoid,
  kTanh,
  kRelu,
  kSoftmax,       // row-wise, max-subtracted
  kLog,           // clamped at kLogClamp before the log
  kConv1d,        // parents: x (T x n_in), W (n_out x n_in*k), B (1 x n_out)
  kMaxPool1d,
  kGlobalMaxPool,
  kMeanOverTime,
  kConcat,        // column-wise, equal row counts
  kSlice,
  kTranspose,
  kScalarScale,
  kSumSquares,    // -> 1x1
};

inline constexpr double kLogClamp = 1e-12;

struct NodeId {
  int v = -1;
  bool valid() const { return v >= 0; }
  friend bool operator==(NodeId a, NodeId b) { return a.v == b.v; }
};

struct Node {
  Op op;
  std::vector<NodeId> parents;
  Matrix value;
  Matrix adjoint;
  std::string name;  // inputs and parameters only

  // op attributes
  int filter_width = 0;   // conv1d
  int pool_size = 0;      // maxpool1d
  int r0 = 0, nrows = 0, c0 = 0, ncols = 0;  // slice
  double scale = 1.0;     // scalar-scale

  // forward-pass scratch reused by backward
  Matrix im2col;                 // conv1d
  std::vector<int> argmax;       // pooling
};

// Append-only reverse-mode tape over dense double matrices. Nodes are
// created in topological order; shapes are fixed at construction and
// checked there. One Graph instance is single-writer: do not interleave
// forward/backward calls from multiple threads.
class Graph {
 public:
  NodeId input(int rows, int cols, std::string name);
  NodeId parameter(Matrix value, std::string name);
  NodeId constant(Matrix value);

  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId elem_mul(NodeId a, NodeId b);
  NodeId sigmoid(NodeId a);
  NodeId tanh(NodeId a);
  NodeId relu(NodeId a);
  NodeId softmax(NodeId a);
  NodeId log(NodeId a);
  NodeId conv1d(NodeId x, NodeId w, NodeId b, int filter_width);
  NodeId maxpool1d(NodeId a, int pool_size);
  NodeId global_maxpool(NodeId a);
  NodeId mean_over_time(NodeId a);
  NodeId concat(NodeId a, NodeId b);
  NodeId slice(NodeId a, int r0, int nrows, int c0, int ncols);
  NodeId transpose(NodeId a);
  NodeId scalar_scale(NodeId a, double s);
  NodeId sum_squares(NodeId a);

  // Evaluates every node in topological order. Every declared input must
  // appear in `bindings` with its declared shape.
  void forward(const std::unordered_map<int, Matrix>& bindings);

  // Populates adjoints of every node from a scalar (1x1) loss node.
  // forward() must have run first.
  void backward(NodeId loss);

  void set_parameter(NodeId id, const Matrix& v);

  const Matrix& value(NodeId id) const { return at(id).value; }
  const Matrix& adjoint(NodeId id) const { return at(id).adjoint; }
  const std::string& name(NodeId id) const { return at(id).name; }

  const std::vector<NodeId>& parameters() const { return parameters_; }
  const std::vector<NodeId>& inputs() const { return inputs_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  NodeId emplace(Node n);
  Node& at(NodeId id);
  const Node& at(NodeId id) const;
  void eval(Node& n);
  void accumulate(Node& n);

  std::vector<Node> nodes_;
  std::vector<NodeId> parameters_;
  std::vector<NodeId> inputs_;
  bool forward_done_ = false;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
  bool pass = false;
};

// Central finite differences on every parameter (and every input, which
// downstream consumers also differentiate against) versus backward().
GradCheckReport finite_diff_check(Graph& g, NodeId loss,
                                  const std::unordered_map<int, Matrix>& bindings,
                                  double step, double tolerance);

}  // namespace motifdash::autodiff
