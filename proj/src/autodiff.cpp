#include "motifdash/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace motifdash::autodiff {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument("autodiff: " + what);
}

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Node& Graph::at(NodeId id) {
  if (!id.valid() || id.v >= static_cast<int>(nodes_.size())) fail("bad node id");
  return nodes_[id.v];
}

const Node& Graph::at(NodeId id) const {
  if (!id.valid() || id.v >= static_cast<int>(nodes_.size())) fail("bad node id");
  return nodes_[id.v];
}

NodeId Graph::emplace(Node n) {
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<int>(nodes_.size()) - 1};
}

NodeId Graph::input(int rows, int cols, std::string name) {
  Node n;
  n.op = Op::kInput;
  n.name = std::move(name);
  n.value = Matrix::Zero(rows, cols);
  NodeId id = emplace(std::move(n));
  inputs_.push_back(id);
  return id;
}

NodeId Graph::parameter(Matrix value, std::string name) {
  Node n;
  n.op = Op::kParameter;
  n.name = std::move(name);
  n.value = std::move(value);
  NodeId id = emplace(std::move(n));
  parameters_.push_back(id);
  return id;
}

NodeId Graph::constant(Matrix value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return emplace(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Matrix& va = at(a).value;
  const Matrix& vb = at(b).value;
  if (va.cols() != vb.rows())
    fail("matmul shape mismatch " + shape_str(va) + " * " + shape_str(vb));
  Node n;
  n.op = Op::kMatMul;
  n.parents = {a, b};
  n.value = Matrix::Zero(va.rows(), vb.cols());
  return emplace(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Matrix& va = at(a).value;
  const Matrix& vb = at(b).value;
  bool same = va.rows() == vb.rows() && va.cols() == vb.cols();
  bool bias = vb.rows() == 1 && vb.cols() == va.cols();
  if (!same && !bias)
    fail("add shape mismatch " + shape_str(va) + " + " + shape_str(vb));
  Node n;
  n.op = Op::kAdd;
  n.parents = {a, b};
  n.value = Matrix::Zero(va.rows(), va.cols());
  return emplace(std::move(n));
}

NodeId Graph::elem_mul(NodeId a, NodeId b) {
  const Matrix& va = at(a).value;
  const Matrix& vb = at(b).value;
  if (va.rows() != vb.rows() || va.cols() != vb.cols())
    fail("elem_mul shape mismatch " + shape_str(va) + " vs " + shape_str(vb));
  Node n;
  n.op = Op::kElemMul;
  n.parents = {a, b};
  n.value = Matrix::Zero(va.rows(), va.cols());
  return emplace(std::move(n));
}

namespace {
Node unary(Op op, NodeId a, const Matrix& va) {
  Node n;
  n.op = op;
  n.parents = {a};
  n.value = Matrix::Zero(va.rows(), va.cols());
  return n;
}
}  // namespace

NodeId Graph::sigmoid(NodeId a) { return emplace(unary(Op::kSigmoid, a, at(a).value)); }
NodeId Graph::tanh(NodeId a) { return emplace(unary(Op::kTanh, a, at(a).value)); }
NodeId Graph::relu(NodeId a) { return emplace(unary(Op::kRelu, a, at(a).value)); }
NodeId Graph::softmax(NodeId a) { return emplace(unary(Op::kSoftmax, a, at(a).value)); }
NodeId Graph::log(NodeId a) { return emplace(unary(Op::kLog, a, at(a).value)); }

NodeId Graph::conv1d(NodeId x, NodeId w, NodeId b, int filter_width) {
  const Matrix& vx = at(x).value;
  const Matrix& vw = at(w).value;
  const Matrix& vb = at(b).value;
  if (filter_width < 1) fail("conv1d filter width must be >= 1");
  const auto n_in = vx.cols();
  const auto n_out = vw.rows();
  if (vw.cols() != n_in * filter_width)
    fail("conv1d weight shape " + shape_str(vw) + " does not match " +
         std::to_string(n_in) + " channels * width " + std::to_string(filter_width));
  if (vb.rows() != 1 || vb.cols() != n_out)
    fail("conv1d bias shape " + shape_str(vb));
  Node n;
  n.op = Op::kConv1d;
  n.parents = {x, w, b};
  n.filter_width = filter_width;
  n.value = Matrix::Zero(vx.rows(), n_out);
  return emplace(std::move(n));
}

NodeId Graph::maxpool1d(NodeId a, int pool_size) {
  if (pool_size < 1) fail("maxpool1d pool size must be >= 1");
  const Matrix& va = at(a).value;
  const auto out_rows = (va.rows() + pool_size - 1) / pool_size;
  Node n;
  n.op = Op::kMaxPool1d;
  n.parents = {a};
  n.pool_size = pool_size;
  n.value = Matrix::Zero(out_rows, va.cols());
  return emplace(std::move(n));
}

NodeId Graph::global_maxpool(NodeId a) {
  Node n;
  n.op = Op::kGlobalMaxPool;
  n.parents = {a};
  n.value = Matrix::Zero(1, at(a).value.cols());
  return emplace(std::move(n));
}

NodeId Graph::mean_over_time(NodeId a) {
  Node n;
  n.op = Op::kMeanOverTime;
  n.parents = {a};
  n.value = Matrix::Zero(1, at(a).value.cols());
  return emplace(std::move(n));
}

NodeId Graph::concat(NodeId a, NodeId b) {
  const Matrix& va = at(a).value;
  const Matrix& vb = at(b).value;
  if (va.rows() != vb.rows())
    fail("concat row mismatch " + shape_str(va) + " vs " + shape_str(vb));
  Node n;
  n.op = Op::kConcat;
  n.parents = {a, b};
  n.value = Matrix::Zero(va.rows(), va.cols() + vb.cols());
  return emplace(std::move(n));
}

NodeId Graph::slice(NodeId a, int r0, int nrows, int c0, int ncols) {
  const Matrix& va = at(a).value;
  if (r0 < 0 || c0 < 0 || nrows < 1 || ncols < 1 || r0 + nrows > va.rows() ||
      c0 + ncols > va.cols())
    fail("slice out of bounds on " + shape_str(va));
  Node n;
  n.op = Op::kSlice;
  n.parents = {a};
  n.r0 = r0;
  n.nrows = nrows;
  n.c0 = c0;
  n.ncols = ncols;
  n.value = Matrix::Zero(nrows, ncols);
  return emplace(std::move(n));
}

NodeId Graph::transpose(NodeId a) {
  Node n;
  n.op = Op::kTranspose;
  n.parents = {a};
  n.value = Matrix::Zero(at(a).value.cols(), at(a).value.rows());
  return emplace(std::move(n));
}

NodeId Graph::scalar_scale(NodeId a, double s) {
  Node n = unary(Op::kScalarScale, a, at(a).value);
  n.scale = s;
  return emplace(std::move(n));
}

NodeId Graph::sum_squares(NodeId a) {
  Node n;
  n.op = Op::kSumSquares;
  n.parents = {a};
  n.value = Matrix::Zero(1, 1);
  return emplace(std::move(n));
}

void Graph::set_parameter(NodeId id, const Matrix& v) {
  Node& n = at(id);
  if (n.op != Op::kParameter) fail("set_parameter on non-parameter node");
  if (v.rows() != n.value.rows() || v.cols() != n.value.cols())
    fail("set_parameter shape mismatch for '" + n.name + "'");
  n.value = v;
}

void Graph::eval(Node& n) {
  const auto parent = [&](int i) -> const Matrix& { return nodes_[n.parents[i].v].value; };
  switch (n.op) {
    case Op::kInput:
    case Op::kParameter:
    case Op::kConstant:
      break;
    case Op::kMatMul:
      n.value.noalias() = parent(0) * parent(1);
      break;
    case Op::kAdd:
      if (parent(1).rows() == parent(0).rows())
        n.value = parent(0) + parent(1);
      else
        n.value = parent(0).rowwise() + parent(1).row(0);
      break;
    case Op::kElemMul:
      n.value = parent(0).cwiseProduct(parent(1));
      break;
    case Op::kSigmoid:
      n.value = ((-parent(0).array()).exp() + 1.0).inverse();
      break;
    case Op::kTanh:
      n.value = parent(0).array().tanh();
      break;
    case Op::kRelu:
      n.value = parent(0).cwiseMax(0.0);
      break;
    case Op::kSoftmax: {
      const Matrix& x = parent(0);
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mx = x.row(r).maxCoeff();
        Eigen::ArrayXd e = (x.row(r).array() - mx).exp();
        n.value.row(r) = e / e.sum();
      }
      break;
    }
    case Op::kLog:
      n.value = parent(0).cwiseMax(kLogClamp).array().log();
      break;
    case Op::kConv1d: {
      const Matrix& x = parent(0);
      const int k = n.filter_width;
      const auto T = x.rows();
      const auto n_in = x.cols();
      // im2col with k-1 zero rows of right padding, so output length is T.
      n.im2col.setZero(T, n_in * k);
      for (int z = 0; z < k; ++z) {
        const auto span = std::max<Eigen::Index>(0, std::min<Eigen::Index>(T, T - z));
        if (span > 0)
          n.im2col.block(0, static_cast<Eigen::Index>(z) * n_in, span, n_in) =
              x.block(z, 0, span, n_in);
      }
      n.value.noalias() = n.im2col * parent(1).transpose();
      n.value.rowwise() += parent(2).row(0);
      break;
    }
    case Op::kMaxPool1d: {
      const Matrix& x = parent(0);
      const int m = n.pool_size;
      n.argmax.assign(static_cast<std::size_t>(n.value.size()), 0);
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        for (Eigen::Index t = 0; t < n.value.rows(); ++t) {
          const Eigen::Index lo = t * m;
          const Eigen::Index hi = std::min<Eigen::Index>(lo + m, x.rows());
          Eigen::Index best = lo;
          for (Eigen::Index r = lo + 1; r < hi; ++r)
            if (x(r, c) > x(best, c)) best = r;  // first maximum wins ties
          n.value(t, c) = x(best, c);
          n.argmax[static_cast<std::size_t>(t * x.cols() + c)] = static_cast<int>(best);
        }
      }
      break;
    }
    case Op::kGlobalMaxPool: {
      const Matrix& x = parent(0);
      n.argmax.assign(static_cast<std::size_t>(x.cols()), 0);
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        Eigen::Index best = 0;
        for (Eigen::Index r = 1; r < x.rows(); ++r)
          if (x(r, c) > x(best, c)) best = r;
        n.value(0, c) = x(best, c);
        n.argmax[static_cast<std::size_t>(c)] = static_cast<int>(best);
      }
      break;
    }
    case Op::kMeanOverTime:
      n.value = parent(0).colwise().mean();
      break;
    case Op::kConcat:
      n.value.leftCols(parent(0).cols()) = parent(0);
      n.value.rightCols(parent(1).cols()) = parent(1);
      break;
    case Op::kSlice:
      n.value = parent(0).block(n.r0, n.c0, n.nrows, n.ncols);
      break;
    case Op::kTranspose:
      n.value = parent(0).transpose();
      break;
    case Op::kScalarScale:
      n.value = parent(0) * n.scale;
      break;
    case Op::kSumSquares:
      n.value(0, 0) = parent(0).squaredNorm();
      break;
  }
}

void Graph::forward(const std::unordered_map<int, Matrix>& bindings) {
  for (NodeId id : inputs_) {
    Node& n = nodes_[id.v];
    auto it = bindings.find(id.v);
    if (it == bindings.end()) fail("unbound input '" + n.name + "'");
    if (it->second.rows() != n.value.rows() || it->second.cols() != n.value.cols())
      fail("binding shape mismatch for input '" + n.name + "': expected " +
           shape_str(n.value) + ", got " + shape_str(it->second));
    n.value = it->second;
  }
  for (Node& n : nodes_) eval(n);
  forward_done_ = true;
}

void Graph::accumulate(Node& n) {
  const auto parent = [&](int i) -> const Matrix& { return nodes_[n.parents[i].v].value; };
  const auto padj = [&](int i) -> Matrix& { return nodes_[n.parents[i].v].adjoint; };
  const Matrix& g = n.adjoint;
  switch (n.op) {
    case Op::kInput:
    case Op::kParameter:
    case Op::kConstant:
      break;
    case Op::kMatMul:
      padj(0).noalias() += g * parent(1).transpose();
      padj(1).noalias() += parent(0).transpose() * g;
      break;
    case Op::kAdd:
      padj(0) += g;
      if (parent(1).rows() == parent(0).rows())
        padj(1) += g;
      else
        padj(1).row(0) += g.colwise().sum();
      break;
    case Op::kElemMul:
      padj(0) += g.cwiseProduct(parent(1));
      padj(1) += g.cwiseProduct(parent(0));
      break;
    case Op::kSigmoid:
      padj(0).array() += g.array() * n.value.array() * (1.0 - n.value.array());
      break;
    case Op::kTanh:
      padj(0).array() += g.array() * (1.0 - n.value.array().square());
      break;
    case Op::kRelu:
      padj(0).array() += g.array() * (parent(0).array() > 0.0).cast<double>();
      break;
    case Op::kSoftmax:
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        const double dot = g.row(r).cwiseProduct(n.value.row(r)).sum();
        padj(0).row(r).array() +=
            n.value.row(r).array() * (g.row(r).array() - dot);
      }
      break;
    case Op::kLog:
      padj(0).array() += g.array() / parent(0).cwiseMax(kLogClamp).array();
      break;
    case Op::kConv1d: {
      const Matrix& x = parent(0);
      const int k = n.filter_width;
      const auto T = x.rows();
      const auto n_in = x.cols();
      padj(1).noalias() += g.transpose() * n.im2col;
      padj(2).row(0) += g.colwise().sum();
      Matrix d_cols = g * parent(1);  // T x (n_in*k)
      for (int z = 0; z < k; ++z) {
        const auto span = std::max<Eigen::Index>(0, std::min<Eigen::Index>(T, T - z));
        if (span > 0)
          padj(0).block(z, 0, span, n_in) +=
              d_cols.block(0, static_cast<Eigen::Index>(z) * n_in, span, n_in);
      }
      break;
    }
    case Op::kMaxPool1d: {
      Matrix& dx = padj(0);
      for (Eigen::Index c = 0; c < dx.cols(); ++c)
        for (Eigen::Index t = 0; t < g.rows(); ++t)
          dx(n.argmax[static_cast<std::size_t>(t * dx.cols() + c)], c) += g(t, c);
      break;
    }
    case Op::kGlobalMaxPool: {
      Matrix& dx = padj(0);
      for (Eigen::Index c = 0; c < dx.cols(); ++c)
        dx(n.argmax[static_cast<std::size_t>(c)], c) += g(0, c);
      break;
    }
    case Op::kMeanOverTime:
      padj(0).rowwise() += g.row(0) / static_cast<double>(parent(0).rows());
      break;
    case Op::kConcat:
      padj(0) += g.leftCols(parent(0).cols());
      padj(1) += g.rightCols(parent(1).cols());
      break;
    case Op::kSlice:
      padj(0).block(n.r0, n.c0, n.nrows, n.ncols) += g;
      break;
    case Op::kTranspose:
      padj(0) += g.transpose();
      break;
    case Op::kScalarScale:
      padj(0) += g * n.scale;
      break;
    case Op::kSumSquares:
      padj(0) += 2.0 * g(0, 0) * parent(0);
      break;
  }
}

void Graph::backward(NodeId loss) {
  if (!forward_done_) fail("backward before forward");
  Node& l = at(loss);
  if (l.value.rows() != 1 || l.value.cols() != 1)
    fail("loss node must be scalar, got " + shape_str(l.value));
  for (Node& n : nodes_) n.adjoint.setZero(n.value.rows(), n.value.cols());
  l.adjoint(0, 0) = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) accumulate(*it);
}

GradCheckReport finite_diff_check(Graph& g, NodeId loss,
                                  const std::unordered_map<int, Matrix>& bindings,
                                  double step, double tolerance) {
  if (step <= 0.0) throw std::invalid_argument("finite_diff_check: step must be > 0");
  auto local = bindings;
  g.forward(local);
  g.backward(loss);

  std::vector<std::pair<NodeId, Matrix>> analytic;
  for (NodeId p : g.parameters()) analytic.emplace_back(p, g.adjoint(p));
  for (NodeId p : g.inputs()) analytic.emplace_back(p, g.adjoint(p));

  GradCheckReport report;
  for (auto& [id, grad] : analytic) {
    const bool is_param = std::find_if(g.parameters().begin(), g.parameters().end(),
                                       [&](NodeId q) { return q == id; }) !=
                          g.parameters().end();
    Matrix base = g.value(id);
    GradCheckEntry entry{g.name(id), 0.0};
    for (Eigen::Index i = 0; i < base.size(); ++i) {
      auto perturbed = [&](double delta) {
        Matrix v = base;
        v(i) += delta;
        if (is_param)
          g.set_parameter(id, v);
        else
          local[id.v] = v;
        g.forward(local);
        return g.value(loss)(0, 0);
      };
      const double fd = (perturbed(step) - perturbed(-step)) / (2.0 * step);
      if (is_param)
        g.set_parameter(id, base);
      else
        local[id.v] = base;
      const double denom = std::max({std::abs(fd), std::abs(grad(i)), 1e-8});
      entry.max_rel_err = std::max(entry.max_rel_err, std::abs(fd - grad(i)) / denom);
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  g.forward(local);
  report.pass = report.max_rel_err < tolerance;
  return report;
}

}  // namespace motifdash::autodiff
