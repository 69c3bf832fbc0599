#include "motifdash/models.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace motifdash::models {

namespace {

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

std::string join_int_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s.empty() ? "-" : s;
}

}  // namespace

Model& Model::operator=(const Model& o) {
  if (this != &o) {
    config_ = o.config_;
    params_ = o.params_;
    std::lock_guard lock(cache_mutex_);
    bound_cache_.clear();
  }
  return *this;
}

Model& Model::operator=(Model&& o) noexcept {
  if (this != &o) {
    config_ = std::move(o.config_);
    params_ = std::move(o.params_);
    bound_cache_.clear();
  }
  return *this;
}

std::string ModelConfig::arch_name(Arch a) {
  switch (a) {
    case Arch::kCnn: return "CNN";
    case Arch::kRnn: return "RNN";
    case Arch::kCnnRnn: return "CNN-RNN";
  }
  return "?";
}

ModelConfig::Arch ModelConfig::parse_arch(const std::string& s) {
  if (s == "CNN") return Arch::kCnn;
  if (s == "RNN") return Arch::kRnn;
  if (s == "CNN-RNN") return Arch::kCnnRnn;
  throw ModelError("unknown architecture: " + s);
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ModelError("invalid model config: " + msg);
  };
  if (architecture == Arch::kRnn) {
    require(conv_layers == 0 && conv_sizes.empty() && conv_filter_sizes.empty() &&
                pool_size == 0,
            "RNN must not have conv fields");
    require(lstm_layers >= 1 && lstm_size >= 1, "RNN needs LSTM layers and size");
  } else {
    require(conv_layers >= 1, "conv-bearing model needs >= 1 conv layer");
    require(static_cast<int>(conv_sizes.size()) == conv_layers &&
                static_cast<int>(conv_filter_sizes.size()) == conv_layers,
            "conv list lengths must equal conv-layers");
    for (int k : conv_filter_sizes) require(k >= 1, "filter size must be >= 1");
    for (int n : conv_sizes) require(n >= 1, "conv size must be >= 1");
    if (architecture == Arch::kCnn)
      require(lstm_layers == 0 && lstm_size == 0, "CNN must not have LSTM fields");
    else
      require(lstm_layers >= 1 && lstm_size >= 1, "CNN-RNN needs >= 1 LSTM layer");
  }
  require(lstm_layers <= 2, "at most 2 LSTM layers supported");
  require(dropout_keep > 0.0 && dropout_keep <= 1.0, "dropout-keep must be in (0,1]");
}

ModelConfig ModelConfig::preset(const std::string& name) {
  ModelConfig c;
  c.preset_name = name;
  using A = Arch;
  if (name == "Small RNN") {
    c.architecture = A::kRnn; c.lstm_layers = 1; c.lstm_size = 16;
  } else if (name == "Medium RNN") {
    c.architecture = A::kRnn; c.lstm_layers = 1; c.lstm_size = 32;
  } else if (name == "Large RNN") {
    c.architecture = A::kRnn; c.lstm_layers = 2; c.lstm_size = 32;
  } else if (name == "Small CNN") {
    c.architecture = A::kCnn; c.conv_layers = 2; c.conv_sizes = {64, 64};
    c.conv_filter_sizes = {9, 5}; c.pool_size = 2;
  } else if (name == "Medium CNN") {
    c.architecture = A::kCnn; c.conv_layers = 3; c.conv_sizes = {64, 64, 64};
    c.conv_filter_sizes = {9, 5, 3}; c.pool_size = 2;
  } else if (name == "Large CNN") {
    c.architecture = A::kCnn; c.conv_layers = 4; c.conv_sizes = {64, 64, 64, 64};
    c.conv_filter_sizes = {9, 5, 3, 3}; c.pool_size = 2;
  } else if (name == "Small CNN-RNN") {
    c.architecture = A::kCnnRnn; c.conv_layers = 1; c.conv_sizes = {64};
    c.conv_filter_sizes = {5}; c.lstm_layers = 2; c.lstm_size = 32;
  } else if (name == "Medium CNN-RNN") {
    c.architecture = A::kCnnRnn; c.conv_layers = 1; c.conv_sizes = {128};
    c.conv_filter_sizes = {9}; c.lstm_layers = 1; c.lstm_size = 32;
  } else if (name == "Large CNN-RNN") {
    c.architecture = A::kCnnRnn; c.conv_layers = 2; c.conv_sizes = {128, 128};
    c.conv_filter_sizes = {9, 5}; c.pool_size = 2; c.lstm_layers = 1; c.lstm_size = 32;
  } else {
    throw ModelError("unknown preset: " + name);
  }
  c.validate();
  return c;
}

std::vector<std::string> ModelConfig::preset_names() {
  return {"Small RNN",     "Medium RNN",     "Large RNN",
          "Small CNN",     "Medium CNN",     "Large CNN",
          "Small CNN-RNN", "Medium CNN-RNN", "Large CNN-RNN"};
}

namespace {

void init_lstm_params(std::map<std::string, Matrix>& params, const std::string& prefix,
                      int d, int n_in, Rng& rng) {
  for (const char* dir : {"fwd", "bwd"}) {
    nn::LstmParams p = nn::LstmParams::init(d, n_in, rng);
    const std::string base = prefix + "." + dir + ".";
    params[base + "Wi"] = p.Wi; params[base + "Wf"] = p.Wf;
    params[base + "Wo"] = p.Wo; params[base + "Wg"] = p.Wg;
    params[base + "Ui"] = p.Ui; params[base + "Uf"] = p.Uf;
    params[base + "Uo"] = p.Uo; params[base + "Ug"] = p.Ug;
    params[base + "bi"] = p.bi; params[base + "bf"] = p.bf;
    params[base + "bo"] = p.bo; params[base + "bg"] = p.bg;
  }
}

nn::LstmParams lstm_from_params(const std::map<std::string, Matrix>& params,
                                const std::string& base) {
  nn::LstmParams p;
  p.Wi = params.at(base + "Wi"); p.Wf = params.at(base + "Wf");
  p.Wo = params.at(base + "Wo"); p.Wg = params.at(base + "Wg");
  p.Ui = params.at(base + "Ui"); p.Uf = params.at(base + "Uf");
  p.Uo = params.at(base + "Uo"); p.Ug = params.at(base + "Ug");
  p.bi = params.at(base + "bi"); p.bf = params.at(base + "bf");
  p.bo = params.at(base + "bo"); p.bg = params.at(base + "bg");
  p.d = static_cast<int>(p.Wi.rows());
  p.n_in = static_cast<int>(p.Wi.cols());
  return p;
}

nn::LstmNodeSet add_lstm_tracked(autodiff::Graph& g, const nn::LstmParams& p,
                                 const std::string& prefix,
                                 std::map<std::string, autodiff::NodeId>& param_nodes) {
  nn::LstmNodeSet s = nn::add_lstm_params(g, p, prefix);
  param_nodes[prefix + ".Wi"] = s.Wi; param_nodes[prefix + ".Wf"] = s.Wf;
  param_nodes[prefix + ".Wo"] = s.Wo; param_nodes[prefix + ".Wg"] = s.Wg;
  param_nodes[prefix + ".Ui"] = s.Ui; param_nodes[prefix + ".Uf"] = s.Uf;
  param_nodes[prefix + ".Uo"] = s.Uo; param_nodes[prefix + ".Ug"] = s.Ug;
  param_nodes[prefix + ".bi"] = s.bi; param_nodes[prefix + ".bf"] = s.bf;
  param_nodes[prefix + ".bo"] = s.bo; param_nodes[prefix + ".bg"] = s.bg;
  return s;
}

}  // namespace

Model Model::build(const ModelConfig& config, Rng& rng) {
  config.validate();
  Model m;
  m.config_ = config;
  auto& params = m.params_;

  int n_in = 4;
  for (int i = 0; i < config.conv_layers; ++i) {
    nn::ConvLayerParams p =
        nn::ConvLayerParams::init(config.conv_sizes[static_cast<std::size_t>(i)], n_in,
                                  config.conv_filter_sizes[static_cast<std::size_t>(i)], rng);
    params["conv" + std::to_string(i) + ".W"] = p.W;
    params["conv" + std::to_string(i) + ".B"] = p.B;
    n_in = p.n_out;
  }
  int feature_dim;
  if (config.architecture == ModelConfig::Arch::kCnn) {
    feature_dim = config.conv_sizes.back();
  } else {
    int lstm_in = n_in;  // 4 for RNN, last conv width for CNN-RNN
    for (int l = 0; l < config.lstm_layers; ++l) {
      init_lstm_params(params, "lstm" + std::to_string(l), config.lstm_size, lstm_in, rng);
      lstm_in = 2 * config.lstm_size;
    }
    feature_dim = 2 * config.lstm_size;
  }
  params["out.W"] = nn::init_params(feature_dim, 2, feature_dim, rng);
  params["out.b"] = Matrix::Zero(1, 2);
  return m;
}

void Model::set_parameters(std::map<std::string, Matrix> params) {
  for (const auto& [name, value] : params_) {
    auto it = params.find(name);
    if (it == params.end()) throw ModelError("set_parameters: missing tensor '" + name + "'");
    if (it->second.rows() != value.rows() || it->second.cols() != value.cols())
      throw ModelError("set_parameters: shape mismatch for tensor '" + name + "'");
  }
  if (params.size() != params_.size())
    throw ModelError("set_parameters: unexpected extra tensors");
  params_ = std::move(params);
  std::lock_guard lock(cache_mutex_);
  bound_cache_.clear();
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, value] : params_) n += static_cast<std::size_t>(value.size());
  return n;
}

int Model::min_length() const {
  int m = 1;
  for (int k : config_.conv_filter_sizes) m = std::max(m, k);
  return m;
}

std::unique_ptr<Model::Bound> Model::bind(int T) const {
  if (T < min_length())
    throw ModelError("sequence length " + std::to_string(T) +
                     " shorter than largest filter width " + std::to_string(min_length()));
  auto bound = std::make_unique<Bound>();
  bound->T = T;
  autodiff::Graph& g = bound->graph;
  auto& pn = bound->param_nodes;

  bound->input = g.input(T, 4, "x");
  autodiff::NodeId cur = bound->input;
  int cur_rows = T;

  for (int i = 0; i < config_.conv_layers; ++i) {
    const std::string base = "conv" + std::to_string(i);
    autodiff::NodeId w = g.parameter(params_.at(base + ".W"), base + ".W");
    autodiff::NodeId b = g.parameter(params_.at(base + ".B"), base + ".B");
    pn[base + ".W"] = w;
    pn[base + ".B"] = b;
    cur = nn::conv_relu_nodes(g, cur, w, b,
                              config_.conv_filter_sizes[static_cast<std::size_t>(i)]);
    if (i == 0) bound->first_conv = cur;
    const bool last = i == config_.conv_layers - 1;
    if (config_.architecture == ModelConfig::Arch::kCnn && last) {
      cur = g.global_maxpool(cur);
      cur_rows = 1;
    } else if (!last && config_.pool_size > 1) {
      cur = g.maxpool1d(cur, config_.pool_size);
      cur_rows = (cur_rows + config_.pool_size - 1) / config_.pool_size;
    }
  }

  autodiff::NodeId feat;
  if (config_.architecture == ModelConfig::Arch::kCnn) {
    feat = cur;
  } else {
    const int d = config_.lstm_size;
    std::vector<autodiff::NodeId> rows;
    const int n_cols = static_cast<int>(g.value(cur).cols());
    for (int t = 0; t < cur_rows; ++t) rows.push_back(g.slice(cur, t, 1, 0, n_cols));
    nn::BilstmNodes out;
    for (int l = 0; l < config_.lstm_layers; ++l) {
      const std::string base = "lstm" + std::to_string(l);
      nn::LstmNodeSet fwd =
          add_lstm_tracked(g, lstm_from_params(params_, base + ".fwd."), base + ".fwd", pn);
      nn::LstmNodeSet bwd =
          add_lstm_tracked(g, lstm_from_params(params_, base + ".bwd."), base + ".bwd", pn);
      out = nn::bilstm_over_rows(g, rows, fwd, bwd, d);
      if (l + 1 < config_.lstm_layers) {
        std::vector<autodiff::NodeId> next;
        for (int t = 0; t < cur_rows; ++t)
          next.push_back(g.concat(out.fwd_h[static_cast<std::size_t>(t)],
                                  out.bwd_h[static_cast<std::size_t>(cur_rows - 1 - t)]));
        rows = std::move(next);
      }
    }
    feat = g.concat(out.fwd_mean, out.bwd_mean);
  }

  bound->feature_dim = static_cast<int>(g.value(feat).cols());
  bound->mask = g.input(1, bound->feature_dim, "dropout_mask");
  feat = g.elem_mul(feat, bound->mask);

  autodiff::NodeId w_out = g.parameter(params_.at("out.W"), "out.W");
  autodiff::NodeId b_out = g.parameter(params_.at("out.b"), "out.b");
  pn["out.W"] = w_out;
  pn["out.b"] = b_out;
  bound->logits = g.add(g.matmul(feat, w_out), b_out);
  bound->logit_pos = g.slice(bound->logits, 0, 1, 0, 1);
  bound->probs = g.softmax(bound->logits);

  bound->label = g.input(1, 2, "label");
  autodiff::NodeId ones = g.constant(Matrix::Ones(2, 1));
  autodiff::NodeId p_true = g.matmul(g.elem_mul(bound->probs, bound->label), ones);
  bound->loss = g.scalar_scale(g.log(p_true), -1.0);
  return bound;
}

void Model::Bound::run(const Matrix& x, const Matrix& mask_v, const Matrix& label_onehot) {
  graph.forward({{input.v, x}, {mask.v, mask_v}, {label.v, label_onehot}});
}

void Model::Bound::run(const Matrix& x) {
  Matrix lbl(1, 2);
  lbl << 1.0, 0.0;
  run(x, Matrix::Ones(1, feature_dim), lbl);
}

void Model::Bound::sync_params(const std::map<std::string, Matrix>& params) {
  for (const auto& [name, id] : param_nodes) graph.set_parameter(id, params.at(name));
}

Model::Prediction Model::predict(const Matrix& one_hot) const {
  if (one_hot.cols() != 4) throw ModelError("predict: input must be T x 4 one-hot");
  const int T = static_cast<int>(one_hot.rows());
  std::lock_guard lock(cache_mutex_);
  auto it = bound_cache_.find(T);
  if (it == bound_cache_.end()) it = bound_cache_.emplace(T, bind(T)).first;
  Bound& b = *it->second;
  b.run(one_hot);
  return {b.graph.value(b.probs)(0, 0), b.graph.value(b.logit_pos)(0, 0)};
}

// ---- checkpoint I/O ----

namespace {

constexpr const char* kMagic = "motifdash-checkpoint";
constexpr int kVersion = 1;

std::string hex_of(double d) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(d)));
  return buf;
}

double double_of_hex(const std::string& h) {
  if (h.size() != 16) throw ModelError("corrupt checkpoint: bad hex value '" + h + "'");
  std::uint64_t bits = 0;
  for (char c : h) {
    int digit;
    if (c >= '0' && c <= '9') digit = c - '0';
    else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
    else throw ModelError("corrupt checkpoint: bad hex digit '" + std::string(1, c) + "'");
    bits = (bits << 4) | static_cast<std::uint64_t>(digit);
  }
  return std::bit_cast<double>(bits);
}

}  // namespace

void Model::save_checkpoint(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write checkpoint: " + path);
  out << kMagic << " v" << kVersion << '\n';
  out << "preset " << (config_.preset_name.empty() ? "-" : config_.preset_name) << '\n';
  out << "architecture " << ModelConfig::arch_name(config_.architecture) << '\n';
  out << "conv-layers " << config_.conv_layers << '\n';
  out << "conv-sizes " << join_int_list(config_.conv_sizes) << '\n';
  out << "conv-filter-sizes " << join_int_list(config_.conv_filter_sizes) << '\n';
  out << "pool-size " << config_.pool_size << '\n';
  out << "lstm-layers " << config_.lstm_layers << '\n';
  out << "lstm-size " << config_.lstm_size << '\n';
  {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", config_.dropout_keep);
    out << "dropout-keep " << buf << '\n';
  }
  out << "params " << params_.size() << '\n';
  for (const auto& [name, value] : params_) {
    out << "param " << name << ' ' << value.rows() << ' ' << value.cols() << '\n';
    for (Eigen::Index r = 0; r < value.rows(); ++r) {
      for (Eigen::Index c = 0; c < value.cols(); ++c) {
        if (c) out << ' ';
        out << hex_of(value(r, c));
      }
      out << '\n';
    }
  }
  out << "end\n";
}

Model Model::load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open checkpoint: " + path);
  std::string magic, version;
  in >> magic >> version;
  if (magic != kMagic) throw ModelError("checkpoint format error: bad magic string");
  if (version != "v" + std::to_string(kVersion))
    throw ModelError("checkpoint version mismatch: got '" + version + "', expected v" +
                     std::to_string(kVersion));

  auto expect_key = [&](const std::string& key) {
    std::string k;
    if (!(in >> k) || k != key)
      throw ModelError("corrupt checkpoint: expected '" + key + "'");
  };
  ModelConfig cfg;
  std::string tmp;
  expect_key("preset"); in >> tmp;
  cfg.preset_name = tmp == "-" ? "" : tmp;
  // preset names may contain spaces; re-read full line remainder
  std::string rest;
  std::getline(in, rest);
  if (!rest.empty() && rest[0] == ' ') cfg.preset_name += rest;
  expect_key("architecture"); in >> tmp;
  cfg.architecture = ModelConfig::parse_arch(tmp);
  expect_key("conv-layers"); in >> cfg.conv_layers;
  expect_key("conv-sizes"); in >> tmp;
  if (tmp != "-") cfg.conv_sizes = parse_int_list(tmp);
  expect_key("conv-filter-sizes"); in >> tmp;
  if (tmp != "-") cfg.conv_filter_sizes = parse_int_list(tmp);
  expect_key("pool-size"); in >> cfg.pool_size;
  expect_key("lstm-layers"); in >> cfg.lstm_layers;
  expect_key("lstm-size"); in >> cfg.lstm_size;
  expect_key("dropout-keep"); in >> cfg.dropout_keep;
  cfg.validate();

  Rng rng(0);
  Model m = Model::build(cfg, rng);

  std::size_t n_params = 0;
  expect_key("params"); in >> n_params;
  if (n_params != m.params_.size())
    throw ModelError("corrupt checkpoint: expected " + std::to_string(m.params_.size()) +
                     " parameter tensors, file lists " + std::to_string(n_params));
  for (std::size_t i = 0; i < n_params; ++i) {
    expect_key("param");
    std::string name;
    Eigen::Index rows, cols;
    if (!(in >> name >> rows >> cols)) throw ModelError("corrupt checkpoint: bad param header");
    auto it = m.params_.find(name);
    if (it == m.params_.end())
      throw ModelError("checkpoint shape error: unknown tensor '" + name + "'");
    if (rows != it->second.rows() || cols != it->second.cols())
      throw ModelError("checkpoint shape error: tensor '" + name + "' is " +
                       std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                       std::to_string(it->second.rows()) + "x" +
                       std::to_string(it->second.cols()));
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (!(in >> tmp)) throw ModelError("corrupt checkpoint: truncated tensor '" + name + "'");
        it->second(r, c) = double_of_hex(tmp);
      }
  }
  expect_key("end");
  return m;
}

}  // namespace motifdash::models
