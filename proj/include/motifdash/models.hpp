#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "motifdash/autodiff.hpp"
#include "motifdash/matrix.hpp"
#include "motifdash/nn.hpp"

namespace motifdash::models {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  enum class Arch { kCnn, kRnn, kCnnRnn };

  Arch architecture = Arch::kCnn;
  int conv_layers = 0;
  std::vector<int> conv_sizes;         // n_out per conv layer
  std::vector<int> conv_filter_sizes;  // k per conv layer
  int pool_size = 0;                   // 0 = no pooling between layers
  int lstm_layers = 0;
  int lstm_size = 0;                   // d
  double dropout_keep = 0.5;
  std::string preset_name;

  void validate() const;
  static ModelConfig preset(const std::string& name);
  static std::vector<std::string> preset_names();
  static std::string arch_name(Arch a);
  static Arch parse_arch(const std::string& s);
};

// A trained/trainable model: config plus named parameter tensors. The
// computation graph is rebuilt (and cached) per sequence length; the
// output is a 2-way softmax with class order (positive, negative).
class Model {
 public:
  struct Bound {
    autodiff::Graph graph;
    autodiff::NodeId input;      // T x 4
    autodiff::NodeId mask;       // 1 x feature_dim dropout mask
    autodiff::NodeId label;      // 1 x 2 one-hot of the true class
    autodiff::NodeId logits;     // 1 x 2
    autodiff::NodeId logit_pos;  // 1 x 1 pre-softmax positive score
    autodiff::NodeId probs;      // 1 x 2
    autodiff::NodeId loss;       // 1 x 1 negative log-likelihood
    autodiff::NodeId first_conv; // first conv layer post-ReLU activation (invalid if none)
    std::map<std::string, autodiff::NodeId> param_nodes;
    int T = 0;
    int feature_dim = 0;

    // forward with explicit dropout mask and label one-hot
    void run(const Matrix& x, const Matrix& mask_v, const Matrix& label_onehot);
    // inference-mode forward (mask of ones, dummy label)
    void run(const Matrix& x);
    void sync_params(const std::map<std::string, Matrix>& params);
  };

  struct Prediction {
    double prob_positive = 0.0;
    double logit_positive = 0.0;
  };

  Model() = default;
  Model(const Model& o) : config_(o.config_), params_(o.params_) {}
  Model(Model&& o) noexcept : config_(std::move(o.config_)), params_(std::move(o.params_)) {}
  Model& operator=(const Model& o);
  Model& operator=(Model&& o) noexcept;

  static Model build(const ModelConfig& config, Rng& rng);

  const ModelConfig& config() const { return config_; }
  const std::map<std::string, Matrix>& parameters() const { return params_; }
  // Mutation invalidates cached graphs.
  void set_parameters(std::map<std::string, Matrix> params);

  std::size_t parameter_count() const;
  // Minimum admissible sequence length (largest filter width for
  // conv-bearing models, 1 otherwise).
  int min_length() const;

  // Fresh graph for length T with current parameter values.
  std::unique_ptr<Bound> bind(int T) const;

  // Inference-mode scoring; deterministic, thread-safe (serialized on an
  // internal cache lock).
  Prediction predict(const Matrix& one_hot) const;

  void save_checkpoint(const std::string& path) const;
  static Model load_checkpoint(const std::string& path);

 private:
  ModelConfig config_;
  std::map<std::string, Matrix> params_;

  mutable std::mutex cache_mutex_;
  mutable std::map<int, std::unique_ptr<Bound>> bound_cache_;
};

}  // namespace motifdash::models
