#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "motifdash/data.hpp"
#include "motifdash/matrix.hpp"
#include "motifdash/models.hpp"

namespace motifdash::training {

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int batch_size = 256;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_epochs = 30;
  int early_stop_patience = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdamState {
  std::map<std::string, Matrix> m;
  std::map<std::string, Matrix> v;
  long t = 0;

  static AdamState init(const std::map<std::string, Matrix>& params);
};

// Mean over the batch of -log p(true class); probabilities clamped at
// 1e-12 before the log. labels are +1/-1, class order (positive, negative).
double nll_loss(const Matrix& probabilities, const std::vector<int>& labels);

// Standard bias-corrected Adam update, in place.
void adam_step(std::map<std::string, Matrix>& params,
               const std::map<std::string, Matrix>& grads, AdamState& state,
               const TrainConfig& cfg);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
};

// Minibatch NLL training with Adam and a seeded per-epoch shuffle.
// 10% of the records are held out for validation/early stopping; the
// best-validation parameters are restored on return. Resumable via a
// caller-kept AdamState.
TrainResult train(models::Model& model, const data::LabeledDataset& train_set,
                  const TrainConfig& cfg);
TrainResult train(models::Model& model, const data::LabeledDataset& train_set,
                  const TrainConfig& cfg, AdamState& state);

struct EvalReport {
  double auc = 0.0;
  std::vector<std::pair<double, double>> roc_points;  // (fpr, tpr)
  std::vector<std::string> ids;
  std::vector<double> scores;  // prob-positive per sequence, dataset order
  std::vector<int> labels;
};

// AUC in Mann-Whitney form (ties half credit), plus the ROC polyline.
EvalReport evaluate_auc(const models::Model& model, const data::LabeledDataset& test_set);

// Same statistic from raw score/label arrays.
double auc_from_scores(const std::vector<double>& scores, const std::vector<int>& labels);
std::vector<std::pair<double, double>> roc_curve(const std::vector<double>& scores,
                                                 const std::vector<int>& labels);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  bool degenerate = false;  // zero variance of nonzero differences
};

// Two-tailed paired t-test on two equal-length lists.
TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b);

// Regularized incomplete beta I_x(a,b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

std::string metrics_json(const TrainResult& result);

}  // namespace motifdash::training
