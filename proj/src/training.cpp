#include "motifdash/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace motifdash::training {

namespace {
constexpr double kProbClamp = 1e-12;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw TrainingError("batch-size must be >= 1");
  if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0))
    throw TrainingError("adam betas must be in (0,1)");
  if (learning_rate <= 0.0) throw TrainingError("learning rate must be > 0");
  if (max_epochs < 1) throw TrainingError("max-epochs must be >= 1");
}

double nll_loss(const Matrix& probabilities, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(probabilities.rows()) != labels.size())
    throw TrainingError("nll_loss: batch size mismatch");
  double total = 0.0;
  for (Eigen::Index r = 0; r < probabilities.rows(); ++r) {
    const double row_sum = probabilities.row(r).sum();
    if (std::abs(row_sum - 1.0) > 1e-6)
      throw TrainingError("nll_loss: row " + std::to_string(r + 1) +
                          " is not a probability distribution (sum " +
                          std::to_string(row_sum) + ")");
    const int cls = labels[static_cast<std::size_t>(r)] > 0 ? 0 : 1;
    total += -std::log(std::max(probabilities(r, cls), kProbClamp));
  }
  return total / static_cast<double>(probabilities.rows());
}

AdamState AdamState::init(const std::map<std::string, Matrix>& params) {
  AdamState s;
  for (const auto& [name, value] : params) {
    s.m[name] = Matrix::Zero(value.rows(), value.cols());
    s.v[name] = Matrix::Zero(value.rows(), value.cols());
  }
  return s;
}

void adam_step(std::map<std::string, Matrix>& params,
               const std::map<std::string, Matrix>& grads, AdamState& state,
               const TrainConfig& cfg) {
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (auto& [name, p] : params) {
    const Matrix& g = grads.at(name);
    Matrix& m = state.m.at(name);
    Matrix& v = state.v.at(name);
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    const Matrix m_hat = m / bc1;
    const Matrix v_hat = v / bc2;
    p.array() -= cfg.learning_rate * m_hat.array() / (v_hat.array().sqrt() + cfg.epsilon);
  }
}

namespace {

Matrix label_onehot(int label) {
  Matrix l(1, 2);
  if (label > 0)
    l << 1.0, 0.0;
  else
    l << 0.0, 1.0;
  return l;
}

double inference_nll(const models::Model& model, const data::LabeledDataset& ds,
                     const std::vector<std::size_t>& idx) {
  double total = 0.0;
  for (std::size_t i : idx) {
    const auto& rec = ds.records[i];
    const auto pred = model.predict(data::one_hot_encode(rec.sequence));
    const double p_true = rec.label > 0 ? pred.prob_positive : 1.0 - pred.prob_positive;
    total += -std::log(std::max(p_true, kProbClamp));
  }
  return total / static_cast<double>(idx.size());
}

}  // namespace

TrainResult train(models::Model& model, const data::LabeledDataset& train_set,
                  const TrainConfig& cfg) {
  AdamState state = AdamState::init(model.parameters());
  return train(model, train_set, cfg, state);
}

TrainResult train(models::Model& model, const data::LabeledDataset& train_set,
                  const TrainConfig& cfg, AdamState& state) {
  cfg.validate();
  if (train_set.records.empty()) throw TrainingError("train: empty dataset");
  const int min_len = model.min_length();
  for (const auto& rec : train_set.records)
    if (rec.sequence.length() < min_len)
      throw TrainingError("train: sequence '" + rec.id + "' shorter than model minimum " +
                          std::to_string(min_len));

  Rng rng(cfg.seed);

  // seeded shuffle, then hold out the trailing 10% for validation
  std::vector<std::size_t> order(train_set.records.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_val = order.size() / 10;
  std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(n_val),
                                   order.end());
  std::vector<std::size_t> fit_idx(order.begin(),
                                   order.end() - static_cast<std::ptrdiff_t>(n_val));

  auto params = model.parameters();
  std::map<int, std::unique_ptr<models::Model::Bound>> bounds;
  auto bound_for = [&](int T) -> models::Model::Bound& {
    auto it = bounds.find(T);
    if (it == bounds.end()) it = bounds.emplace(T, model.bind(T)).first;
    return *it->second;
  };
  auto sync_all = [&] {
    for (auto& [T, b] : bounds) b->sync_params(params);
  };

  nn::DropoutSpec drop{model.config().dropout_keep, true};

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  auto best_params = params;
  int stale = 0;

  std::map<std::string, Matrix> grads;
  for (const auto& [name, value] : params) grads[name] = Matrix::Zero(value.rows(), value.cols());

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(fit_idx.begin(), fit_idx.end(), rng);

    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < fit_idx.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(fit_idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
      for (auto& [name, g] : grads) g.setZero();
      double batch_loss = 0.0;
      for (std::size_t i = start; i < stop; ++i) {
        const auto& rec = train_set.records[fit_idx[i]];
        const Matrix x = data::one_hot_encode(rec.sequence);
        auto& b = bound_for(rec.sequence.length());
        const Matrix mask = nn::dropout_mask(1, b.feature_dim, drop, rng);
        b.run(x, mask, label_onehot(rec.label));
        b.graph.backward(b.loss);
        batch_loss += b.graph.value(b.loss)(0, 0);
        for (auto& [name, g] : grads) g += b.graph.adjoint(b.param_nodes.at(name));
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (auto& [name, g] : grads) g *= scale;
      epoch_loss += batch_loss;
      seen += stop - start;
      adam_step(params, grads, state, cfg);
      sync_all();
    }
    epoch_loss /= static_cast<double>(seen);

    model.set_parameters(params);
    const double val_loss =
        val_idx.empty() ? epoch_loss : inference_nll(model, train_set, val_idx);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back({epoch, epoch_loss, val_loss, secs});

    if (val_loss < best_val - 1e-12) {
      best_val = val_loss;
      best_params = params;
      stale = 0;
    } else if (++stale >= cfg.early_stop_patience && !val_idx.empty()) {
      break;
    }
  }

  model.set_parameters(best_params);
  return result;
}

double auc_from_scores(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw TrainingError("auc: size mismatch");
  std::size_t n_pos = 0, n_neg = 0;
  for (int l : labels) (l > 0 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw TrainingError("auc: need at least one positive and one negative");

  // Mann-Whitney via midranks; exact in floating point for these sizes
  // (rank sums are multiples of 0.5 well below 2^53).
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] > 0) rank_sum_pos += midrank;
    i = j;
  }
  const double u = rank_sum_pos - static_cast<double>(n_pos) *
                                      (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<std::pair<double, double>> roc_curve(const std::vector<double>& scores,
                                                 const std::vector<int>& labels) {
  std::size_t n_pos = 0, n_neg = 0;
  for (int l : labels) (l > 0 ? n_pos : n_neg)++;
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::pair<double, double>> roc{{0.0, 0.0}};
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) (labels[order[k]] > 0 ? tp : fp)++;
    roc.emplace_back(static_cast<double>(fp) / static_cast<double>(n_neg),
                     static_cast<double>(tp) / static_cast<double>(n_pos));
    i = j;
  }
  return roc;
}

EvalReport evaluate_auc(const models::Model& model, const data::LabeledDataset& test_set) {
  EvalReport report;
  for (const auto& rec : test_set.records) {
    report.ids.push_back(rec.id);
    report.labels.push_back(rec.label);
    report.scores.push_back(model.predict(data::one_hot_encode(rec.sequence)).prob_positive);
  }
  report.auc = auc_from_scores(report.scores, report.labels);
  report.roc_points = roc_curve(report.scores, report.labels);
  return report;
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // continued fraction (modified Lentz)
  auto betacf = [](double a_, double b_, double x_) {
    const int max_iter = 500;
    const double eps = 1e-15, fpmin = 1e-300;
    const double qab = a_ + b_, qap = a_ + 1.0, qam = a_ - 1.0;
    double c = 1.0, d = 1.0 - qab * x_ / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
      const double m2 = 2.0 * m;
      double aa = m * (b_ - m) * x_ / ((qam + m2) * (a_ + m2));
      d = 1.0 + aa * d;
      if (std::abs(d) < fpmin) d = fpmin;
      c = 1.0 + aa / c;
      if (std::abs(c) < fpmin) c = fpmin;
      d = 1.0 / d;
      h *= d * c;
      aa = -(a_ + m) * (qab + m) * x_ / ((a_ + m2) * (qap + m2));
      d = 1.0 + aa * d;
      if (std::abs(d) < fpmin) d = fpmin;
      c = 1.0 + aa / c;
      if (std::abs(c) < fpmin) c = fpmin;
      d = 1.0 / d;
      const double del = d * c;
      h *= del;
      if (std::abs(del - 1.0) < eps) break;
    }
    return h;
  };
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  if (x < (a + 1.0) / (a + b + 2.0))
    return std::exp(ln_front) * betacf(a, b, x) / a;
  return 1.0 - std::exp(std::lgamma(a + b) - std::lgamma(b) - std::lgamma(a) +
                        b * std::log(1.0 - x) + a * std::log(x)) *
                   betacf(b, a, 1.0 - x) / b;
}

TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw TrainingError("paired_ttest: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw TrainingError("paired_ttest: need at least 2 paired observations");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTestResult res;
  if (sd == 0.0) {
    if (mean == 0.0) {
      res.t = 0.0;
      res.p = 1.0;
    } else {
      res.t = mean > 0 ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
      res.p = std::numeric_limits<double>::min();
      res.degenerate = true;
    }
    return res;
  }
  res.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const double df = static_cast<double>(n - 1);
  res.p = incomplete_beta(df / 2.0, 0.5, df / (df + res.t * res.t));
  return res;
}

std::string metrics_json(const TrainResult& result) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : result.history) {
    j.push_back({{"epoch", e.epoch},
                 {"train-loss", e.train_loss},
                 {"val-loss", e.val_loss},
                 {"wall-seconds", e.wall_seconds}});
  }
  return j.dump(2);
}

}  // namespace motifdash::training
