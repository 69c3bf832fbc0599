#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "motifdash/dashboard.hpp"
#include "motifdash/data.hpp"
#include "motifdash/interpret.hpp"
#include "motifdash/models.hpp"
#include "motifdash/motif.hpp"
#include "motifdash/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace motifdash;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonOpts {
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
};

fs::path resolve_out(const CommonOpts& opts, const std::string& command) {
  if (!opts.out_dir.empty()) return opts.out_dir;
  if (const char* root = std::getenv("MOTIFDASH_OUT")) return fs::path(root) / command;
  return fs::path("runs") / command;
}

fs::path prepare_run_dir(const CommonOpts& opts, const std::string& command,
                         const json& snapshot) {
  fs::path dir = resolve_out(opts, command);
  fs::create_directories(dir);
  json j = snapshot;
  j["command"] = command;
  j["seed"] = opts.seed;
  std::ofstream(dir / "run-config.json") << j.dump(2) << "\n";
  return dir;
}

models::ModelConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw models::ModelError("cannot open model config: " + path);
  json j = json::parse(in);
  models::ModelConfig c;
  c.architecture = models::ModelConfig::parse_arch(j.at("architecture").get<std::string>());
  c.conv_layers = j.value("conv-layers", 0);
  c.conv_sizes = j.value("conv-sizes", std::vector<int>{});
  c.conv_filter_sizes = j.value("conv-filter-sizes", std::vector<int>{});
  c.pool_size = j.value("pool-size", 0);
  c.lstm_layers = j.value("lstm-layers", 0);
  c.lstm_size = j.value("lstm-size", 0);
  c.dropout_keep = j.value("dropout-keep", 0.5);
  c.preset_name = j.value("preset-name", std::string("custom"));
  c.validate();
  return c;
}

models::ModelConfig resolve_model_config(const std::string& preset,
                                         const std::string& config_path) {
  if (!config_path.empty()) return config_from_json_file(config_path);
  return models::ModelConfig::preset(preset);
}

std::vector<data::Record> positives(const data::LabeledDataset& ds) {
  std::vector<data::Record> out;
  for (const auto& r : ds.records)
    if (r.label > 0) out.push_back(r);
  return out;
}

// best average log-likelihood window of a PWM over the sequence
dashboard::Annotation best_pwm_hit(const Pwm& p, const std::string& seq) {
  const int w = p.width();
  const int T = static_cast<int>(seq.size());
  int best_start = 0;
  double best = -1e300;
  for (int s = 0; s + w <= T; ++s) {
    double ll = 0.0;
    for (int i = 0; i < w; ++i)
      ll += std::log(std::max(p.probs(i, data::base_index(seq[static_cast<std::size_t>(s + i)])),
                              1e-9));
    if (ll > best) {
      best = ll;
      best_start = s;
    }
  }
  return {p.name, best_start, w};
}

int run_synth(const CommonOpts& opts, const std::string& spec_path) {
  data::SyntheticSpec spec = data::load_synthetic_spec(spec_path);
  fs::path dir = prepare_run_dir(opts, "synth", {{"synthetic-spec", spec_path}});
  auto [train, test] = data::generate_synthetic(spec);
  data::write_dataset(train, (dir / "train.tsv").string());
  data::write_dataset(test, (dir / "test.tsv").string());
  json manifest{{"train-records", train.records.size()},
                {"test-records", test.records.size()},
                {"sequence-length", spec.sequence_length},
                {"planted-pwm", spec.planted_pwm.name},
                {"seed", spec.seed}};
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
  std::cout << "wrote " << train.records.size() << " train and " << test.records.size()
            << " test records to " << dir << "\n";
  return 0;
}

int run_train(const CommonOpts& opts, const std::string& data_path,
              const std::string& preset, const std::string& config_path,
              std::optional<int> epochs, std::optional<int> batch_size,
              const std::string& resume_path) {
  data::LabeledDataset ds = data::load_dataset(data_path);
  fs::path dir = prepare_run_dir(
      opts, "train", {{"data", data_path}, {"preset", preset}, {"config", config_path}});

  training::TrainConfig cfg;
  cfg.seed = opts.seed;
  if (epochs) cfg.max_epochs = *epochs;
  if (batch_size) cfg.batch_size = *batch_size;

  models::Model model;
  if (!resume_path.empty()) {
    model = models::Model::load_checkpoint(resume_path);
  } else {
    Rng rng(opts.seed);
    model = models::Model::build(resolve_model_config(preset, config_path), rng);
  }

  training::TrainResult result = training::train(model, ds, cfg);
  model.save_checkpoint((dir / "checkpoint.txt").string());
  std::ofstream(dir / "metrics.json") << training::metrics_json(result) << "\n";
  const auto& last = result.history.back();
  std::cout << "trained " << result.history.size() << " epochs; final train loss "
            << last.train_loss << ", val loss " << last.val_loss << "\n"
            << "checkpoint: " << (dir / "checkpoint.txt") << "\n";
  return 0;
}

int run_evaluate(const CommonOpts& opts, const std::string& checkpoint,
                 const std::string& data_path) {
  models::Model model = models::Model::load_checkpoint(checkpoint);
  data::LabeledDataset ds = data::load_dataset(data_path);
  fs::path dir =
      prepare_run_dir(opts, "evaluate", {{"checkpoint", checkpoint}, {"data", data_path}});
  training::EvalReport report = training::evaluate_auc(model, ds);
  json j{{"auc", report.auc}};
  json roc = json::array();
  for (auto& [fpr, tpr] : report.roc_points) roc.push_back({fpr, tpr});
  j["roc"] = roc;
  json scores = json::array();
  for (std::size_t i = 0; i < report.ids.size(); ++i)
    scores.push_back({{"id", report.ids[i]},
                      {"label", report.labels[i]},
                      {"score", report.scores[i]}});
  j["scores"] = scores;
  std::ofstream(dir / "evaluation.json") << j.dump(2) << "\n";
  std::cout << "AUC " << report.auc << " on " << report.ids.size() << " sequences\n";
  return 0;
}

int run_dashboard(const CommonOpts& opts, const std::vector<std::string>& checkpoints,
                  const std::string& data_path, const std::string& sequence_id,
                  const std::string& known_motifs_path) {
  if (checkpoints.empty() || checkpoints.size() > 3)
    throw CLI::ValidationError("--checkpoint", "expects between 1 and 3 checkpoints");
  data::LabeledDataset ds = data::load_dataset(data_path);
  const data::Record* rec = nullptr;
  for (const auto& r : ds.records)
    if (r.id == sequence_id) rec = &r;
  if (!rec) {
    std::string available;
    for (std::size_t i = 0; i < std::min<std::size_t>(8, ds.records.size()); ++i)
      available += (i ? ", " : "") + ds.records[i].id;
    throw data::DataError("unknown sequence id '" + sequence_id +
                          "'; available ids include: " + available);
  }
  fs::path dir = prepare_run_dir(opts, "dashboard",
                                 {{"data", data_path}, {"sequence-id", sequence_id}});

  dashboard::DashboardSpec spec;
  spec.title = "Deep model dashboard: " + sequence_id;
  spec.sequence_id = rec->id;
  spec.sequence = rec->sequence.chars;
  const Matrix x = data::one_hot_encode(rec->sequence);

  for (const auto& path : checkpoints) {
    models::Model model = models::Model::load_checkpoint(path);
    dashboard::ModelViz viz;
    viz.model_name = model.config().preset_name.empty()
                         ? models::ModelConfig::arch_name(model.config().architecture)
                         : model.config().preset_name;
    viz.score = model.predict(x).prob_positive;
    viz.saliency = interpret::saliency_map(model, x).magnitudes;
    if (model.config().architecture != models::ModelConfig::Arch::kCnn) {
      viz.has_temporal = true;
      auto ts = interpret::temporal_output_scores(model, x);
      viz.temporal_forward = std::move(ts.forward);
      viz.temporal_backward = std::move(ts.backward);
    }
    interpret::ClassOptConfig opt_cfg;
    opt_cfg.seed = opts.seed;
    auto opt = interpret::class_optimize(model, rec->sequence.length(), opt_cfg);
    Pwm logo{opt.display, viz.model_name, 0.0};
    viz.class_opt_logo = std::move(logo);
    spec.models.push_back(std::move(viz));
  }

  if (!known_motifs_path.empty()) {
    for (const Pwm& p : motif::read_meme_minimal(known_motifs_path))
      spec.annotations.push_back(best_pwm_hit(p, spec.sequence));
  }

  dashboard::render_dashboard(spec, (dir / "dashboard.html").string());
  std::cout << "wrote " << (dir / "dashboard.html") << "\n";
  return 0;
}

int run_motifs(const CommonOpts& opts, const std::string& checkpoint,
               const std::string& data_path, const std::string& method,
               const std::string& compare_against) {
  models::Model model = models::Model::load_checkpoint(checkpoint);
  data::LabeledDataset ds = data::load_dataset(data_path);
  fs::path dir = prepare_run_dir(
      opts, "motifs", {{"checkpoint", checkpoint}, {"data", data_path}, {"method", method}});

  std::vector<Pwm> pwms;
  if (method == "class-opt") {
    interpret::ClassOptConfig cfg;
    cfg.seed = opts.seed;
    auto opt = interpret::class_optimize(model, motif::kMotifWidth, cfg);
    pwms.push_back(Pwm{opt.display, "class_opt", 0.0});
  } else {
    std::vector<std::string> windows;
    for (const auto& rec : positives(ds)) {
      const Matrix x = data::one_hot_encode(rec.sequence);
      if (method == "saliency") {
        auto sal = interpret::saliency_map(model, x);
        windows.push_back(motif::extract_saliency_motif(sal, rec.sequence).subsequence);
      } else if (method == "temporal") {
        auto ts = interpret::temporal_output_scores(model, x);
        auto m = motif::extract_temporal_motif(ts, rec.sequence);
        if (!m.fallback) windows.push_back(m.subsequence);
      } else if (method == "conv-activation") {
        windows.push_back(interpret::conv_activation_motif(model, x).subsequence);
      } else {
        throw CLI::ValidationError("--method", "unknown method '" + method + "'");
      }
    }
    if (windows.empty()) throw data::DataError("no motif windows extracted");
    pwms.push_back(motif::build_pwm(windows, 0.01, method));
  }

  motif::write_meme_minimal(pwms, (dir / "motifs.meme").string());
  std::cout << "wrote " << pwms.size() << " motif(s) to " << (dir / "motifs.meme") << "\n";

  if (!compare_against.empty()) {
    std::vector<Pwm> known = motif::read_meme_minimal(compare_against);
    Rng rng(opts.seed);
    std::ofstream report(dir / "matches.jsonl");
    for (const Pwm& q : pwms)
      for (const Pwm& t : known) {
        motif::MotifMatch m = motif::compare_motifs(q, t, 500, 0.05, rng);
        report << motif::match_json_line(m) << "\n";
        std::cout << q.name << " vs " << t.name << ": similarity " << m.similarity
                  << ", p " << m.p_value << (m.is_match ? " (match)" : "") << "\n";
      }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DNA binding-site model training, interpretation and motif toolkit"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_option("--out", common.out_dir, "run output directory")
      ->envname("MOTIFDASH_OUT_DIR");
  app.add_option("--seed", common.seed, "random seed");
  app.add_option("--threads", common.threads, "worker cap (current pipeline is sequential)");

  auto* synth = app.add_subcommand("synth", "generate a synthetic planted-motif dataset");
  std::string spec_path;
  synth->add_option("--synthetic-spec", spec_path, "JSON spec file")->required();

  auto* train = app.add_subcommand("train", "train a model on a TSV dataset");
  std::string data_path, preset, config_path, resume_path;
  std::optional<int> epochs, batch_size;
  train->add_option("--data", data_path, "training TSV")->required();
  train->add_option("--preset", preset, "model preset name");
  train->add_option("--config", config_path, "model config JSON (overrides preset)");
  train->add_option("--epochs", epochs, "max training epochs");
  train->add_option("--batch-size", batch_size, "minibatch size");
  train->add_option("--resume", resume_path, "checkpoint to resume from");

  auto* evaluate = app.add_subcommand("evaluate", "report AUC of a checkpoint on a dataset");
  std::string eval_ckpt, eval_data;
  evaluate->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
  evaluate->add_option("--data", eval_data, "evaluation TSV")->required();

  auto* dash = app.add_subcommand("dashboard", "render the visualization dashboard");
  std::vector<std::string> dash_ckpts;
  std::string dash_data, sequence_id, known_motifs;
  dash->add_option("--checkpoint", dash_ckpts, "model checkpoints (up to 3)")->required();
  dash->add_option("--data", dash_data, "dataset TSV")->required();
  dash->add_option("--sequence-id", sequence_id, "sequence to visualize")->required();
  dash->add_option("--known-motifs", known_motifs, "MEME file of motifs to annotate");

  auto* motifs = app.add_subcommand("motifs", "extract motifs from a trained model");
  std::string motif_ckpt, motif_data, method = "saliency", compare_against;
  motifs->add_option("--checkpoint", motif_ckpt, "model checkpoint")->required();
  motifs->add_option("--data", motif_data, "dataset TSV (positives are used)")->required();
  motifs->add_option("--method", method,
                     "saliency | temporal | class-opt | conv-activation");
  motifs->add_option("--compare-against", compare_against, "MEME file to match against");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth) return run_synth(common, spec_path);
    if (*train) {
      if (preset.empty() && config_path.empty()) {
        std::cerr << "error: --preset or --config required; valid presets:";
        for (const auto& n : models::ModelConfig::preset_names()) std::cerr << " '" << n << "'";
        std::cerr << "\n";
        return kExitUsage;
      }
      if (!preset.empty() && config_path.empty()) {
        const auto names = models::ModelConfig::preset_names();
        if (std::find(names.begin(), names.end(), preset) == names.end()) {
          std::cerr << "error: unknown preset '" << preset << "'; valid presets:";
          for (const auto& n : names) std::cerr << " '" << n << "'";
          std::cerr << "\n";
          return kExitUsage;
        }
      }
      return run_train(common, data_path, preset, config_path, epochs, batch_size,
                       resume_path);
    }
    if (*evaluate) return run_evaluate(common, eval_ckpt, eval_data);
    if (*dash) return run_dashboard(common, dash_ckpts, dash_data, sequence_id, known_motifs);
    if (*motifs) return run_motifs(common, motif_ckpt, motif_data, method, compare_against);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const data::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const models::ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const motif::MotifError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
