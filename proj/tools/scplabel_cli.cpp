// scplabel: batch command-line front end for the scene-clustering
// pseudo-labeling pipeline. Every subcommand reads and writes files; see
// README.md for the formats.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error, 64 usage error.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scplabel/error.hpp"
#include "scplabel/io.hpp"
#include "scplabel/parallel.hpp"
#include "scplabel/stages.hpp"

namespace {

namespace st = scplabel::stages;
using scplabel::ClassId;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitUsage = 64;

std::vector<ClassId> parse_id_list(const std::string& text) {
  std::vector<ClassId> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw scplabel::ParameterError("invalid class id '" + item + "' in list '" + text + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene-clustering pseudo-labeling pipeline"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::uint64_t seed = 0;
  std::size_t threads = 1;
  auto add_common = [&](CLI::App* sub, bool with_seed) {
    if (with_seed) sub->add_option("--seed", seed, "Root seed")->capture_default_str();
    sub->add_option("--threads", threads, "Worker threads (results do not depend on it)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  };

  // synth
  st::SynthOptions synth;
  std::string class_counts;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a scene-structured synthetic dataset");
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--n-classes", synth.config.n_classes)->capture_default_str();
  synth_cmd->add_option("--class-counts", class_counts, "Comma-separated per-class counts");
  synth_cmd->add_option("--total", synth.config.total_samples)->capture_default_str();
  synth_cmd->add_option("--scene-min", synth.config.scene_min)->capture_default_str();
  synth_cmd->add_option("--scene-max", synth.config.scene_max)->capture_default_str();
  synth_cmd->add_option("--dims", synth.config.n_dims)->capture_default_str();
  synth_cmd->add_option("--class-sep", synth.config.class_sep)->capture_default_str();
  synth_cmd->add_option("--scene-sep", synth.config.scene_sep)->capture_default_str();
  synth_cmd->add_option("--distractor-std", synth.config.distractor_std)->capture_default_str();
  add_common(synth_cmd, true);

  // sample
  st::SampleOptions sample;
  auto* sample_cmd = app.add_subcommand("sample", "Under/over-sample and split a labeled dataset");
  sample_cmd->add_option("--features", sample.features)->required();
  sample_cmd->add_option("--labels", sample.labels)->required();
  sample_cmd->add_option("--n-classes", sample.n_classes, "0 infers from labels");
  sample_cmd->add_option("--undersample", sample.undersample_cap, "Per-class cap (0 = off)");
  sample_cmd->add_option("--oversample", sample.oversample_target, "Per-class target (0 = off)");
  sample_cmd->add_option("--split", sample.split_fraction, "First-split fraction (0 = off)");
  sample_cmd->add_option("--out", sample.out_dir, "Output directory")->required();
  add_common(sample_cmd, true);

  // train
  st::TrainOptions train;
  std::string train_space, class_weights;
  auto* train_cmd = app.add_subcommand("train", "Train a linear softmax classifier");
  train_cmd->add_option("--features", train.features)->required();
  train_cmd->add_option("--labels", train.labels)->required();
  train_cmd->add_option("--lr", train.config.learning_rate)->capture_default_str();
  train_cmd->add_option("--momentum", train.config.momentum)->capture_default_str();
  train_cmd->add_option("--weight-decay", train.config.weight_decay)->capture_default_str();
  train_cmd->add_option("--epochs", train.config.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", train.config.batch_size)->capture_default_str();
  train_cmd->add_option("--label-space", train_space, "Comma-separated global class ids");
  train_cmd->add_option("--class-weights", class_weights, "Comma-separated loss weights");
  train_cmd->add_option("--out", train.out, "Model file (.scpm)")->required();
  add_common(train_cmd, true);

  // predict
  st::PredictOptions predict;
  std::string predict_model, predict_space;
  double accuracy = 0.0;
  auto* predict_cmd = app.add_subcommand(
      "predict", "Write per-sample predictions from a model file or a simulated classifier");
  predict_cmd->add_option("--features", predict.features);
  auto* model_opt = predict_cmd->add_option("--model", predict_model, "Model file (.scpm)");
  auto* acc_opt = predict_cmd->add_option("--accuracy", accuracy,
                                          "Simulate a classifier of this accuracy against --labels");
  model_opt->excludes(acc_opt);
  predict_cmd->add_option("--labels", predict.labels, "Ground truth for simulation");
  predict_cmd->add_option("--label-space", predict_space, "Simulation label space");
  predict_cmd->add_flag("--probs", predict.probabilities, "Also write p0..p{C-1} columns");
  predict_cmd->add_option("--out", predict.out, "Predictions CSV (stem = model id)")->required();
  add_common(predict_cmd, true);

  // normalize
  st::NormalizeOptions normalize;
  auto* normalize_cmd = app.add_subcommand("normalize", "L2-normalize feature rows");
  normalize_cmd->add_option("--features", normalize.features)->required();
  normalize_cmd->add_option("--out", normalize.out)->required();
  add_common(normalize_cmd, false);

  // dba
  st::DbaOptions dba;
  std::string weighting = "similarity";
  auto* dba_cmd = app.add_subcommand("dba", "Database-side feature augmentation");
  dba_cmd->add_option("--features", dba.features)->required();
  dba_cmd->add_option("--k1", dba.config.k1)->capture_default_str();
  dba_cmd->add_option("--weighting", weighting)
      ->check(CLI::IsMember({"similarity", "uniform"}))
      ->capture_default_str();
  dba_cmd->add_option("--out", dba.out)->required();
  add_common(dba_cmd, false);

  // cluster
  st::ClusterOptions cluster;
  auto* cluster_cmd = app.add_subcommand("cluster", "k-means++ scene clustering and filtering");
  cluster_cmd->add_option("--features", cluster.features)->required();
  cluster_cmd->add_option("--k", cluster.config.k)->capture_default_str();
  cluster_cmd->add_option("--max-iters", cluster.config.max_iters)->capture_default_str();
  cluster_cmd->add_option("--tol", cluster.config.tol)->capture_default_str();
  cluster_cmd->add_option("--restarts", cluster.config.n_restarts)->capture_default_str();
  cluster_cmd->add_option("--quantile", cluster.filter.quantile)->capture_default_str();
  cluster_cmd->add_option("--min-size", cluster.filter.min_size)->capture_default_str();
  cluster_cmd->add_option("--out", cluster.out_dir, "Output directory")->required();
  add_common(cluster_cmd, true);

  // metrics
  st::MetricsOptions metrics;
  auto* metrics_cmd = app.add_subcommand("metrics", "Inertia, silhouette and Calinski-Harabasz");
  metrics_cmd->add_option("--features", metrics.features)->required();
  metrics_cmd->add_option("--clusters", metrics.clusters)->required();
  metrics_cmd->add_option("--out", metrics.out, "JSON output")->required();
  add_common(metrics_cmd, false);

  // label
  st::LabelOptions label;
  auto* label_cmd = app.add_subcommand("label", "Ensemble pseudo-labels per cluster");
  label_cmd->add_option("--clusters", label.clusters)->required();
  label_cmd->add_option("--preds", label.preds, "Predictions CSVs in ensemble order")
      ->required()
      ->expected(1, -1);
  label_cmd->add_option("--fallback", label.fallback, "Model id for discarded clusters");
  label_cmd->add_option("--out", label.out)->required();
  add_common(label_cmd, false);

  // eval
  st::EvalOptions eval;
  std::string train_labels;
  auto* eval_cmd = app.add_subcommand("eval", "Accuracy, confusion and class-bias report");
  eval_cmd->add_option("--preds", eval.predictions, "Predictions or pseudo-labels CSV")->required();
  eval_cmd->add_option("--labels", eval.truth, "Ground-truth labels CSV")->required();
  eval_cmd->add_option("--train-labels", train_labels, "Training labels for class shares");
  eval_cmd->add_option("--n-classes", eval.n_classes, "0 infers from labels");
  eval_cmd->add_option("--out", eval.out_dir, "Output directory")->required();
  add_common(eval_cmd, false);

  // pipeline
  std::string config_path, pipeline_out;
  std::optional<std::size_t> pipeline_threads;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "Run the whole flow from a JSON config");
  pipeline_cmd->add_option("--config", config_path)->required();
  pipeline_cmd->add_option("--out", pipeline_out, "Overrides the config's output directory");
  pipeline_cmd->add_option("--threads", pipeline_threads, "Overrides the config's thread count")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    scplabel::set_num_threads(threads);
    auto& log = std::cerr;
    if (*synth_cmd) {
      synth.root_seed = seed;
      if (!class_counts.empty()) {
        for (auto c : parse_id_list(class_counts)) {
          if (c < 0) throw scplabel::ParameterError("class counts must be non-negative");
          synth.config.class_counts.push_back(static_cast<std::size_t>(c));
        }
      }
      st::run_synth(synth, log);
    } else if (*sample_cmd) {
      sample.root_seed = seed;
      st::run_sample(sample, log);
    } else if (*train_cmd) {
      train.root_seed = seed;
      train.label_space = parse_id_list(train_space);
      std::stringstream ss(class_weights);
      for (std::string w; std::getline(ss, w, ',');) train.class_weights.push_back(std::stod(w));
      st::run_train(train, log);
    } else if (*predict_cmd) {
      predict.root_seed = seed;
      if (!predict_model.empty()) predict.model = predict_model;
      if (*acc_opt) predict.accuracy = accuracy;
      predict.label_space = parse_id_list(predict_space);
      if (predict.model && predict.features.empty()) {
        throw scplabel::ParameterError("predict: --model needs --features");
      }
      if (predict.accuracy && predict.labels.empty()) {
        throw scplabel::ParameterError("predict: --accuracy needs --labels");
      }
      st::run_predict(predict, log);
    } else if (*normalize_cmd) {
      st::run_normalize(normalize, log);
    } else if (*dba_cmd) {
      dba.config.weighting = scplabel::parse_dba_weighting(weighting);
      st::run_dba(dba, log);
    } else if (*cluster_cmd) {
      cluster.root_seed = seed;
      st::run_cluster(cluster, log);
    } else if (*metrics_cmd) {
      st::run_metrics(metrics, log);
    } else if (*label_cmd) {
      st::run_label(label, log);
    } else if (*eval_cmd) {
      if (!train_labels.empty()) eval.train_labels = train_labels;
      st::run_eval(eval, log);
    } else if (*pipeline_cmd) {
      st::Json config;
      try {
        config = st::Json::parse(scplabel::io::read_text(config_path));
      } catch (const nlohmann::json::parse_error& e) {
        throw scplabel::ValidationError("'" + config_path + "': " + e.what());
      }
      std::optional<std::filesystem::path> out;
      if (!pipeline_out.empty()) out = pipeline_out;
      st::run_pipeline(config, pipeline_threads, out, log);
    }
  } catch (const scplabel::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const scplabel::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: invalid number: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
