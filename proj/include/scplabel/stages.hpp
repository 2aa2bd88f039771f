#pragma once

// File-to-file pipeline stages. The command-line tool maps one subcommand
// onto each run_* function, and run_pipeline chains the same functions, so
// a pipeline run and the equivalent sequence of subcommands produce the same
// bytes.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "scplabel/classifier.hpp"
#include "scplabel/clustering.hpp"
#include "scplabel/features.hpp"
#include "scplabel/synthgen.hpp"

namespace scplabel::stages {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// 16-hex-digit FNV-1a hash of the compact JSON dump.
std::string config_hash(const Json& config);

/// Writes "[stage] seed=<seed> config_hash=<hash>" to `log`.
void log_stage(std::ostream& log, const std::string& stage, Seed seed, const Json& config);

struct SynthOptions {
  SynthConfig config;  // config.seed is ignored; derived from root_seed
  Seed root_seed = 0;
  fs::path out_dir;
};
/// Writes features.scpf, labels.csv and scenes.csv into out_dir.
void run_synth(const SynthOptions& opts, std::ostream& log);

struct SampleOptions {
  fs::path features;
  fs::path labels;
  std::size_t n_classes = 0;  // 0: largest label + 1
  std::size_t undersample_cap = 0;     // 0: skip
  std::size_t oversample_target = 0;   // 0: skip
  double split_fraction = 0.0;         // 0: no split
  Seed root_seed = 0;
  fs::path out_dir;
};
/// Writes sampled.scpf/sampled_labels.csv, or with a split
/// train.scpf/train_labels.csv and holdout.scpf/holdout_labels.csv.
void run_sample(const SampleOptions& opts, std::ostream& log);

struct TrainOptions {
  fs::path features;
  fs::path labels;
  TrainConfig config;  // config.seed is ignored; derived from root_seed
  std::vector<ClassId> label_space;  // empty: 0..max label
  std::vector<double> class_weights;
  Seed root_seed = 0;
  fs::path out;  // .scpm
};
void run_train(const TrainOptions& opts, std::ostream& log);

struct PredictOptions {
  fs::path features;
  fs::path out;  // predictions CSV; the file stem is the model id
  // Exactly one of:
  std::optional<fs::path> model;   // SCPM model file
  std::optional<double> accuracy;  // simulate a classifier against `labels`
  fs::path labels;
  std::vector<ClassId> label_space;  // simulation label space; empty: 0..max label
  bool probabilities = false;
  Seed root_seed = 0;
};
void run_predict(const PredictOptions& opts, std::ostream& log);

struct NormalizeOptions {
  fs::path features;
  fs::path out;
};
void run_normalize(const NormalizeOptions& opts, std::ostream& log);

struct DbaOptions {
  fs::path features;
  fs::path out;
  DbaConfig config;
};
void run_dba(const DbaOptions& opts, std::ostream& log);

struct ClusterOptions {
  fs::path features;
  ClusteringConfig config;  // config.seed is ignored; derived from root_seed
  FilterPolicy filter;
  Seed root_seed = 0;
  fs::path out_dir;
};
/// Writes clusters.csv and the clusters.json metrics sidecar.
void run_cluster(const ClusterOptions& opts, std::ostream& log);

/// Metrics sidecar for a clustering of `m`.
Json clustering_metrics(const FeatureMatrix& m, const Clustering& c);

struct MetricsOptions {
  fs::path features;
  fs::path clusters;
  fs::path out;  // JSON
};
void run_metrics(const MetricsOptions& opts, std::ostream& log);

struct LabelOptions {
  fs::path clusters;
  std::vector<fs::path> preds;  // ensemble order
  std::string fallback;         // empty: first model
  fs::path out;
};
void run_label(const LabelOptions& opts, std::ostream& log);

struct EvalOptions {
  fs::path predictions;  // any CSV starting with id,label
  fs::path truth;
  std::optional<fs::path> train_labels;
  std::size_t n_classes = 0;  // 0: largest label + 1
  fs::path out_dir;
};
/// Writes eval.json and eval.txt.
void run_eval(const EvalOptions& opts, std::ostream& log);

/// Runs the whole flow from a JSON config (see README). `threads` and
/// `out_dir` override the config when set.
void run_pipeline(const Json& config, std::optional<std::size_t> threads,
                  std::optional<fs::path> out_dir, std::ostream& log);

}  // namespace scplabel::stages
