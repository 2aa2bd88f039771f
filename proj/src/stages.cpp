#include "scplabel/stages.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <set>
#include <unordered_map>

#include "scplabel/error.hpp"
#include "scplabel/eval.hpp"
#include "scplabel/io.hpp"
#include "scplabel/labeling.hpp"
#include "scplabel/parallel.hpp"
#include "scplabel/rng.hpp"
#include "scplabel/sampling.hpp"

namespace scplabel::stages {

std::string config_hash(const Json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(config.dump()));
  return buf;
}

void log_stage(std::ostream& log, const std::string& stage, Seed seed, const Json& config) {
  log << "[" << stage << "] seed=" << seed << " config_hash=" << config_hash(config) << "\n";
}

namespace {

std::size_t infer_classes(std::span<const ClassId> labels) {
  ClassId top = -1;
  for (auto y : labels) {
    if (y < 0) throw ValidationError("negative class id " + std::to_string(y));
    top = std::max(top, y);
  }
  return static_cast<std::size_t>(top + 1);
}

std::vector<ClassId> iota_space(std::size_t n) {
  std::vector<ClassId> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<ClassId>(i);
  return out;
}

LabeledDataset load_dataset(const fs::path& features, const fs::path& labels,
                            std::size_t n_classes) {
  LabeledDataset d;
  d.features = io::load_features(features);
  d.labels = io::align_labels(io::read_label_table(labels), d.features.sample_ids(),
                              "'" + labels.string() + "'");
  d.n_classes = n_classes ? n_classes : infer_classes(d.labels);
  d.validate();
  return d;
}

void save_dataset(const fs::path& dir, const std::string& stem, const LabeledDataset& d) {
  io::save_features(dir / (stem + ".scpf"), d.features);
  io::write_labels(dir / (stem + "_labels.csv"), d.features.sample_ids(), d.labels);
}

Json metric_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

void run_synth(const SynthOptions& opts, std::ostream& log) {
  SynthConfig cfg = opts.config;
  cfg.seed = derive_seed(opts.root_seed, "synth");
  Json j = {{"n_classes", cfg.n_classes},
            {"class_counts", cfg.resolved_counts()},
            {"scene_size", {cfg.scene_min, cfg.scene_max}},
            {"n_dims", cfg.n_dims},
            {"class_sep", cfg.class_sep},
            {"scene_sep", cfg.scene_sep},
            {"distractor_std", cfg.distractor_std}};
  log_stage(log, "synth", cfg.seed, j);

  const auto ds = generate(cfg);
  const auto& ids = ds.data.features.sample_ids();
  io::save_features(opts.out_dir / "features.scpf", ds.data.features);
  io::write_labels(opts.out_dir / "labels.csv", ids, ds.data.labels);
  io::write_scenes(opts.out_dir / "scenes.csv", ids, ds.data.scene_ids);
}

void run_sample(const SampleOptions& opts, std::ostream& log) {
  const Seed seed = derive_seed(opts.root_seed, "sample");
  Json j = {{"undersample_cap", opts.undersample_cap},
            {"oversample_target", opts.oversample_target},
            {"split_fraction", opts.split_fraction},
            {"n_classes", opts.n_classes}};
  log_stage(log, "sample", seed, j);

  LabeledDataset d = load_dataset(opts.features, opts.labels, opts.n_classes);
  if (opts.undersample_cap) d = undersample(d, opts.undersample_cap, derive_seed(seed, 0u));
  if (opts.oversample_target) d = oversample(d, opts.oversample_target, derive_seed(seed, 1u));
  if (opts.split_fraction > 0.0) {
    auto [first, second] = stratified_split(d, opts.split_fraction, derive_seed(seed, 2u));
    save_dataset(opts.out_dir, "train", first);
    save_dataset(opts.out_dir, "holdout", second);
  } else {
    save_dataset(opts.out_dir, "sampled", d);
  }
}

void run_train(const TrainOptions& opts, std::ostream& log) {
  TrainConfig cfg = opts.config;
  cfg.seed = derive_seed(opts.root_seed, "train");
  LabeledDataset d = load_dataset(opts.features, opts.labels, 0);
  auto space = opts.label_space.empty() ? iota_space(d.n_classes) : opts.label_space;
  Json j = {{"learning_rate", cfg.learning_rate}, {"momentum", cfg.momentum},
            {"weight_decay", cfg.weight_decay},   {"epochs", cfg.epochs},
            {"batch_size", cfg.batch_size},       {"label_space", space},
            {"class_weights", opts.class_weights}};
  log_stage(log, "train", cfg.seed, j);

  // A subset-label model trains only on the samples its label space covers.
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (std::find(space.begin(), space.end(), d.labels[i]) != space.end()) keep.push_back(i);
  }
  if (keep.size() != d.size()) d = d.select(keep);
  const auto model = train(d, cfg, space, opts.class_weights);
  io::save_model(opts.out, model);
}

void run_predict(const PredictOptions& opts, std::ostream& log) {
  if (opts.model.has_value() == opts.accuracy.has_value()) {
    throw ParameterError("predict: give exactly one of a model file or a simulated accuracy");
  }
  const std::string model_id = opts.out.stem().string();

  if (opts.model) {
    Json j = {{"model", opts.model->string()}, {"probabilities", opts.probabilities}};
    log_stage(log, "predict", 0, j);
    const auto model = io::load_model(*opts.model);
    const auto m = io::load_features(opts.features);
    const auto p = predict_labels(model, m, model_id);
    if (opts.probabilities) {
      io::write_predictions(opts.out, p, predict_proba(model, m), model.n_outputs());
    } else {
      io::write_predictions(opts.out, p);
    }
    return;
  }

  const Seed seed = derive_seed(opts.root_seed, "simulate:" + model_id);
  const auto table = io::read_label_table(opts.labels);
  std::vector<std::string> ids;
  std::vector<ClassId> truth;
  if (!opts.features.empty()) {
    ids = io::load_features(opts.features).sample_ids();
    truth = io::align_labels(table, ids, "'" + opts.labels.string() + "'");
  } else {
    for (const auto& [id, y] : table) {
      ids.push_back(id);
      truth.push_back(y);
    }
  }
  auto space = opts.label_space.empty() ? iota_space(infer_classes(truth)) : opts.label_space;
  Json j = {{"accuracy", *opts.accuracy}, {"label_space", space}};
  log_stage(log, "predict", seed, j);
  auto p = generate_predictions(truth, *opts.accuracy, seed, space, model_id);
  p.sample_ids = std::move(ids);
  io::write_predictions(opts.out, p);
}

void run_normalize(const NormalizeOptions& opts, std::ostream& log) {
  log_stage(log, "normalize", 0, Json::object());
  const auto result = l2_normalize(io::load_features(opts.features));
  if (result.zero_rows) {
    log << "[normalize] warning: " << result.zero_rows << " all-zero rows left unnormalized\n";
  }
  io::save_features(opts.out, result.matrix);
}

void run_dba(const DbaOptions& opts, std::ostream& log) {
  Json j = {{"k1", opts.config.k1}, {"weighting", to_string(opts.config.weighting)}};
  log_stage(log, "dba", 0, j);
  io::save_features(opts.out, dba(io::load_features(opts.features), opts.config));
}

Json clustering_metrics(const FeatureMatrix& m, const Clustering& c) {
  Json j;
  j["k"] = c.k();
  j["n_samples"] = m.n_samples();
  j["inertia"] = inertia(c);
  try {
    j["silhouette"] = silhouette(m, c);
  } catch (const MetricError&) {
    j["silhouette"] = nullptr;
  }
  try {
    const double ch = calinski_harabasz(m, c);
    j["calinski_harabasz"] = metric_or_null(ch);
    j["calinski_harabasz_perfect"] = std::isinf(ch);
  } catch (const MetricError&) {
    j["calinski_harabasz"] = nullptr;
    j["calinski_harabasz_perfect"] = false;
  }
  std::size_t discarded = 0;
  Json per = Json::array();
  for (const auto& s : c.per_cluster) {
    if (s.size > 0 && s.discarded) ++discarded;
    per.push_back({{"size", s.size}, {"sum_sq_dist", s.sum_sq_dist}, {"discarded", s.discarded}});
  }
  j["n_discarded"] = discarded;
  j["per_cluster"] = std::move(per);
  return j;
}

void run_cluster(const ClusterOptions& opts, std::ostream& log) {
  ClusteringConfig cfg = opts.config;
  cfg.seed = derive_seed(opts.root_seed, "cluster");
  Json j = {{"k", cfg.k},
            {"max_iters", cfg.max_iters},
            {"tol", cfg.tol},
            {"n_restarts", cfg.n_restarts},
            {"quantile", opts.filter.quantile},
            {"min_size", opts.filter.min_size}};
  log_stage(log, "cluster", cfg.seed, j);

  const auto m = io::load_features(opts.features);
  const auto filtered = filter_clusters(cluster(m, cfg), opts.filter);
  if (filtered.kept_best) {
    log << "[cluster] warning: filter rejected every cluster; kept the tightest one\n";
  }
  io::write_clusters(opts.out_dir / "clusters.csv", m.sample_ids(), filtered.clustering);
  io::write_text(opts.out_dir / "clusters.json",
                 clustering_metrics(m, filtered.clustering).dump(2) + "\n");
}

namespace {

// Feature rows reordered to match `ids`.
FeatureMatrix rows_for(const FeatureMatrix& m, std::span<const std::string> ids) {
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < m.n_samples(); ++i) index.emplace(m.sample_id(i), i);
  if (ids.size() != m.n_samples()) {
    throw ValidationError("clusters file covers " + std::to_string(ids.size()) +
                          " samples, feature file has " + std::to_string(m.n_samples()));
  }
  std::vector<std::size_t> order;
  order.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw ValidationError("id '" + id + "' is not in the feature file");
    order.push_back(it->second);
  }
  return m.select(order);
}

Clustering clustering_from_table(const io::ClusterTable& t) {
  Clustering c;
  c.assignment = t.assignment;
  c.per_cluster.resize(t.k());
  for (auto j : t.assignment) ++c.per_cluster[j].size;
  for (std::size_t j = 0; j < t.k(); ++j) c.per_cluster[j].discarded = t.discarded[j];
  return c;
}

}  // namespace

void run_metrics(const MetricsOptions& opts, std::ostream& log) {
  log_stage(log, "metrics", 0, Json::object());
  const auto table = io::read_clusters(opts.clusters);
  const auto m = rows_for(io::load_features(opts.features), table.ids);
  Clustering c = clustering_from_assignment(m, table.assignment, table.k());
  for (std::size_t j = 0; j < table.k(); ++j) c.per_cluster[j].discarded = table.discarded[j];
  io::write_text(opts.out, clustering_metrics(m, c).dump(2) + "\n");
}

void run_label(const LabelOptions& opts, std::ostream& log) {
  if (opts.preds.empty()) throw ParameterError("label: at least one predictions file is required");
  const auto table = io::read_clusters(opts.clusters);
  std::vector<PredictionSet> preds;
  for (const auto& path : opts.preds) preds.push_back(io::read_predictions(path, table.ids));
  const std::string fallback = opts.fallback.empty() ? preds.front().model_id : opts.fallback;

  Json order = Json::array();
  for (const auto& p : preds) order.push_back(p.model_id);
  log_stage(log, "label", 0, Json{{"models", order}, {"fallback", fallback}});

  const auto labels = assign_pseudo_labels(clustering_from_table(table), preds, fallback);
  io::write_pseudo_labels(opts.out, table.ids, labels);
}

void run_eval(const EvalOptions& opts, std::ostream& log) {
  log_stage(log, "eval", 0, Json{{"n_classes", opts.n_classes}});
  const auto truth_table = io::read_label_table(opts.truth);
  std::vector<std::string> ids;
  std::vector<ClassId> truth;
  for (const auto& [id, y] : truth_table) {
    ids.push_back(id);
    truth.push_back(y);
  }
  const auto pred = io::align_labels(io::read_label_table(opts.predictions), ids,
                                     "'" + opts.predictions.string() + "'");

  std::vector<std::size_t> train_counts;
  std::size_t n_classes = opts.n_classes;
  std::vector<ClassId> train_labels;
  if (opts.train_labels) {
    for (const auto& row : io::read_label_table(*opts.train_labels)) train_labels.push_back(row.second);
  }
  if (n_classes == 0) {
    n_classes = std::max({infer_classes(truth), infer_classes(pred), infer_classes(train_labels)});
  }
  if (opts.train_labels) train_counts = class_counts(train_labels, n_classes);

  const auto report = bias_report(pred, truth, train_counts, n_classes);
  io::write_text(opts.out_dir / "eval.json", report.to_json());
  io::write_text(opts.out_dir / "eval.txt", report.to_text());
}

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("pipeline config: bad value for '") + key + "': " + e.what());
  }
}

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError("pipeline config: '" + where + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw ValidationError("pipeline config: unknown key '" + key + "' in " + where);
    }
  }
}

const Json& section(const Json& root, const char* key) {
  static const Json empty = Json::object();
  return root.contains(key) ? root.at(key) : empty;
}

}  // namespace

void run_pipeline(const Json& config, std::optional<std::size_t> threads,
                  std::optional<fs::path> out_dir, std::ostream& log) {
  check_keys(config,
             {"seed", "threads", "out", "synth", "features", "labels", "models", "normalize",
              "dba", "cluster", "filter", "label", "eval"},
             "config");
  const Seed root = get_or<Seed>(config, "seed", 0);
  set_num_threads(threads ? *threads : get_or<std::size_t>(config, "threads", 1));
  const fs::path out = out_dir ? *out_dir : fs::path(get_or<std::string>(config, "out", "out"));
  log_stage(log, "pipeline", root, config);

  fs::path features, labels;
  std::size_t n_classes = 0;
  std::optional<double> default_accuracy;
  if (config.contains("synth")) {
    const Json& s = config.at("synth");
    check_keys(s,
               {"n_classes", "class_counts", "total_samples", "scene_size", "n_dims", "class_sep",
                "scene_sep", "distractor_std", "label_noise"},
               "synth");
    SynthOptions so;
    SynthConfig& c = so.config;
    c.n_classes = get_or(s, "n_classes", c.n_classes);
    c.class_counts = get_or(s, "class_counts", c.class_counts);
    c.total_samples = get_or(s, "total_samples", c.total_samples);
    const auto range = get_or(s, "scene_size", std::vector<std::size_t>{c.scene_min, c.scene_max});
    if (range.size() != 2) throw ValidationError("pipeline config: scene_size needs [min, max]");
    c.scene_min = range[0];
    c.scene_max = range[1];
    c.n_dims = get_or(s, "n_dims", c.n_dims);
    c.class_sep = get_or(s, "class_sep", c.class_sep);
    c.scene_sep = get_or(s, "scene_sep", c.scene_sep);
    c.distractor_std = get_or(s, "distractor_std", c.distractor_std);
    c.label_noise = get_or(s, "label_noise", c.label_noise);
    so.root_seed = root;
    so.out_dir = out;
    run_synth(so, log);
    features = out / "features.scpf";
    labels = out / "labels.csv";
    n_classes = c.n_classes;
    default_accuracy = 1.0 - c.label_noise;
  } else {
    if (!config.contains("features")) {
      throw ValidationError("pipeline config: need either a 'synth' section or 'features'");
    }
    features = get_or<std::string>(config, "features", "");
    labels = get_or<std::string>(config, "labels", "");
  }

  // Models, in ensemble order.
  if (!config.contains("models") || !config.at("models").is_array() ||
      config.at("models").empty()) {
    throw ValidationError("pipeline config: 'models' must be a non-empty array");
  }
  std::vector<fs::path> pred_paths;
  for (const auto& entry : config.at("models")) {
    check_keys(entry, {"id", "accuracy", "label_space", "preds", "model", "train", "probabilities"},
               "models[]");
    const int sources = int(entry.contains("preds")) + int(entry.contains("model")) +
                        int(entry.contains("train")) + int(entry.contains("accuracy"));
    if (sources > 1) {
      throw ValidationError("pipeline config: a model takes one of preds, model, train, accuracy");
    }
    if (entry.contains("preds")) {
      fs::path p = entry.at("preds").get<std::string>();
      if (entry.contains("id") && entry.at("id").get<std::string>() != p.stem().string()) {
        throw ValidationError("pipeline config: model id must equal the stem of its preds file");
      }
      pred_paths.push_back(p);
      continue;
    }
    if (!entry.contains("id")) throw ValidationError("pipeline config: model without 'id'");
    const auto id = entry.at("id").get<std::string>();
    PredictOptions po;
    po.features = features;
    po.out = out / "preds" / (id + ".csv");
    po.root_seed = root;
    po.probabilities = get_or(entry, "probabilities", false);
    po.label_space = get_or(entry, "label_space", std::vector<ClassId>{});
    if (entry.contains("model") || entry.contains("train")) {
      if (entry.contains("model")) {
        po.model = fs::path(entry.at("model").get<std::string>());
      } else {
        const Json& t = entry.at("train");
        check_keys(t,
                   {"features", "labels", "learning_rate", "momentum", "weight_decay", "epochs",
                    "batch_size", "class_weights"},
                   "train");
        TrainOptions to;
        to.features = get_or<std::string>(t, "features", "");
        to.labels = get_or<std::string>(t, "labels", "");
        to.config.learning_rate = get_or(t, "learning_rate", to.config.learning_rate);
        to.config.momentum = get_or(t, "momentum", to.config.momentum);
        to.config.weight_decay = get_or(t, "weight_decay", to.config.weight_decay);
        to.config.epochs = get_or(t, "epochs", to.config.epochs);
        to.config.batch_size = get_or(t, "batch_size", to.config.batch_size);
        to.class_weights = get_or(t, "class_weights", std::vector<double>{});
        to.label_space = po.label_space;
        to.root_seed = root;
        to.out = out / "models" / (id + ".scpm");
        run_train(to, log);
        po.model = to.out;
      }
      po.label_space.clear();
    } else {
      if (labels.empty()) {
        throw ValidationError("pipeline config: simulated model '" + id + "' needs labels");
      }
      po.labels = labels;
      if (entry.contains("accuracy")) {
        po.accuracy = entry.at("accuracy").get<double>();
      } else if (default_accuracy) {
        po.accuracy = *default_accuracy;
      } else {
        throw ValidationError("pipeline config: model '" + id + "' has no source");
      }
    }
    run_predict(po, log);
    pred_paths.push_back(po.out);
  }

  fs::path current = features;
  const Json& norm = section(config, "normalize");
  if (!(norm.is_boolean() && !norm.get<bool>())) {
    if (!norm.is_boolean()) check_keys(norm, {"enabled"}, "normalize");
    if (norm.is_boolean() || get_or(norm, "enabled", true)) {
      run_normalize({current, out / "normalized.scpf"}, log);
      current = out / "normalized.scpf";
    }
  }

  const Json& dba_cfg = section(config, "dba");
  check_keys(dba_cfg, {"enabled", "k1", "weighting"}, "dba");
  if (get_or(dba_cfg, "enabled", true)) {
    DbaOptions o;
    o.features = current;
    o.out = out / "dba.scpf";
    o.config.k1 = get_or(dba_cfg, "k1", o.config.k1);
    o.config.weighting =
        parse_dba_weighting(get_or<std::string>(dba_cfg, "weighting", to_string(o.config.weighting)));
    run_dba(o, log);
    current = o.out;
  }

  const Json& cl = section(config, "cluster");
  check_keys(cl, {"k", "max_iters", "tol", "n_restarts"}, "cluster");
  const Json& fl = section(config, "filter");
  check_keys(fl, {"quantile", "min_size"}, "filter");
  ClusterOptions co;
  co.features = current;
  co.config.k = get_or(cl, "k", co.config.k);
  co.config.max_iters = get_or(cl, "max_iters", co.config.max_iters);
  co.config.tol = get_or(cl, "tol", co.config.tol);
  co.config.n_restarts = get_or(cl, "n_restarts", co.config.n_restarts);
  co.filter.quantile = get_or(fl, "quantile", co.filter.quantile);
  co.filter.min_size = get_or(fl, "min_size", co.filter.min_size);
  co.root_seed = root;
  co.out_dir = out;
  run_cluster(co, log);

  const Json& lb = section(config, "label");
  check_keys(lb, {"fallback"}, "label");
  run_label({out / "clusters.csv", pred_paths, get_or<std::string>(lb, "fallback", ""),
             out / "pseudo_labels.csv"},
            log);

  if (!labels.empty()) {
    const Json& ev = section(config, "eval");
    check_keys(ev, {"train_labels", "n_classes"}, "eval");
    EvalOptions eo;
    eo.predictions = out / "pseudo_labels.csv";
    eo.truth = labels;
    if (ev.contains("train_labels")) eo.train_labels = fs::path(ev.at("train_labels").get<std::string>());
    eo.n_classes = get_or(ev, "n_classes", n_classes);
    eo.out_dir = out;
    run_eval(eo, log);
  }
}

}  // namespace scplabel::stages
