#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "scplabel/labeling.hpp"
#include "scplabel/rng.hpp"
#include "scplabel/sampling.hpp"

namespace scplabel {

/// Train-split class counts of the ten-class aerial-vehicle benchmark; the
/// default long-tailed shape.
inline const std::vector<std::size_t> kBenchmarkClassCounts = {
    234209, 28089, 15301, 10655, 1741, 852, 828, 624, 840, 633};

/// Scales `shape` to `total` samples by largest remainder, at least 1 per class.
std::vector<std::size_t> scale_counts(const std::vector<std::size_t>& shape,
                                      std::size_t total);

struct SynthConfig {
  std::size_t n_classes = 10;
  std::vector<std::size_t> class_counts;  // empty: benchmark shape scaled to total
  std::size_t total_samples = 2000;
  std::size_t scene_min = 8;
  std::size_t scene_max = 12;
  std::size_t n_dims = 64;
  double class_sep = 6.0;       // class centroid radius and minimum pairwise distance
  double scene_sep = 1.5;       // per-dimension std of scene centroids around the class
  double distractor_std = 1.0;  // per-dimension std of images around the scene
  double label_noise = 0.3;     // default simulated-model error rate
  Seed seed = 0;

  /// Counts actually used, after applying the default shape.
  std::vector<std::size_t> resolved_counts() const;
  void validate() const;
};

struct SceneInfo {
  std::string scene_id;
  ClassId label = 0;
  std::size_t size = 0;
};

struct SynthDataset {
  LabeledDataset data;  // scene_ids filled
  std::vector<SceneInfo> scenes;
  std::vector<std::vector<double>> class_centroids;

  /// Scene index (into `scenes`) of every sample.
  std::vector<std::size_t> scene_assignment() const;
};

/// Gaussian scene model: class centroids on a sphere of radius class_sep with
/// pairwise distance >= class_sep (rejection sampled); each scene centroid is
/// its class centroid plus N(0, scene_sep^2 I); each image is its scene
/// centroid plus N(0, distractor_std^2 I).
SynthDataset generate(const SynthConfig& cfg);

/// Simulated classifier: each sample is correct with probability `accuracy`,
/// otherwise uniform over the other labels of `label_space`. A sample whose
/// true class is outside `label_space` is always drawn uniformly from it.
PredictionSet generate_predictions(std::span<const ClassId> truth, double accuracy,
                                   Seed seed, std::vector<ClassId> label_space,
                                   std::string model_id = "sim");

}  // namespace scplabel
