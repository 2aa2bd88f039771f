#include "scplabel/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "scplabel/error.hpp"

namespace scplabel {

std::vector<std::size_t> scale_counts(const std::vector<std::size_t>& shape,
                                      std::size_t total) {
  if (shape.empty()) return {};
  if (total < shape.size()) {
    throw ParameterError("scale_counts: total smaller than the number of classes");
  }
  const double sum = std::accumulate(shape.begin(), shape.end(), 0.0);
  // Every class gets 1 up front; the remainder is split proportionally.
  const std::size_t spare = total - shape.size();
  std::vector<std::size_t> out(shape.size(), 1);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < shape.size(); ++c) {
    const double exact = double(spare) * double(shape[c]) / sum;
    const auto whole = static_cast<std::size_t>(std::floor(exact));
    out[c] += whole;
    assigned += whole;
    remainders.emplace_back(exact - double(whole), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < spare; ++r, ++assigned) {
    ++out[remainders[r].second];
  }
  return out;
}

std::vector<std::size_t> SynthConfig::resolved_counts() const {
  if (!class_counts.empty()) return class_counts;
  if (n_classes == kBenchmarkClassCounts.size()) {
    return scale_counts(kBenchmarkClassCounts, total_samples);
  }
  return scale_counts(std::vector<std::size_t>(n_classes, 1), total_samples);
}

void SynthConfig::validate() const {
  if (n_classes < 1) throw ParameterError("synth: n_classes must be >= 1");
  if (!class_counts.empty() && class_counts.size() != n_classes) {
    throw ParameterError("synth: class_counts must have n_classes entries");
  }
  for (auto c : resolved_counts()) {
    if (c < 1) throw ParameterError("synth: every class needs at least one sample");
  }
  if (scene_min < 1 || scene_max < scene_min) {
    throw ParameterError("synth: scene size range must satisfy 1 <= min <= max");
  }
  if (n_dims < 1) throw ParameterError("synth: n_dims must be >= 1");
  if (!(class_sep >= 0.0 && scene_sep >= 0.0 && distractor_std >= 0.0)) {
    throw ParameterError("synth: separations and stds must be >= 0");
  }
  if (!(label_noise >= 0.0 && label_noise < 1.0)) {
    throw ParameterError("synth: label_noise must be in [0, 1)");
  }
}

std::vector<std::size_t> SynthDataset::scene_assignment() const {
  std::vector<std::size_t> out;
  out.reserve(data.size());
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    out.insert(out.end(), scenes[s].size, s);
  }
  return out;
}

namespace {

// Splits `count` images into scenes with sizes in [lo, hi] where possible; a
// class too small for one full scene becomes a single short scene.
std::vector<std::size_t> scene_sizes(std::size_t count, std::size_t lo, std::size_t hi,
                                     Rng& rng) {
  std::vector<std::size_t> sizes;
  std::uniform_int_distribution<std::size_t> draw(lo, hi);
  std::size_t left = count;
  while (left > 0) {
    if (left <= hi) {
      sizes.push_back(left);
      break;
    }
    std::size_t s = draw(rng);
    if (left - s < lo) s = left - lo;
    sizes.push_back(s);
    left -= s;
  }
  return sizes;
}

constexpr int kMaxCentroidAttempts = 1000;

}  // namespace

SynthDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  const auto counts = cfg.resolved_counts();
  const std::size_t dims = cfg.n_dims;
  Rng rng = make_rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  SynthDataset out;
  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxCentroidAttempts && !placed; ++attempt) {
      std::vector<double> v(dims);
      double norm = 0.0;
      for (auto& x : v) {
        x = normal(rng);
        norm += x * x;
      }
      norm = std::sqrt(norm);
      if (norm == 0.0) continue;
      for (auto& x : v) x *= cfg.class_sep / norm;
      placed = std::all_of(out.class_centroids.begin(), out.class_centroids.end(),
                           [&](const auto& other) {
                             return std::sqrt(squared_distance(v, other)) >= cfg.class_sep;
                           });
      if (placed) out.class_centroids.push_back(std::move(v));
    }
    if (!placed) {
      throw GenerationError("synth: could not place class " + std::to_string(c) +
                            " at distance >= class_sep from the others in " +
                            std::to_string(dims) + " dims");
    }
  }

  std::vector<std::string> ids;
  std::vector<double> values;
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  ids.reserve(total);
  values.reserve(total * dims);
  auto& ds = out.data;
  ds.n_classes = cfg.n_classes;

  char buf[32];
  std::vector<double> scene_centre(dims);
  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    for (std::size_t size : scene_sizes(counts[c], cfg.scene_min, cfg.scene_max, rng)) {
      std::snprintf(buf, sizeof buf, "scene_%05zu", out.scenes.size());
      out.scenes.push_back({buf, static_cast<ClassId>(c), size});
      for (std::size_t d = 0; d < dims; ++d) {
        scene_centre[d] = out.class_centroids[c][d] + cfg.scene_sep * normal(rng);
      }
      for (std::size_t i = 0; i < size; ++i) {
        std::snprintf(buf, sizeof buf, "img_%06zu", ids.size());
        ids.emplace_back(buf);
        for (std::size_t d = 0; d < dims; ++d) {
          values.push_back(scene_centre[d] + cfg.distractor_std * normal(rng));
        }
        ds.labels.push_back(static_cast<ClassId>(c));
        ds.scene_ids.push_back(out.scenes.back().scene_id);
      }
    }
  }
  ds.features = FeatureMatrix(std::move(ids), dims, std::move(values));
  return out;
}

PredictionSet generate_predictions(std::span<const ClassId> truth, double accuracy,
                                   Seed seed, std::vector<ClassId> label_space,
                                   std::string model_id) {
  if (!(accuracy > 0.0 && accuracy <= 1.0)) {
    throw ParameterError("generate_predictions: accuracy must be in (0, 1]");
  }
  if (label_space.empty()) throw ParameterError("generate_predictions: empty label space");

  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  PredictionSet out;
  out.model_id = std::move(model_id);
  out.labels.reserve(truth.size());
  std::vector<ClassId> others;
  for (ClassId y : truth) {
    const bool known =
        std::find(label_space.begin(), label_space.end(), y) != label_space.end();
    if (known && coin(rng) < accuracy) {
      out.labels.push_back(y);
      continue;
    }
    others.clear();
    for (auto c : label_space) {
      if (c != y) others.push_back(c);
    }
    if (others.empty()) {
      out.labels.push_back(y);  // single-label space: no wrong answer exists
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
    out.labels.push_back(others[pick(rng)]);
  }
  out.label_space = std::move(label_space);
  return out;
}

}  // namespace scplabel
