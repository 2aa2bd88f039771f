#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scplabel/features.hpp"
#include "scplabel/rng.hpp"
#include "scplabel/sampling.hpp"

namespace scplabel {

struct PredictionSet;

/// Linear scorer z = W f (no bias). Row c of `weights` scores label_space[c].
struct LinearModel {
  std::size_t n_dims = 0;
  std::vector<double> weights;         // |label_space| x n_dims, row-major
  std::vector<ClassId> label_space;    // global class id per output row
  std::vector<double> class_weights;   // empty = uniform loss weights

  std::size_t n_outputs() const { return label_space.size(); }

  std::span<const double> weight_row(std::size_t c) const {
    return {weights.data() + c * n_dims, n_dims};
  }

  /// Local output index of a global class id, or nullopt.
  std::optional<std::size_t> index_of(ClassId global) const;

  /// Throws ValidationError when an invariant does not hold.
  void validate() const;

  static LinearModel zeros(std::vector<ClassId> label_space, std::size_t n_dims);
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double weight_decay = 1e-3;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  Seed seed = 0;

  void validate() const;
};

std::vector<double> predict_logits(const LinearModel& model,
                                   std::span<const double> f);

/// Numerically stable softmax (max subtracted before exponentiation).
std::vector<double> softmax(std::span<const double> z);

inline constexpr double kLogEpsilon = 1e-12;

/// -w_y * ln(p_y + 1e-12); `y` is an output index, w_y = 1 when
/// `class_weights` is empty.
double cross_entropy(std::span<const double> probs, std::size_t y,
                     std::span<const double> class_weights = {});

/// dL/dW for one sample, same layout as LinearModel::weights:
/// w_y * (p_c - [c == y]) * f_d.
std::vector<double> gradient(const LinearModel& model, std::span<const double> f,
                             std::size_t y);

/// Mini-batch SGD with classical momentum from zero weights:
///   v <- mu v - lr (g + wd W);  W <- W + v
/// where g is the batch-mean gradient. Samples are reshuffled every epoch.
LinearModel train(const LabeledDataset& d, const TrainConfig& cfg,
                  std::vector<ClassId> label_space,
                  std::vector<double> class_weights = {});

/// One momentum-SGD update over the given batch; exposed for testing.
void sgd_step(LinearModel& model, std::vector<double>& velocity,
              const FeatureMatrix& features, std::span<const std::size_t> local_labels,
              std::span<const std::size_t> batch, const TrainConfig& cfg);

/// Per-sample softmax outputs, n_samples x n_outputs row-major.
std::vector<double> predict_proba(const LinearModel& model, const FeatureMatrix& m);

/// Argmax label per sample (ties to the lowest output index).
PredictionSet predict_labels(const LinearModel& model, const FeatureMatrix& m,
                             std::string model_id = "model");

}  // namespace scplabel
