#include "scplabel/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "scplabel/error.hpp"
#include "scplabel/labeling.hpp"
#include "scplabel/parallel.hpp"

namespace scplabel {

std::optional<std::size_t> LinearModel::index_of(ClassId global) const {
  auto it = std::find(label_space.begin(), label_space.end(), global);
  if (it == label_space.end()) return std::nullopt;
  return static_cast<std::size_t>(it - label_space.begin());
}

void LinearModel::validate() const {
  if (label_space.empty()) throw ValidationError("model: empty label space");
  if (weights.size() != label_space.size() * n_dims) {
    throw ValidationError("model: weight matrix shape does not match C x D");
  }
  for (double w : weights) {
    if (!std::isfinite(w)) throw ValidationError("model: non-finite weight");
  }
  std::unordered_set<ClassId> seen;
  for (auto c : label_space) {
    if (!seen.insert(c).second) {
      throw ValidationError("model: duplicate label " + std::to_string(c));
    }
  }
  if (!class_weights.empty()) {
    if (class_weights.size() != label_space.size()) {
      throw ValidationError("model: class_weights length must equal label space size");
    }
    for (double w : class_weights) {
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw ValidationError("model: class weights must be positive");
      }
    }
  }
}

LinearModel LinearModel::zeros(std::vector<ClassId> label_space, std::size_t n_dims) {
  LinearModel m;
  m.n_dims = n_dims;
  m.weights.assign(label_space.size() * n_dims, 0.0);
  m.label_space = std::move(label_space);
  return m;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ParameterError("train: learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ParameterError("train: momentum must be in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw ParameterError("train: weight_decay must be >= 0");
  if (epochs < 1) throw ParameterError("train: epochs must be >= 1");
  if (batch_size < 1) throw ParameterError("train: batch_size must be >= 1");
}

std::vector<double> predict_logits(const LinearModel& model,
                                   std::span<const double> f) {
  if (f.size() != model.n_dims) {
    throw ValidationError("predict: feature has " + std::to_string(f.size()) +
                          " dims, model expects " + std::to_string(model.n_dims));
  }
  std::vector<double> z(model.n_outputs());
  for (std::size_t c = 0; c < z.size(); ++c) z[c] = dot(model.weight_row(c), f);
  return z;
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> p(z.size());
  if (z.empty()) return p;
  const double zmax = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - zmax);
    total += p[i];
  }
  for (auto& v : p) v /= total;
  return p;
}

double cross_entropy(std::span<const double> probs, std::size_t y,
                     std::span<const double> class_weights) {
  if (y >= probs.size()) {
    throw ValidationError("cross_entropy: class index " + std::to_string(y) +
                          " out of range");
  }
  const double w = class_weights.empty() ? 1.0 : class_weights[y];
  return -w * std::log(probs[y] + kLogEpsilon);
}

std::vector<double> gradient(const LinearModel& model, std::span<const double> f,
                             std::size_t y) {
  if (y >= model.n_outputs()) {
    throw ValidationError("gradient: class index " + std::to_string(y) +
                          " out of range");
  }
  const auto p = softmax(predict_logits(model, f));
  const double w = model.class_weights.empty() ? 1.0 : model.class_weights[y];
  std::vector<double> g(model.weights.size());
  for (std::size_t c = 0; c < p.size(); ++c) {
    const double coeff = w * (p[c] - (c == y ? 1.0 : 0.0));
    for (std::size_t d = 0; d < model.n_dims; ++d) {
      g[c * model.n_dims + d] = coeff * f[d];
    }
  }
  return g;
}

void sgd_step(LinearModel& model, std::vector<double>& velocity,
              const FeatureMatrix& features, std::span<const std::size_t> local_labels,
              std::span<const std::size_t> batch, const TrainConfig& cfg) {
  std::vector<double> grad(model.weights.size(), 0.0);
  for (auto i : batch) {
    const auto g = gradient(model, features.row(i), local_labels[i]);
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += g[j];
  }
  const double scale = 1.0 / double(batch.size());
  for (std::size_t j = 0; j < grad.size(); ++j) {
    velocity[j] = cfg.momentum * velocity[j] -
                  cfg.learning_rate * (grad[j] * scale + cfg.weight_decay * model.weights[j]);
    model.weights[j] += velocity[j];
  }
}

LinearModel train(const LabeledDataset& d, const TrainConfig& cfg,
                  std::vector<ClassId> label_space, std::vector<double> class_weights) {
  cfg.validate();
  d.validate();
  if (d.size() == 0) throw ValidationError("train: empty dataset");

  LinearModel model = LinearModel::zeros(std::move(label_space), d.features.n_dims());
  model.class_weights = std::move(class_weights);
  model.validate();

  std::vector<std::size_t> local(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto idx = model.index_of(d.labels[i]);
    if (!idx) {
      throw ValidationError("train: label " + std::to_string(d.labels[i]) +
                            " of sample '" + d.features.sample_id(i) +
                            "' is outside the label space");
    }
    local[i] = *idx;
  }

  Rng rng = make_rng(cfg.seed);
  std::vector<double> velocity(model.weights.size(), 0.0);
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      sgd_step(model, velocity, d.features, local,
               std::span<const std::size_t>(order).subspan(start, stop - start), cfg);
    }
  }
  return model;
}

std::vector<double> predict_proba(const LinearModel& model, const FeatureMatrix& m) {
  if (m.n_dims() != model.n_dims) {
    throw ValidationError("predict: features have " + std::to_string(m.n_dims()) +
                          " dims, model expects " + std::to_string(model.n_dims));
  }
  const std::size_t c = model.n_outputs();
  std::vector<double> out(m.n_samples() * c);
  parallel_for(m.n_samples(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto p = softmax(predict_logits(model, m.row(i)));
      std::copy(p.begin(), p.end(), out.begin() + static_cast<long>(i * c));
    }
  });
  return out;
}

PredictionSet predict_labels(const LinearModel& model, const FeatureMatrix& m,
                             std::string model_id) {
  model.validate();
  if (m.n_dims() != model.n_dims) {
    throw ValidationError("predict: features have " + std::to_string(m.n_dims()) +
                          " dims, model expects " + std::to_string(model.n_dims));
  }
  PredictionSet out;
  out.model_id = std::move(model_id);
  out.label_space = model.label_space;
  out.sample_ids = m.sample_ids();
  out.labels.resize(m.n_samples());
  parallel_for(m.n_samples(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto z = predict_logits(model, m.row(i));
      const auto best = std::max_element(z.begin(), z.end());
      out.labels[i] = model.label_space[static_cast<std::size_t>(best - z.begin())];
    }
  });
  return out;
}

}  // namespace scplabel
