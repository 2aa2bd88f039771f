#include "scplabel/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "scplabel/error.hpp"

namespace scplabel {

void LabeledDataset::validate() const {
  if (labels.size() != features.n_samples()) {
    throw ValidationError("dataset: " + std::to_string(labels.size()) +
                          " labels for " + std::to_string(features.n_samples()) +
                          " samples");
  }
  if (!scene_ids.empty() && scene_ids.size() != labels.size()) {
    throw ValidationError("dataset: scene id count does not match sample count");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= n_classes) {
      throw ValidationError("dataset: label " + std::to_string(labels[i]) +
                            " of sample '" + features.sample_id(i) +
                            "' outside [0, " + std::to_string(n_classes) + ")");
    }
  }
}

LabeledDataset LabeledDataset::select(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.features = features.select(indices);
  out.n_classes = n_classes;
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(labels[i]);
  if (!scene_ids.empty()) {
    out.scene_ids.reserve(indices.size());
    for (auto i : indices) out.scene_ids.push_back(scene_ids[i]);
  }
  return out;
}

std::vector<std::size_t> class_counts(std::span<const ClassId> labels,
                                      std::size_t n_classes) {
  std::vector<std::size_t> counts(n_classes, 0);
  for (auto y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
      throw ValidationError("class_counts: label " + std::to_string(y) +
                            " out of range");
    }
    ++counts[static_cast<std::size_t>(y)];
  }
  return counts;
}

std::vector<std::size_t> class_counts(const LabeledDataset& d) {
  return class_counts(d.labels, d.n_classes);
}

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const LabeledDataset& d) {
  std::vector<std::vector<std::size_t>> by_class(d.n_classes);
  for (std::size_t i = 0; i < d.labels.size(); ++i) {
    by_class[static_cast<std::size_t>(d.labels[i])].push_back(i);
  }
  return by_class;
}

}  // namespace

LabeledDataset undersample(const LabeledDataset& d, std::size_t cap, Seed seed) {
  if (cap == 0) throw ParameterError("undersample: cap must be >= 1");
  d.validate();

  Rng rng = make_rng(seed);
  std::vector<std::size_t> keep;
  for (const auto& members : indices_by_class(d)) {
    if (members.size() <= cap) {
      keep.insert(keep.end(), members.begin(), members.end());
    } else {
      std::sample(members.begin(), members.end(), std::back_inserter(keep), cap,
                  rng);
    }
  }
  std::sort(keep.begin(), keep.end());
  return d.select(keep);
}

LabeledDataset oversample(const LabeledDataset& d, std::size_t target, Seed seed) {
  if (target == 0) throw ParameterError("oversample: target must be >= 1");
  d.validate();

  const auto by_class = indices_by_class(d);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty()) {
      throw ValidationError("oversample: class " + std::to_string(c) +
                            " has no samples");
    }
  }

  Rng rng = make_rng(seed);
  std::vector<std::string> ids = d.features.sample_ids();
  std::vector<double> data = d.features.data();
  LabeledDataset out;
  out.n_classes = d.n_classes;
  out.labels = d.labels;
  out.scene_ids = d.scene_ids;

  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& members = by_class[c];
    if (members.size() >= target) continue;
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    for (std::size_t n = 1; n <= target - members.size(); ++n) {
      const std::size_t src = members[pick(rng)];
      ids.push_back(d.features.sample_id(src) + "~r" + std::to_string(n));
      auto r = d.features.row(src);
      data.insert(data.end(), r.begin(), r.end());
      out.labels.push_back(d.labels[src]);
      if (!d.scene_ids.empty()) out.scene_ids.push_back(d.scene_ids[src]);
    }
  }
  out.features = FeatureMatrix(std::move(ids), d.features.n_dims(), std::move(data));
  return out;
}

std::pair<LabeledDataset, LabeledDataset> stratified_split(
    const LabeledDataset& d, double train_fraction, Seed seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ParameterError("stratified_split: fraction must be in (0, 1)");
  }
  d.validate();

  Rng rng = make_rng(seed);
  std::vector<std::size_t> first, second;
  auto by_class = indices_by_class(d);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < 2) {
      throw ValidationError("stratified_split: class " + std::to_string(c) +
                            " has fewer than 2 samples");
    }
    std::shuffle(members.begin(), members.end(), rng);
    const auto take = static_cast<std::size_t>(
        std::floor(train_fraction * double(members.size()) + 0.5));
    first.insert(first.end(), members.begin(),
                 members.begin() + static_cast<long>(take));
    second.insert(second.end(), members.begin() + static_cast<long>(take),
                  members.end());
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {d.select(first), d.select(second)};
}

}  // namespace scplabel
