#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scplabel/features.hpp"
#include "scplabel/rng.hpp"

namespace scplabel {

using ClassId = int;

/// Feature rows with 0-based class labels and optional scene ids.
struct LabeledDataset {
  FeatureMatrix features;
  std::vector<ClassId> labels;
  std::size_t n_classes = 0;
  std::vector<std::string> scene_ids;  // empty, or one per sample

  std::size_t size() const { return labels.size(); }

  /// Throws ValidationError on a length mismatch or a label >= n_classes.
  void validate() const;

  /// Rows `indices` in the given order, with labels and scenes carried along.
  LabeledDataset select(std::span<const std::size_t> indices) const;
};

/// Per-class histogram of length n_classes.
std::vector<std::size_t> class_counts(const LabeledDataset& d);
std::vector<std::size_t> class_counts(std::span<const ClassId> labels,
                                      std::size_t n_classes);

/// Caps every class at `cap` samples, drawn uniformly without replacement.
/// Retained samples keep their original relative order.
LabeledDataset undersample(const LabeledDataset& d, std::size_t cap, Seed seed);

/// Tops every class up to `target` samples by drawing duplicates with
/// replacement. Originals come first, in order, followed by duplicates
/// grouped by class. A duplicate of sample "x" gets id "x~r<n>", n counting
/// from 1 within its class.
LabeledDataset oversample(const LabeledDataset& d, std::size_t target, Seed seed);

/// Per class, round_half_up(fraction * count) samples go to the first split
/// and the rest to the second. Both splits keep the original sample order.
std::pair<LabeledDataset, LabeledDataset> stratified_split(
    const LabeledDataset& d, double train_fraction, Seed seed);

}  // namespace scplabel
