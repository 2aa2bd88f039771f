#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "scplabel/sampling.hpp"

namespace scplabel {

/// Fraction of positions where pred == truth. Inputs must be id-aligned.
double top1_accuracy(std::span<const ClassId> pred, std::span<const ClassId> truth);

/// C x C counts, rows = truth, columns = prediction.
using ConfusionMatrix = std::vector<std::vector<std::size_t>>;

ConfusionMatrix confusion_matrix(std::span<const ClassId> pred,
                                 std::span<const ClassId> truth, std::size_t n_classes);

struct BiasReport {
  double top1 = 0.0;
  std::vector<double> recall;        // per class; 0 when the class has no support
  std::vector<std::size_t> support;  // per class
  std::vector<double> train_share;   // per class, empty if no train counts given
  ClassId majority_class = 0;        // most frequent train class (ties: lowest id)
  double majority_share = 0.0;       // fraction of predictions equal to majority_class
  ConfusionMatrix confusion;

  std::string to_json() const;
  std::string to_text() const;
};

/// Per-class recall next to train-set share, plus the share of predictions
/// landing on the most frequent training class. With empty train counts the
/// majority class is taken from the truth labels.
BiasReport bias_report(std::span<const ClassId> pred, std::span<const ClassId> truth,
                       std::span<const std::size_t> train_counts, std::size_t n_classes);

/// Adjusted Rand index between two partitions of the same samples.
double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

}  // namespace scplabel
