#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "scplabel/clustering.hpp"
#include "scplabel/sampling.hpp"

namespace scplabel {

/// Hard per-sample predictions of one model, in dataset order.
struct PredictionSet {
  std::string model_id;
  std::vector<std::string> sample_ids;  // optional; empty or one per label
  std::vector<ClassId> labels;
  std::vector<ClassId> label_space;

  /// Throws ValidationError if a label is outside label_space.
  void validate() const;
};

/// Most frequent predicted label among `members`; ties go to the smallest id.
ClassId cluster_mode_label(std::span<const std::size_t> members, const PredictionSet& p);

struct EnsembleDecision {
  enum class Rule {
    pair,  // models (pair_index, pair_index + 1) agreed, 1-based
    last,  // no adjacent pair agreed (or a single model): last model decides
  };
  ClassId label = 0;
  Rule rule = Rule::last;
  std::size_t pair_index = 0;

  friend bool operator==(const EnsembleDecision&, const EnsembleDecision&) = default;
};

/// One-by-one comparison over per-model cluster labels in ensemble order:
/// the first adjacent pair that agrees fixes the label, otherwise the last
/// model's label is used.
EnsembleDecision one_by_one(std::span<const ClassId> model_labels);

/// cluster_mode_label for every model, then one_by_one.
EnsembleDecision ensemble_cluster_label(std::span<const std::size_t> members,
                                        std::span<const PredictionSet> preds);

struct Provenance {
  enum class Kind { cluster, fallback };
  Kind kind = Kind::cluster;
  std::size_t cluster = 0;
  EnsembleDecision decision;
  std::string fallback_model;

  /// "cluster:<cid>:pair<i>", "cluster:<cid>:last" or "fallback:<model_id>".
  std::string to_string() const;
};

struct PseudoLabels {
  std::vector<ClassId> labels;
  std::vector<Provenance> provenance;
};

/// Non-discarded clusters get their ensemble label broadcast to every member;
/// samples of discarded clusters keep `fallback_model`'s own prediction.
PseudoLabels assign_pseudo_labels(const Clustering& c, std::span<const PredictionSet> preds,
                                  const std::string& fallback_model);

}  // namespace scplabel
