#include "scplabel/labeling.hpp"

#include <algorithm>
#include <map>

#include "scplabel/error.hpp"
#include "scplabel/parallel.hpp"

namespace scplabel {

void PredictionSet::validate() const {
  if (!sample_ids.empty() && sample_ids.size() != labels.size()) {
    throw ValidationError("predictions '" + model_id + "': id count does not match label count");
  }
  for (auto y : labels) {
    if (std::find(label_space.begin(), label_space.end(), y) == label_space.end()) {
      throw ValidationError("predictions '" + model_id + "': label " + std::to_string(y) +
                            " is outside the model's label space");
    }
  }
}

ClassId cluster_mode_label(std::span<const std::size_t> members, const PredictionSet& p) {
  if (members.empty()) throw ParameterError("cluster_mode_label: empty cluster");
  std::map<ClassId, std::size_t> votes;
  for (auto i : members) ++votes[p.labels.at(i)];
  auto best = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

EnsembleDecision one_by_one(std::span<const ClassId> model_labels) {
  if (model_labels.empty()) throw ParameterError("ensemble: no models");
  for (std::size_t i = 0; i + 1 < model_labels.size(); ++i) {
    if (model_labels[i] == model_labels[i + 1]) {
      return {model_labels[i], EnsembleDecision::Rule::pair, i + 1};
    }
  }
  return {model_labels.back(), EnsembleDecision::Rule::last, 0};
}

EnsembleDecision ensemble_cluster_label(std::span<const std::size_t> members,
                                        std::span<const PredictionSet> preds) {
  if (preds.empty()) throw ParameterError("ensemble: no models");
  std::vector<ClassId> labels;
  labels.reserve(preds.size());
  for (const auto& p : preds) labels.push_back(cluster_mode_label(members, p));
  return one_by_one(labels);
}

std::string Provenance::to_string() const {
  if (kind == Kind::fallback) return "fallback:" + fallback_model;
  std::string out = "cluster:" + std::to_string(cluster) + ":";
  if (decision.rule == EnsembleDecision::Rule::pair) {
    return out + "pair" + std::to_string(decision.pair_index);
  }
  return out + "last";
}

PseudoLabels assign_pseudo_labels(const Clustering& c, std::span<const PredictionSet> preds,
                                  const std::string& fallback_model) {
  if (preds.empty()) throw ParameterError("assign_pseudo_labels: no models");
  const std::size_t n = c.assignment.size();
  const PredictionSet* fallback = nullptr;
  for (const auto& p : preds) {
    p.validate();
    if (p.labels.size() != n) {
      throw ValidationError("assign_pseudo_labels: model '" + p.model_id + "' covers " +
                            std::to_string(p.labels.size()) + " samples, clustering has " +
                            std::to_string(n));
    }
    if (p.model_id == fallback_model && !fallback) fallback = &p;
  }
  if (!fallback) {
    throw ValidationError("assign_pseudo_labels: fallback model '" + fallback_model +
                          "' is not in the ensemble");
  }

  const auto members = c.members();
  std::vector<EnsembleDecision> decisions(members.size());
  parallel_for(members.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      if (members[j].empty() || c.per_cluster[j].discarded) continue;
      decisions[j] = ensemble_cluster_label(members[j], preds);
    }
  });

  PseudoLabels out;
  out.labels.resize(n);
  out.provenance.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = c.assignment[i];
    auto& prov = out.provenance[i];
    if (c.per_cluster.at(j).discarded) {
      prov.kind = Provenance::Kind::fallback;
      prov.fallback_model = fallback_model;
      out.labels[i] = fallback->labels[i];
    } else {
      prov.kind = Provenance::Kind::cluster;
      prov.cluster = j;
      prov.decision = decisions[j];
      out.labels[i] = decisions[j].label;
    }
  }
  return out;
}

}  // namespace scplabel
