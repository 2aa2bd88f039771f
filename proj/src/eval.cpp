#include "scplabel/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "json.hpp"
#include "scplabel/error.hpp"

namespace scplabel {

namespace {

void check_aligned(std::span<const ClassId> pred, std::span<const ClassId> truth) {
  if (pred.size() != truth.size()) {
    throw ValidationError("eval: " + std::to_string(pred.size()) + " predictions for " +
                          std::to_string(truth.size()) + " ground-truth labels");
  }
}

void check_range(ClassId y, std::size_t n_classes) {
  if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
    throw ValidationError("eval: label " + std::to_string(y) + " outside [0, " +
                          std::to_string(n_classes) + ")");
  }
}

}  // namespace

double top1_accuracy(std::span<const ClassId> pred, std::span<const ClassId> truth) {
  check_aligned(pred, truth);
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += pred[i] == truth[i];
  return double(hits) / double(truth.size());
}

ConfusionMatrix confusion_matrix(std::span<const ClassId> pred,
                                 std::span<const ClassId> truth, std::size_t n_classes) {
  check_aligned(pred, truth);
  ConfusionMatrix m(n_classes, std::vector<std::size_t>(n_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    check_range(truth[i], n_classes);
    check_range(pred[i], n_classes);
    ++m[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
  }
  return m;
}

BiasReport bias_report(std::span<const ClassId> pred, std::span<const ClassId> truth,
                       std::span<const std::size_t> train_counts, std::size_t n_classes) {
  BiasReport r;
  r.confusion = confusion_matrix(pred, truth, n_classes);
  r.top1 = top1_accuracy(pred, truth);
  r.recall.assign(n_classes, 0.0);
  r.support.assign(n_classes, 0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (auto v : r.confusion[c]) r.support[c] += v;
    if (r.support[c]) r.recall[c] = double(r.confusion[c][c]) / double(r.support[c]);
  }

  std::vector<std::size_t> reference(train_counts.begin(), train_counts.end());
  if (!reference.empty()) {
    if (reference.size() != n_classes) {
      throw ValidationError("bias_report: train counts must have one entry per class");
    }
    std::size_t total = 0;
    for (auto v : reference) total += v;
    r.train_share.resize(n_classes, 0.0);
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (total) r.train_share[c] = double(reference[c]) / double(total);
    }
  } else {
    reference = r.support;
  }
  if (n_classes > 0) {
    r.majority_class = static_cast<ClassId>(
        std::max_element(reference.begin(), reference.end()) - reference.begin());
  }
  if (!pred.empty()) {
    const auto hits = std::count(pred.begin(), pred.end(), r.majority_class);
    r.majority_share = double(hits) / double(pred.size());
  }
  return r;
}

std::string BiasReport::to_json() const {
  nlohmann::ordered_json j;
  j["top1"] = top1;
  j["per_class_recall"] = recall;
  j["support"] = support;
  if (!train_share.empty()) j["train_share"] = train_share;
  j["majority_class"] = majority_class;
  j["majority_share"] = majority_share;
  j["confusion"] = confusion;
  return j.dump(2) + "\n";
}

std::string BiasReport::to_text() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "top-1 accuracy  %.4f\n", top1);
  os << line;
  std::snprintf(line, sizeof line, "majority class  %d  (prediction share %.4f)\n\n",
                majority_class, majority_share);
  os << line;
  os << "class  support  recall   train_share\n";
  for (std::size_t c = 0; c < recall.size(); ++c) {
    if (train_share.empty()) {
      std::snprintf(line, sizeof line, "%5zu  %7zu  %6.4f   %11s\n", c, support[c],
                    recall[c], "-");
    } else {
      std::snprintf(line, sizeof line, "%5zu  %7zu  %6.4f   %11.4f\n", c, support[c],
                    recall[c], train_share[c]);
    }
    os << line;
  }
  os << "\nconfusion (rows = truth, cols = prediction)\n";
  for (const auto& row : confusion) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::snprintf(line, sizeof line, c ? " %6zu" : "%6zu", row[c]);
      os << line;
    }
    os << "\n";
  }
  return os.str();
}

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw ValidationError("ARI: partitions differ in length");
  const double n = double(a.size());
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  auto pairs = [](double x) { return x * (x - 1) / 2; };
  double index = 0, sum_rows = 0, sum_cols = 0;
  for (const auto& [_, v] : joint) index += pairs(v);
  for (const auto& [_, v] : rows) sum_rows += pairs(v);
  for (const auto& [_, v] : cols) sum_cols += pairs(v);
  const double expected = n > 1 ? sum_rows * sum_cols / pairs(n) : 0.0;
  const double max_index = (sum_rows + sum_cols) / 2;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace scplabel
