#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace scplabel {

/// N x D row-major matrix of per-sample feature vectors with unique sample ids.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::size_t n_dims) : n_dims_(n_dims) {}

  /// Throws ValidationError when sizes disagree, a value is non-finite or an
  /// id repeats.
  FeatureMatrix(std::vector<std::string> sample_ids, std::size_t n_dims,
                std::vector<double> data);

  std::size_t n_samples() const { return ids_.size(); }
  std::size_t n_dims() const { return n_dims_; }
  bool empty() const { return ids_.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * n_dims_, n_dims_};
  }
  std::span<double> row(std::size_t i) {
    return {data_.data() + i * n_dims_, n_dims_};
  }

  double operator()(std::size_t i, std::size_t d) const {
    return data_[i * n_dims_ + d];
  }

  const std::vector<double>& data() const { return data_; }
  const std::vector<std::string>& sample_ids() const { return ids_; }
  const std::string& sample_id(std::size_t i) const { return ids_[i]; }

  /// Rows `indices` in the given order. Ids must stay unique.
  FeatureMatrix select(std::span<const std::size_t> indices) const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t n_dims_ = 0;
  std::vector<double> data_;
  std::vector<std::string> ids_;
};

struct NormalizeResult {
  FeatureMatrix matrix;
  std::size_t zero_rows = 0;
};

/// Scales every nonzero row to unit Euclidean norm. All-zero rows are left
/// as-is and counted in `zero_rows`.
NormalizeResult l2_normalize(const FeatureMatrix& m);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// k nearest neighbours of every sample, row-major n x k.
struct NeighborTable {
  std::size_t k = 0;
  std::vector<std::size_t> index;
  std::vector<double> similarity;

  std::span<const std::size_t> neighbors(std::size_t i) const {
    return {index.data() + i * k, k};
  }
  std::span<const double> similarities(std::size_t i) const {
    return {similarity.data() + i * k, k};
  }
};

/// Exact brute-force cosine k-NN over L2-normalized rows. Neighbours are in
/// descending similarity, ties by ascending index; a sample is never its own
/// neighbour. Requires 1 <= k <= n_samples - 1.
NeighborTable knn(const FeatureMatrix& m, std::size_t k);

enum class DbaWeighting { similarity, uniform };

struct DbaConfig {
  std::size_t k1 = 1;
  DbaWeighting weighting = DbaWeighting::similarity;
};

/// Database-side augmentation: each row becomes the weighted sum of itself
/// and its k1 nearest neighbours (looked up in the input, single pass), then
/// re-normalized.
///
/// similarity weighting: self weight 1, neighbour weight = cosine clamped to
/// [0, 1]. uniform weighting: every term weighs 1 / (k1 + 1).
FeatureMatrix dba(const FeatureMatrix& m, const DbaConfig& cfg);

DbaWeighting parse_dba_weighting(const std::string& name);
std::string to_string(DbaWeighting w);

}  // namespace scplabel
