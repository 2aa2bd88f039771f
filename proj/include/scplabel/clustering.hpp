#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "scplabel/features.hpp"
#include "scplabel/rng.hpp"

namespace scplabel {

/// k x D row-major centroid matrix.
struct Centroids {
  std::size_t k = 0;
  std::size_t n_dims = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t c) const {
    return {data.data() + c * n_dims, n_dims};
  }
  std::span<double> row(std::size_t c) { return {data.data() + c * n_dims, n_dims}; }

  friend bool operator==(const Centroids&, const Centroids&) = default;
};

struct ClusterStats {
  std::size_t size = 0;
  double sum_sq_dist = 0.0;
  bool discarded = false;

  friend bool operator==(const ClusterStats&, const ClusterStats&) = default;
};

struct Clustering {
  Centroids centroids;
  std::vector<std::size_t> assignment;
  std::vector<ClusterStats> per_cluster;
  /// Inertia after every assignment step; non-increasing.
  std::vector<double> inertia_history;

  std::size_t k() const { return per_cluster.size(); }
  /// Member indices of every cluster, ascending.
  std::vector<std::vector<std::size_t>> members() const;
};

struct ClusteringConfig {
  std::size_t k = 80;
  std::size_t max_iters = 100;
  double tol = 1e-6;
  Seed seed = 0;
  std::size_t n_restarts = 3;

  void validate(std::size_t n_samples) const;
};

/// k-means++ D^2 seeding. The first centre is uniform over the samples, or
/// `first_index` when given.
Centroids kmeanspp_seed(const FeatureMatrix& m, std::size_t k, Seed seed,
                        std::optional<std::size_t> first_index = std::nullopt);

/// Lloyd iteration from `init`. Stops when the relative inertia improvement
/// drops to `tol` or below, or after `max_iters` centroid updates. An empty
/// cluster's centroid is moved onto the sample farthest from its own centroid.
Clustering lloyd(const FeatureMatrix& m, const Centroids& init,
                 std::size_t max_iters, double tol);

/// Seed of restart `r` inside cluster().
Seed restart_seed(Seed seed, std::size_t restart);

/// Best-of-n_restarts k-means++ + Lloyd by inertia (ties to the earliest).
Clustering cluster(const FeatureMatrix& m, const ClusteringConfig& cfg);

/// Nearest centroid per sample (ties to the lowest centroid index).
std::vector<std::size_t> assign_nearest(const FeatureMatrix& m, const Centroids& c);

/// Recomputes per-cluster size and squared distances to the stored centroids.
std::vector<ClusterStats> cluster_stats(const FeatureMatrix& m, const Centroids& c,
                                        std::span<const std::size_t> assignment);

/// Rebuilds a clustering from an assignment alone; centroids are member means.
Clustering clustering_from_assignment(const FeatureMatrix& m,
                                      std::span<const std::size_t> assignment,
                                      std::size_t k);

double inertia(const Clustering& c);

/// Mean silhouette over all samples using Euclidean distance. Samples in
/// singleton clusters score 0. Needs at least two non-empty clusters.
double silhouette(const FeatureMatrix& m, std::span<const std::size_t> assignment);
double silhouette(const FeatureMatrix& m, const Clustering& c);

/// Calinski-Harabasz index over non-empty clusters, with centres taken as
/// member means. Returns +infinity when the within-cluster dispersion is 0.
double calinski_harabasz(const FeatureMatrix& m, std::span<const std::size_t> assignment);
double calinski_harabasz(const FeatureMatrix& m, const Clustering& c);

struct FilterPolicy {
  double quantile = 0.9;
  std::size_t min_size = 2;
};

struct FilterResult {
  Clustering clustering;
  std::size_t n_discarded = 0;
  /// The policy rejected every cluster, so the best one was kept.
  bool kept_best = false;
};

/// Discards clusters whose mean squared distance is strictly above the
/// `quantile` (linear interpolation) of that value over non-empty clusters,
/// or whose size is below `min_size`. Never discards every cluster.
FilterResult filter_clusters(const Clustering& c, const FilterPolicy& policy);

}  // namespace scplabel
