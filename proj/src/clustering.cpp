#include "scplabel/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scplabel/error.hpp"
#include "scplabel/parallel.hpp"

namespace scplabel {

std::vector<std::vector<std::size_t>> Clustering::members() const {
  std::vector<std::vector<std::size_t>> out(k());
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    out[assignment[i]].push_back(i);
  }
  return out;
}

void ClusteringConfig::validate(std::size_t n_samples) const {
  if (k < 1 || k > n_samples) {
    throw ParameterError("cluster: k must be in [1, n_samples], got k=" +
                         std::to_string(k) + " with n_samples=" +
                         std::to_string(n_samples));
  }
  if (max_iters < 1) throw ParameterError("cluster: max_iters must be >= 1");
  if (!(tol >= 0.0)) throw ParameterError("cluster: tol must be >= 0");
  if (n_restarts < 1) throw ParameterError("cluster: n_restarts must be >= 1");
}

Centroids kmeanspp_seed(const FeatureMatrix& m, std::size_t k, Seed seed,
                        std::optional<std::size_t> first_index) {
  const std::size_t n = m.n_samples();
  if (k < 1 || k > n) {
    throw ParameterError("kmeans++: k must be in [1, n_samples], got k=" +
                         std::to_string(k) + " with n_samples=" +
                         std::to_string(n));
  }
  if (first_index && *first_index >= n) {
    throw ParameterError("kmeans++: first index out of range");
  }

  Rng rng = make_rng(seed);
  Centroids out{k, m.n_dims(), {}};
  out.data.reserve(k * m.n_dims());
  auto take = [&](std::size_t i) {
    auto r = m.row(i);
    out.data.insert(out.data.end(), r.begin(), r.end());
  };

  std::size_t chosen = first_index
                           ? *first_index
                           : std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  take(chosen);

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(m.row(i), m.row(chosen));

  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    if (total > 0.0) {
      std::discrete_distribution<std::size_t> draw(d2.begin(), d2.end());
      chosen = draw(rng);
    } else {
      // Every sample coincides with a chosen centre.
      chosen = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    take(chosen);
    auto centre = m.row(chosen);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(m.row(i), centre));
    }
  }
  return out;
}

std::vector<std::size_t> assign_nearest(const FeatureMatrix& m, const Centroids& c) {
  std::vector<std::size_t> out(m.n_samples());
  parallel_for(m.n_samples(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto x = m.row(i);
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t j = 0; j < c.k; ++j) {
        const double d = squared_distance(x, c.row(j));
        if (d < best) {
          best = d;
          arg = j;
        }
      }
      out[i] = arg;
    }
  });
  return out;
}

std::vector<ClusterStats> cluster_stats(const FeatureMatrix& m, const Centroids& c,
                                        std::span<const std::size_t> assignment) {
  std::vector<ClusterStats> stats(c.k);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    auto& s = stats[assignment[i]];
    ++s.size;
    s.sum_sq_dist += squared_distance(m.row(i), c.row(assignment[i]));
  }
  return stats;
}

namespace {

double total_inertia(const std::vector<ClusterStats>& stats) {
  double s = 0.0;
  for (const auto& c : stats) s += c.sum_sq_dist;
  return s;
}

Centroids member_means(const FeatureMatrix& m, std::span<const std::size_t> assignment,
                       std::size_t k, std::vector<std::size_t>& counts) {
  const std::size_t dims = m.n_dims();
  Centroids out{k, dims, std::vector<double>(k * dims, 0.0)};
  counts.assign(k, 0);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    auto dst = out.row(assignment[i]);
    auto x = m.row(i);
    for (std::size_t d = 0; d < dims; ++d) dst[d] += x[d];
    ++counts[assignment[i]];
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] == 0) continue;
    for (auto& v : out.row(j)) v /= double(counts[j]);
  }
  return out;
}

// Centroid update: member means, with every empty centroid moved onto the
// sample farthest from its (updated) centroid. Chosen samples are not reused.
Centroids update_centroids(const FeatureMatrix& m, const Centroids& previous,
                           std::span<const std::size_t> assignment) {
  std::vector<std::size_t> counts;
  Centroids next = member_means(m, assignment, previous.k, counts);

  std::vector<double> far;
  for (std::size_t j = 0; j < next.k; ++j) {
    if (counts[j] != 0) continue;
    if (far.empty()) {
      far.resize(m.n_samples());
      for (std::size_t i = 0; i < m.n_samples(); ++i) {
        far[i] = counts[assignment[i]] ? squared_distance(m.row(i), next.row(assignment[i]))
                                       : 0.0;
      }
    }
    const auto it = std::max_element(far.begin(), far.end());
    const auto src = static_cast<std::size_t>(it - far.begin());
    auto r = m.row(src);
    std::copy(r.begin(), r.end(), next.row(j).begin());
    far[src] = -1.0;
  }
  return next;
}

}  // namespace

Clustering lloyd(const FeatureMatrix& m, const Centroids& init, std::size_t max_iters,
                 double tol) {
  if (init.n_dims != m.n_dims()) {
    throw ValidationError("lloyd: centroids have " + std::to_string(init.n_dims) +
                          " dims, features have " + std::to_string(m.n_dims()));
  }
  if (init.k < 1 || init.k > m.n_samples()) {
    throw ParameterError("lloyd: need 1 <= k <= n_samples initial centroids");
  }
  if (max_iters < 1) throw ParameterError("lloyd: max_iters must be >= 1");

  Clustering out;
  out.centroids = init;
  out.assignment = assign_nearest(m, out.centroids);
  out.per_cluster = cluster_stats(m, out.centroids, out.assignment);
  double current = total_inertia(out.per_cluster);
  out.inertia_history.push_back(current);

  for (std::size_t it = 0; it < max_iters; ++it) {
    Centroids next = update_centroids(m, out.centroids, out.assignment);
    auto assignment = assign_nearest(m, next);
    auto stats = cluster_stats(m, next, assignment);
    const double updated = total_inertia(stats);
    const bool unchanged = assignment == out.assignment;

    out.centroids = std::move(next);
    out.assignment = std::move(assignment);
    out.per_cluster = std::move(stats);
    out.inertia_history.push_back(updated);

    const double previous = current;
    current = updated;
    if (unchanged || previous == 0.0 || (previous - updated) < tol * previous) break;
  }
  return out;
}

Seed restart_seed(Seed seed, std::size_t restart) { return derive_seed(seed, restart); }

Clustering cluster(const FeatureMatrix& m, const ClusteringConfig& cfg) {
  cfg.validate(m.n_samples());
  std::optional<Clustering> best;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < cfg.n_restarts; ++r) {
    auto init = kmeanspp_seed(m, cfg.k, restart_seed(cfg.seed, r));
    auto candidate = lloyd(m, init, cfg.max_iters, cfg.tol);
    const double value = inertia(candidate);
    if (!best || value < best_inertia) {
      best_inertia = value;
      best = std::move(candidate);
    }
  }
  return std::move(*best);
}

Clustering clustering_from_assignment(const FeatureMatrix& m,
                                      std::span<const std::size_t> assignment,
                                      std::size_t k) {
  if (assignment.size() != m.n_samples()) {
    throw ValidationError("clustering: assignment length does not match sample count");
  }
  for (auto a : assignment) {
    if (a >= k) throw ValidationError("clustering: cluster index out of range");
  }
  Clustering out;
  std::vector<std::size_t> counts;
  out.centroids = member_means(m, assignment, k, counts);
  out.assignment.assign(assignment.begin(), assignment.end());
  out.per_cluster = cluster_stats(m, out.centroids, assignment);
  out.inertia_history.push_back(total_inertia(out.per_cluster));
  return out;
}

double inertia(const Clustering& c) { return total_inertia(c.per_cluster); }

namespace {

std::size_t cluster_count(std::span<const std::size_t> assignment) {
  std::size_t k = 0;
  for (auto a : assignment) k = std::max(k, a + 1);
  return k;
}

}  // namespace

double silhouette(const FeatureMatrix& m, std::span<const std::size_t> assignment) {
  const std::size_t n = m.n_samples();
  if (assignment.size() != n) {
    throw ValidationError("silhouette: assignment length does not match sample count");
  }
  const std::size_t k = cluster_count(assignment);
  std::vector<std::size_t> sizes(k, 0);
  for (auto a : assignment) ++sizes[a];
  if (std::count_if(sizes.begin(), sizes.end(), [](auto s) { return s > 0; }) < 2) {
    throw MetricError("silhouette: needs at least 2 non-empty clusters");
  }

  std::vector<double> scores(n, 0.0);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    std::vector<double> sums(k);
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t own = assignment[i];
      if (sizes[own] < 2) continue;
      std::fill(sums.begin(), sums.end(), 0.0);
      auto xi = m.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        sums[assignment[j]] += std::sqrt(squared_distance(xi, m.row(j)));
      }
      const double a = sums[own] / double(sizes[own] - 1);
      double b = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        if (c == own || sizes[c] == 0) continue;
        b = std::min(b, sums[c] / double(sizes[c]));
      }
      const double denom = std::max(a, b);
      scores[i] = denom > 0.0 ? (b - a) / denom : 0.0;
    }
  });
  double total = 0.0;
  for (double s : scores) total += s;
  return total / double(n);
}

double silhouette(const FeatureMatrix& m, const Clustering& c) {
  return silhouette(m, c.assignment);
}

double calinski_harabasz(const FeatureMatrix& m, std::span<const std::size_t> assignment) {
  const std::size_t n = m.n_samples();
  if (assignment.size() != n) {
    throw ValidationError("calinski_harabasz: assignment length does not match sample count");
  }
  const std::size_t k = cluster_count(assignment);
  std::vector<std::size_t> counts;
  const Centroids means = member_means(m, assignment, k, counts);
  const auto nonempty = static_cast<std::size_t>(
      std::count_if(counts.begin(), counts.end(), [](auto s) { return s > 0; }));
  if (nonempty < 2 || nonempty + 1 > n) {
    throw MetricError("calinski_harabasz: needs 2 <= non-empty clusters <= n_samples - 1");
  }

  std::vector<double> global(m.n_dims(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = m.row(i);
    for (std::size_t d = 0; d < x.size(); ++d) global[d] += x[d];
  }
  for (auto& v : global) v /= double(n);

  double between = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    between += double(counts[c]) * squared_distance(means.row(c), global);
  }
  double within = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    within += squared_distance(m.row(i), means.row(assignment[i]));
  }
  if (within == 0.0) return std::numeric_limits<double>::infinity();
  return (between / double(nonempty - 1)) / (within / double(n - nonempty));
}

double calinski_harabasz(const FeatureMatrix& m, const Clustering& c) {
  return calinski_harabasz(m, c.assignment);
}

FilterResult filter_clusters(const Clustering& c, const FilterPolicy& policy) {
  if (!(policy.quantile >= 0.0 && policy.quantile <= 1.0)) {
    throw ParameterError("filter: quantile must be in [0, 1]");
  }
  FilterResult out{c, 0, false};
  auto& stats = out.clustering.per_cluster;

  std::vector<double> msd;
  for (const auto& s : stats) {
    if (s.size > 0) msd.push_back(s.sum_sq_dist / double(s.size));
  }
  double threshold = std::numeric_limits<double>::infinity();
  if (!msd.empty()) {
    std::sort(msd.begin(), msd.end());
    const double pos = policy.quantile * double(msd.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, msd.size() - 1);
    threshold = msd[lo] + (pos - double(lo)) * (msd[hi] - msd[lo]);
  }

  std::optional<std::size_t> best;
  bool any_kept = false;
  for (std::size_t j = 0; j < stats.size(); ++j) {
    auto& s = stats[j];
    const double q = s.size ? s.sum_sq_dist / double(s.size) : 0.0;
    s.discarded = s.size < policy.min_size || (s.size > 0 && q > threshold);
    if (s.size > 0 && !s.discarded) any_kept = true;
    if (s.size > 0) {
      if (!best) {
        best = j;
      } else {
        const auto& b = stats[*best];
        const double bq = b.sum_sq_dist / double(b.size);
        if (q < bq || (q == bq && s.size > b.size)) best = j;
      }
    }
  }
  if (!any_kept && best) {
    stats[*best].discarded = false;
    out.kept_best = true;
  }
  for (const auto& s : stats) {
    if (s.size > 0 && s.discarded) ++out.n_discarded;
  }
  return out;
}

}  // namespace scplabel
