#include "scplabel/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "scplabel/error.hpp"
#include "scplabel/parallel.hpp"

namespace scplabel {

FeatureMatrix::FeatureMatrix(std::vector<std::string> sample_ids,
                             std::size_t n_dims, std::vector<double> data)
    : n_dims_(n_dims), data_(std::move(data)), ids_(std::move(sample_ids)) {
  if (data_.size() != ids_.size() * n_dims_) {
    throw ValidationError("feature matrix: expected " +
                          std::to_string(ids_.size() * n_dims_) +
                          " values, got " + std::to_string(data_.size()));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw ValidationError("feature matrix: non-finite value in row " +
                            std::to_string(n_dims_ ? i / n_dims_ : 0));
    }
  }
  std::unordered_set<std::string_view> seen;
  seen.reserve(ids_.size());
  for (const auto& id : ids_) {
    if (!seen.insert(id).second) {
      throw ValidationError("feature matrix: duplicate sample id '" + id + "'");
    }
  }
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> indices) const {
  std::vector<std::string> ids;
  std::vector<double> data;
  ids.reserve(indices.size());
  data.reserve(indices.size() * n_dims_);
  for (auto i : indices) {
    ids.push_back(ids_.at(i));
    auto r = row(i);
    data.insert(data.end(), r.begin(), r.end());
  }
  return FeatureMatrix(std::move(ids), n_dims_, std::move(data));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += a[d] * b[d];
  return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

namespace {

// Returns false for an all-zero row, which is left untouched.
bool normalize_row(std::span<double> r) {
  const double norm = std::sqrt(dot(r, r));
  if (norm == 0.0) return false;
  for (auto& v : r) v /= norm;
  return true;
}

}  // namespace

NormalizeResult l2_normalize(const FeatureMatrix& m) {
  NormalizeResult out{m, 0};
  for (std::size_t i = 0; i < out.matrix.n_samples(); ++i) {
    if (!normalize_row(out.matrix.row(i))) ++out.zero_rows;
  }
  return out;
}

NeighborTable knn(const FeatureMatrix& m, std::size_t k) {
  const std::size_t n = m.n_samples();
  if (k < 1 || k + 1 > n) {
    throw ParameterError("knn: k must be in [1, n_samples - 1], got k=" +
                         std::to_string(k) + " with n_samples=" +
                         std::to_string(n));
  }

  NeighborTable table;
  table.k = k;
  table.index.resize(n * k);
  table.similarity.resize(n * k);

  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> order(n - 1);
    std::vector<double> sims(n);
    for (std::size_t i = begin; i < end; ++i) {
      auto xi = m.row(i);
      for (std::size_t j = 0; j < n; ++j) sims[j] = dot(xi, m.row(j));
      std::size_t w = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) order[w++] = j;
      }
      std::partial_sort(order.begin(), order.begin() + static_cast<long>(k),
                        order.end(), [&](std::size_t a, std::size_t b) {
                          if (sims[a] != sims[b]) return sims[a] > sims[b];
                          return a < b;
                        });
      for (std::size_t r = 0; r < k; ++r) {
        table.index[i * k + r] = order[r];
        table.similarity[i * k + r] = sims[order[r]];
      }
    }
  });
  return table;
}

FeatureMatrix dba(const FeatureMatrix& m, const DbaConfig& cfg) {
  const NeighborTable nn = knn(m, cfg.k1);
  const std::size_t dims = m.n_dims();
  std::vector<double> out(m.data().size());

  parallel_for(m.n_samples(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      std::span<double> acc(out.data() + i * dims, dims);
      const double self_w =
          cfg.weighting == DbaWeighting::uniform ? 1.0 / double(cfg.k1 + 1) : 1.0;
      auto xi = m.row(i);
      for (std::size_t d = 0; d < dims; ++d) acc[d] = self_w * xi[d];

      auto ids = nn.neighbors(i);
      auto sims = nn.similarities(i);
      for (std::size_t r = 0; r < ids.size(); ++r) {
        const double w = cfg.weighting == DbaWeighting::uniform
                             ? self_w
                             : std::clamp(sims[r], 0.0, 1.0);
        if (w == 0.0) continue;
        auto xj = m.row(ids[r]);
        for (std::size_t d = 0; d < dims; ++d) acc[d] += w * xj[d];
      }
      normalize_row(acc);
    }
  });
  return FeatureMatrix(m.sample_ids(), dims, std::move(out));
}

DbaWeighting parse_dba_weighting(const std::string& name) {
  if (name == "similarity") return DbaWeighting::similarity;
  if (name == "uniform") return DbaWeighting::uniform;
  throw ParameterError("unknown DBA weighting '" + name +
                       "' (expected similarity or uniform)");
}

std::string to_string(DbaWeighting w) {
  return w == DbaWeighting::uniform ? "uniform" : "similarity";
}

}  // namespace scplabel
