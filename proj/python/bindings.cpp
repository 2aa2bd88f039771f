// Python bindings over the core library. Feature matrices travel as 2-D
// float64 numpy arrays; sample ids are generated when none are given.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "scplabel/classifier.hpp"
#include "scplabel/clustering.hpp"
#include "scplabel/error.hpp"
#include "scplabel/eval.hpp"
#include "scplabel/features.hpp"
#include "scplabel/labeling.hpp"
#include "scplabel/parallel.hpp"
#include "scplabel/synthgen.hpp"

namespace py = pybind11;
using namespace scplabel;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

FeatureMatrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw ParameterError("expected a 2-D array");
  const auto n = static_cast<std::size_t>(a.shape(0));
  const auto d = static_cast<std::size_t>(a.shape(1));
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i);
  return FeatureMatrix(std::move(ids), d, std::vector<double>(a.data(), a.data() + n * d));
}

Array to_array(const FeatureMatrix& m) {
  Array out({m.n_samples(), m.n_dims()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

template <class T>
py::array_t<T> vec_array(const std::vector<T>& v) {
  py::array_t<T> out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict clustering_dict(const Clustering& c) {
  Array centroids({c.centroids.k, c.centroids.n_dims});
  std::copy(c.centroids.data.begin(), c.centroids.data.end(), centroids.mutable_data());
  std::vector<std::size_t> sizes;
  std::vector<bool> discarded;
  for (const auto& s : c.per_cluster) {
    sizes.push_back(s.size);
    discarded.push_back(s.discarded);
  }
  py::dict d;
  d["assignment"] = vec_array(c.assignment);
  d["centroids"] = centroids;
  d["sizes"] = vec_array(sizes);
  d["discarded"] = discarded;
  d["inertia"] = inertia(c);
  d["inertia_history"] = c.inertia_history;
  return d;
}

}  // namespace

PYBIND11_MODULE(_scplabel, mod) {
  mod.doc() = "Scene-clustering pseudo-labeling core";

  auto base = py::register_exception<Error>(mod, "Error", PyExc_RuntimeError);
  py::register_exception<ParameterError>(mod, "ParameterError", base.ptr());
  py::register_exception<ValidationError>(mod, "ValidationError", base.ptr());
  py::register_exception<FormatError>(mod, "FormatError", base.ptr());
  py::register_exception<CorruptionError>(mod, "CorruptionError", base.ptr());
  py::register_exception<MetricError>(mod, "MetricError", base.ptr());
  py::register_exception<GenerationError>(mod, "GenerationError", base.ptr());
  py::register_exception<IoError>(mod, "IoError", base.ptr());

  mod.def("set_num_threads", &set_num_threads, py::arg("n"));
  mod.def("num_threads", &num_threads);

  mod.def(
      "l2_normalize",
      [](const Array& x) { return to_array(l2_normalize(to_matrix(x)).matrix); }, py::arg("x"));

  mod.def(
      "knn",
      [](const Array& x, std::size_t k) {
        const auto t = knn(to_matrix(x), k);
        const std::size_t n = t.index.size() / k;
        py::array_t<std::size_t> idx({n, k});
        Array sim({n, k});
        std::copy(t.index.begin(), t.index.end(), idx.mutable_data());
        std::copy(t.similarity.begin(), t.similarity.end(), sim.mutable_data());
        return py::make_tuple(idx, sim);
      },
      py::arg("x"), py::arg("k"));

  mod.def(
      "dba",
      [](const Array& x, std::size_t k1, const std::string& weighting) {
        return to_array(dba(to_matrix(x), {k1, parse_dba_weighting(weighting)}));
      },
      py::arg("x"), py::arg("k1") = 1, py::arg("weighting") = "similarity");

  mod.def(
      "cluster",
      [](const Array& x, std::size_t k, Seed seed, std::size_t max_iters, double tol,
         std::size_t n_restarts) {
        const auto m = to_matrix(x);
        ClusteringConfig cfg{k, max_iters, tol, seed, n_restarts};
        return clustering_dict(cluster(m, cfg));
      },
      py::arg("x"), py::arg("k") = 80, py::arg("seed") = 0, py::arg("max_iters") = 100,
      py::arg("tol") = 1e-6, py::arg("n_restarts") = 3);

  mod.def(
      "filter_clusters",
      [](const Array& x, const std::vector<std::size_t>& assignment, double quantile,
         std::size_t min_size) {
        const auto m = to_matrix(x);
        std::size_t k = 0;
        for (auto a : assignment) k = std::max(k, a + 1);
        const auto r = filter_clusters(clustering_from_assignment(m, assignment, k),
                                       {quantile, min_size});
        return clustering_dict(r.clustering);
      },
      py::arg("x"), py::arg("assignment"), py::arg("quantile") = 0.9, py::arg("min_size") = 2);

  mod.def(
      "silhouette",
      [](const Array& x, const std::vector<std::size_t>& a) { return silhouette(to_matrix(x), a); },
      py::arg("x"), py::arg("assignment"));
  mod.def(
      "calinski_harabasz",
      [](const Array& x, const std::vector<std::size_t>& a) {
        return calinski_harabasz(to_matrix(x), a);
      },
      py::arg("x"), py::arg("assignment"));

  mod.def(
      "one_by_one",
      [](const std::vector<ClassId>& labels) {
        const auto d = one_by_one(labels);
        return py::make_tuple(d.label, d.rule == EnsembleDecision::Rule::pair ? "pair" : "last",
                              d.pair_index);
      },
      py::arg("model_labels"));

  mod.def(
      "assign_pseudo_labels",
      [](const std::vector<std::size_t>& assignment, const std::vector<bool>& discarded,
         const std::vector<std::vector<ClassId>>& predictions, std::size_t fallback,
         std::vector<ClassId> label_space) {
        Clustering c;
        c.assignment = assignment;
        c.per_cluster.resize(discarded.size());
        for (std::size_t j = 0; j < discarded.size(); ++j) c.per_cluster[j].discarded = discarded[j];
        for (auto a : assignment) {
          if (a >= c.per_cluster.size()) throw ValidationError("cluster id without a discarded flag");
          ++c.per_cluster[a].size;
        }
        if (label_space.empty()) {
          ClassId hi = 0;
          for (const auto& p : predictions) {
            for (auto y : p) hi = std::max(hi, y);
          }
          for (ClassId y = 0; y <= hi; ++y) label_space.push_back(y);
        }
        std::vector<PredictionSet> preds;
        for (std::size_t i = 0; i < predictions.size(); ++i) {
          preds.push_back({"model" + std::to_string(i), {}, predictions[i], label_space});
        }
        if (fallback >= preds.size()) throw ParameterError("fallback index out of range");
        const auto out = assign_pseudo_labels(c, preds, preds[fallback].model_id);
        std::vector<std::string> prov;
        for (const auto& p : out.provenance) prov.push_back(p.to_string());
        return py::make_tuple(vec_array(out.labels), prov);
      },
      py::arg("assignment"), py::arg("discarded"), py::arg("predictions"),
      py::arg("fallback") = 0, py::arg("label_space") = std::vector<ClassId>{});

  mod.def(
      "softmax", [](const std::vector<double>& z) { return softmax(z); }, py::arg("z"));

  mod.def("top1_accuracy",
          [](const std::vector<ClassId>& p, const std::vector<ClassId>& t) {
            return top1_accuracy(p, t);
          });
  mod.def("adjusted_rand_index",
          [](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
            return adjusted_rand_index(a, b);
          });

  mod.def(
      "synth",
      [](Seed seed, std::size_t n_classes, std::vector<std::size_t> class_counts,
         std::size_t total_samples, std::size_t scene_min, std::size_t scene_max,
         std::size_t n_dims, double class_sep, double scene_sep, double distractor_std) {
        SynthConfig cfg;
        cfg.seed = seed;
        cfg.n_classes = n_classes;
        cfg.class_counts = std::move(class_counts);
        cfg.total_samples = total_samples;
        cfg.scene_min = scene_min;
        cfg.scene_max = scene_max;
        cfg.n_dims = n_dims;
        cfg.class_sep = class_sep;
        cfg.scene_sep = scene_sep;
        cfg.distractor_std = distractor_std;
        const auto ds = generate(cfg);
        py::dict d;
        d["features"] = to_array(ds.data.features);
        d["labels"] = vec_array(ds.data.labels);
        d["scenes"] = vec_array(ds.scene_assignment());
        d["ids"] = ds.data.features.sample_ids();
        return d;
      },
      py::arg("seed") = 0, py::arg("n_classes") = 10,
      py::arg("class_counts") = std::vector<std::size_t>{}, py::arg("total_samples") = 2000,
      py::arg("scene_min") = 8, py::arg("scene_max") = 12, py::arg("n_dims") = 64,
      py::arg("class_sep") = 6.0, py::arg("scene_sep") = 1.5, py::arg("distractor_std") = 1.0);

  mod.def(
      "simulate_predictions",
      [](const std::vector<ClassId>& truth, double accuracy, Seed seed,
         std::vector<ClassId> label_space) {
        return vec_array(generate_predictions(truth, accuracy, seed, std::move(label_space)).labels);
      },
      py::arg("truth"), py::arg("accuracy"), py::arg("seed"), py::arg("label_space"));
}
