#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "scplabel/error.hpp"
#include "scplabel/labeling.hpp"

using namespace scplabel;
using Rule = EnsembleDecision::Rule;

namespace {

PredictionSet preds(std::string id, std::vector<ClassId> labels,
                    std::vector<ClassId> space = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}) {
  return {std::move(id), {}, std::move(labels), std::move(space)};
}

Clustering clusters_of(std::vector<std::size_t> assignment, std::vector<bool> discarded) {
  Clustering c;
  c.per_cluster.resize(discarded.size());
  for (auto a : assignment) ++c.per_cluster[a].size;
  for (std::size_t j = 0; j < discarded.size(); ++j) c.per_cluster[j].discarded = discarded[j];
  c.assignment = std::move(assignment);
  return c;
}

}  // namespace

TEST_CASE("cluster mode label") {
  const auto p = preds("m", {3, 3, 1, 1, 2});
  const std::vector<std::size_t> all = {0, 1, 2, 3, 4};
  CHECK(cluster_mode_label(all, p) == 1);  // tie between 1 and 3
  const std::vector<std::size_t> some = {0, 1, 4};
  CHECK(cluster_mode_label(some, p) == 3);
  const std::vector<std::size_t> one = {4};
  CHECK(cluster_mode_label(one, p) == 2);
  CHECK_THROWS_AS(cluster_mode_label(std::vector<std::size_t>{}, p), ParameterError);
}

TEST_CASE("one-by-one examples") {
  CHECK(one_by_one(std::vector<ClassId>{5, 5, 7}) == EnsembleDecision{5, Rule::pair, 1});
  CHECK(one_by_one(std::vector<ClassId>{5, 7, 7}) == EnsembleDecision{7, Rule::pair, 2});
  CHECK(one_by_one(std::vector<ClassId>{5, 7, 9}) == EnsembleDecision{9, Rule::last, 0});
  CHECK(one_by_one(std::vector<ClassId>{5, 7, 5}) == EnsembleDecision{5, Rule::last, 0});
  CHECK(one_by_one(std::vector<ClassId>{4}) == EnsembleDecision{4, Rule::last, 0});
  CHECK_THROWS_AS(one_by_one(std::vector<ClassId>{}), ParameterError);
}

TEST_CASE("one-by-one matches the pairwise scan on every 3-model input") {
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int c = 0; c < 3; ++c) {
        const std::vector<ClassId> v = {a, b, c};
        const auto got = one_by_one(v);
        const auto want = oracle::one_by_one(v);
        CHECK(got.label == want.label);
        CHECK((got.rule == Rule::pair) == want.by_pair);
        if (want.by_pair) CHECK(got.pair_index == want.first_model);
      }
    }
  }
}

TEST_CASE("one-by-one properties on random inputs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng() % 6;
    std::vector<ClassId> v(n);
    for (auto& x : v) x = static_cast<ClassId>(rng() % 4);
    const auto d = one_by_one(v);
    const auto want = oracle::one_by_one(v);
    CHECK(d.label == want.label);

    // Later models cannot change a decision fixed by an earlier pair.
    if (d.rule == Rule::pair) {
      auto changed = v;
      for (std::size_t i = d.pair_index + 1; i < n; ++i) changed[i] = static_cast<ClassId>(rng() % 4);
      CHECK(one_by_one(changed) == d);
    }

    // Renaming classes renames the decision.
    std::vector<ClassId> renamed(n);
    for (std::size_t i = 0; i < n; ++i) renamed[i] = (v[i] * 3 + 1) % 4;
    const auto r = one_by_one(renamed);
    CHECK(r.label == (d.label * 3 + 1) % 4);
    CHECK(r.rule == d.rule);
    CHECK(r.pair_index == d.pair_index);
  }
}

TEST_CASE("ensemble over clusters") {
  const std::vector<PredictionSet> ps = {preds("a", {1, 1, 2}), preds("b", {2, 2, 2}),
                                         preds("c", {2, 1, 2})};
  const std::vector<std::size_t> members = {0, 1, 2};
  // Modes: a -> 1, b -> 2, c -> 2.
  CHECK(ensemble_cluster_label(members, ps) == EnsembleDecision{2, Rule::pair, 2});
}

TEST_CASE("inserting a copy of model 1 as model 2 decides at the first pair") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ClassId> v(1 + rng() % 5);
    for (auto& x : v) x = static_cast<ClassId>(rng() % 5);
    v.insert(v.begin() + 1, v[0]);
    CHECK(one_by_one(v) == EnsembleDecision{v[0], Rule::pair, 1});
  }
}

TEST_CASE("renaming classes across all models renames pseudo labels") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 30, k = 4;
    std::vector<std::size_t> assign(n);
    for (std::size_t i = 0; i < n; ++i) assign[i] = i % k;
    std::vector<PredictionSet> ps, renamed;
    for (int m = 0; m < 3; ++m) {
      // Each cluster gets a clear per-model majority so no mode ties occur.
      std::vector<ClassId> labels(n);
      std::vector<ClassId> major(k);
      for (auto& x : major) x = static_cast<ClassId>(rng() % 6);
      for (std::size_t i = 0; i < n; ++i) {
        labels[i] = i < 3 * k ? major[assign[i]] : static_cast<ClassId>(rng() % 6);
      }
      // Clusters hold 7 or 8 members: 3 fixed plus at most 5 random ones.
      std::vector<ClassId> space = {0, 1, 2, 3, 4, 5};
      ps.push_back(preds("m" + std::to_string(m), labels, space));
      for (auto& x : labels) x = 5 - x;
      renamed.push_back(preds("m" + std::to_string(m), labels, space));
    }
    const auto c = clusters_of(assign, std::vector<bool>(k, false));
    bool tie_free = true;
    for (const auto& members : c.members()) {
      for (const auto& p : ps) {
        std::vector<int> counts(6, 0);
        for (auto i : members) ++counts[p.labels[i]];
        auto sorted = counts;
        std::sort(sorted.rbegin(), sorted.rend());
        tie_free = tie_free && sorted[0] > sorted[1];
      }
    }
    if (!tie_free) continue;
    const auto a = assign_pseudo_labels(c, ps, "m0");
    const auto b = assign_pseudo_labels(c, renamed, "m0");
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(b.labels[i] == 5 - a.labels[i]);
      CHECK(a.labels[i] == a.labels[(i % k)]);  // constant within a cluster
    }
  }
}

TEST_CASE("pseudo labels broadcast kept clusters and fall back elsewhere") {
  // Nine members, six predicted correctly as 4.
  std::vector<ClassId> a = {4, 4, 4, 4, 4, 4, 1, 2, 3, 7, 8};
  std::vector<ClassId> b = a;
  const std::vector<PredictionSet> ps = {preds("a", a), preds("b", b)};
  const auto c = clusters_of({0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1}, {false, true});
  const auto pl = assign_pseudo_labels(c, ps, "b");
  for (std::size_t i = 0; i < 9; ++i) CHECK(pl.labels[i] == 4);
  CHECK(pl.labels[9] == 7);
  CHECK(pl.labels[10] == 8);
  CHECK(pl.provenance[0].to_string() == "cluster:0:pair1");
  CHECK(pl.provenance[9].to_string() == "fallback:b");
}

TEST_CASE("pseudo label provenance for disagreement") {
  const std::vector<PredictionSet> ps = {preds("a", {1, 1}), preds("b", {2, 2})};
  const auto pl = assign_pseudo_labels(clusters_of({0, 0}, {false}), ps, "a");
  CHECK(pl.labels == std::vector<ClassId>{2, 2});
  CHECK(pl.provenance[1].to_string() == "cluster:0:last");
}

TEST_CASE("pseudo label validation") {
  const auto c = clusters_of({0, 0}, {false});
  const std::vector<PredictionSet> ps = {preds("a", {1, 1})};
  CHECK_THROWS_AS(assign_pseudo_labels(c, ps, "missing"), ValidationError);
  const std::vector<PredictionSet> short_ps = {preds("a", {1})};
  CHECK_THROWS_AS(assign_pseudo_labels(c, short_ps, "a"), ValidationError);
  const std::vector<PredictionSet> out_of_space = {preds("a", {1, 12})};
  CHECK_THROWS_AS(assign_pseudo_labels(c, out_of_space, "a"), ValidationError);
  CHECK_THROWS_AS(assign_pseudo_labels(c, std::vector<PredictionSet>{}, "a"), ParameterError);
}
