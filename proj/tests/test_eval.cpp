#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"
#include "scplabel/error.hpp"
#include "scplabel/eval.hpp"

using namespace scplabel;
using Labels = std::vector<ClassId>;

namespace {

// Adjusted Rand index by explicit pair counting.
double pair_counting_ari(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  double both = 0, in_a = 0, in_b = 0, pairs = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      both += sa && sb;
      in_a += sa;
      in_b += sb;
      pairs += 1;
    }
  }
  const double expected = in_a * in_b / pairs;
  const double max = 0.5 * (in_a + in_b);
  return (both - expected) / (max - expected);
}

}  // namespace

TEST_CASE("top-1 accuracy") {
  CHECK(top1_accuracy(Labels{1, 2, 3}, Labels{1, 2, 3}) == 1.0);
  CHECK(top1_accuracy(Labels{0, 0}, Labels{1, 1}) == 0.0);
  CHECK(top1_accuracy(Labels{1, 2, 3, 4}, Labels{1, 2, 3, 0}) == 0.75);
  CHECK_THROWS_AS(top1_accuracy(Labels{1}, Labels{1, 2}), ValidationError);
}

TEST_CASE("confusion matrix") {
  const Labels truth = {0, 0, 1, 2, 2, 2};
  const Labels pred = {0, 1, 1, 2, 0, 2};
  const auto cm = confusion_matrix(pred, truth, 3);
  CHECK(cm == ConfusionMatrix{{1, 1, 0}, {0, 1, 0}, {1, 0, 2}});
  CHECK_THROWS_AS(confusion_matrix(Labels{3}, Labels{0}, 3), ValidationError);
}

TEST_CASE("accuracy equals confusion trace over N") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 200, c = 2 + rng() % 5;
    Labels t(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<ClassId>(rng() % c);
      p[i] = static_cast<ClassId>(rng() % c);
    }
    const auto cm = confusion_matrix(p, t, c);
    std::size_t trace = 0;
    for (std::size_t k = 0; k < c; ++k) trace += cm[k][k];
    CHECK(top1_accuracy(p, t) == doctest::Approx(double(trace) / double(n)).epsilon(1e-15));

    // Reordering pairs consistently changes nothing.
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Labels t2(n), p2(n);
    for (std::size_t i = 0; i < n; ++i) {
      t2[i] = t[perm[i]];
      p2[i] = p[perm[i]];
    }
    CHECK(top1_accuracy(p2, t2) == top1_accuracy(p, t));
    CHECK(confusion_matrix(p2, t2, c) == cm);
  }
}

TEST_CASE("bias report") {
  const Labels truth = {0, 0, 0, 1, 1, 2};
  const Labels pred = {0, 0, 0, 0, 1, 0};
  const std::vector<std::size_t> train = {80, 15, 5};
  const auto r = bias_report(pred, truth, train, 3);
  CHECK(r.top1 == doctest::Approx(4.0 / 6.0));
  CHECK(r.recall == std::vector<double>{1.0, 0.5, 0.0});
  CHECK(r.support == std::vector<std::size_t>{3, 2, 1});
  CHECK(r.train_share[0] == doctest::Approx(0.8));
  CHECK(r.majority_class == 0);
  CHECK(r.majority_share == doctest::Approx(5.0 / 6.0));

  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["top1"].get<double>() == doctest::Approx(4.0 / 6.0));
  CHECK(j["per_class_recall"].size() == 3);
  CHECK(j["majority_class"] == 0);
  CHECK(r.to_text().find("recall") != std::string::npos);

  const auto zeros = bias_report(Labels{0, 0, 0, 0, 0, 0}, truth, train, 3);
  CHECK(zeros.majority_share == 1.0);
  CHECK(zeros.recall == std::vector<double>{1.0, 0.0, 0.0});

  // Without train counts the majority comes from the truth.
  const auto u = bias_report(pred, Labels{2, 2, 2, 1, 1, 0}, {}, 3);
  CHECK(u.majority_class == 2);
  CHECK(u.train_share.empty());
}

TEST_CASE("uniform random predictions give chance recall") {
  std::mt19937_64 rng(21);
  const std::size_t n = 20000, c = 5;
  Labels t(n), p(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = static_cast<ClassId>(rng() % c);
    p[i] = static_cast<ClassId>(rng() % c);
  }
  const auto r = bias_report(p, t, {}, c);
  const double chance = 1.0 / double(c);
  for (std::size_t k = 0; k < c; ++k) {
    const double sigma = std::sqrt(chance * (1 - chance) / double(r.support[k]));
    CHECK(std::abs(r.recall[k] - chance) <= 3 * sigma);
  }
}

TEST_CASE("adjusted rand index") {
  using A = std::vector<std::size_t>;
  CHECK(adjusted_rand_index(A{0, 0, 1, 1}, A{5, 5, 2, 2}) == doctest::Approx(1.0));
  CHECK(adjusted_rand_index(A{0, 0, 1, 1}, A{0, 1, 0, 1}) == doctest::Approx(-0.5));

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 5 + rng() % 60;
    A a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng() % 4;
      b[i] = rng() % 5;
    }
    CHECK(adjusted_rand_index(a, b) == doctest::Approx(pair_counting_ari(a, b)).epsilon(1e-9));
    CHECK(adjusted_rand_index(a, b) == doctest::Approx(adjusted_rand_index(b, a)));
  }
}
