// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "graphlog/metrics.hpp"
#include "graphlog/rng.hpp"
#include "oracles.hpp"

using namespace graphlog;

TEST_CASE("perfect ranking scores 1.0") {
  auto auc = roc_auc({0.9, 0.1}, {1, 0});
  REQUIRE(auc.has_value());
  CHECK(*auc == 1.0);
}

TEST_CASE("all-tied scores give 0.5") {
  auto auc = roc_auc({0.3, 0.3, 0.3, 0.3}, {1, 0, 1, 0});
  REQUIRE(auc.has_value());
  CHECK(*auc == 0.5);
}

TEST_CASE("single-class input is undefined") {
  CHECK(!roc_auc({0.1, 0.9}, {1, 1}).has_value());
  CHECK(!roc_auc({0.1, 0.9}, {0, 0}).has_value());
}

TEST_CASE("rank AUC equals the pairwise oracle exactly, ties included") {
  Rng rng(111);
  for (int trial = 0; trial < 200; ++trial) {
    Rng tr = rng.fork("t", trial);
    const size_t n = 20 + tr.below(180);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    bool both = false;
    for (size_t i = 0; i < n; ++i) {
      // Quantized scores force plenty of ties.
      scores[i] = std::floor(tr.uniform(0, 8)) / 4.0;
      labels[i] = tr.uniform() < 0.4 ? 1 : 0;
    }
    labels[0] = 0;
    labels[1] = 1;
    auto auc = roc_auc(scores, labels);
    REQUIRE(auc.has_value());
    CHECK(*auc == oracles::pairwise_auc(scores, labels));
    (void)both;
  }
}

TEST_CASE("AUC is invariant under strictly monotone transforms") {
  Rng rng(112);
  std::vector<double> scores(60);
  std::vector<int> labels(60);
  for (size_t i = 0; i < 60; ++i) {
    scores[i] = rng.uniform(-3, 3);
    labels[i] = i % 3 == 0 ? 1 : 0;
  }
  auto base = roc_auc(scores, labels);
  auto mono = scores;
  for (auto& s : mono) s = std::exp(0.5 * s) + 7.0;
  CHECK(*roc_auc(mono, labels) == *base);
  for (auto& s : mono) s = std::atan(s);
  CHECK(*roc_auc(mono, labels) == *base);
}

TEST_CASE("identical assignment gives NMI 1 and purity 1") {
  const std::vector<int32_t> labels = {0, 0, 1, 1, 2, 2};
  auto m = cluster_metrics(labels, labels);
  CHECK(m.nmi == doctest::Approx(1.0));
  CHECK(m.purity == doctest::Approx(1.0));
}

TEST_CASE("one cluster over balanced labels gives NMI 0") {
  const std::vector<int32_t> assign(8, 0);
  const std::vector<int32_t> labels = {0, 0, 0, 0, 1, 1, 1, 1};
  auto m = cluster_metrics(assign, labels);
  CHECK(m.nmi == doctest::Approx(0.0));
  CHECK(m.purity == doctest::Approx(0.5));
}

TEST_CASE("cluster metrics match the contingency oracle on random instances") {
  Rng rng(113);
  for (int trial = 0; trial < 30; ++trial) {
    Rng tr = rng.fork("t", trial);
    std::vector<int32_t> a(20), b(20);
    for (size_t i = 0; i < 20; ++i) {
      a[i] = static_cast<int32_t>(tr.below(4));
      b[i] = static_cast<int32_t>(tr.below(3));
    }
    auto m = cluster_metrics(a, b);
    auto [nmi, purity] = oracles::contingency_nmi_purity(a, b);
    CHECK(m.nmi == doctest::Approx(nmi).epsilon(1e-12));
    CHECK(m.purity == doctest::Approx(purity).epsilon(1e-12));
    CHECK(m.nmi >= 0.0);
    CHECK(m.nmi <= 1.0 + 1e-12);
    // purity >= 1 / num_classes
    CHECK(m.purity >= 1.0 / 3.0 - 1e-12);
  }
}

TEST_CASE("pca on centered 2-D data preserves pairwise distances") {
  Rng rng(114);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 30; ++i) pts.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
  // center
  double mx = 0, my = 0;
  for (auto& p : pts) {
    mx += p[0] / 30;
    my += p[1] / 30;
  }
  for (auto& p : pts) {
    p[0] -= mx;
    p[1] -= my;
  }
  auto proj = pca_project(pts);
  for (size_t i = 0; i < pts.size(); ++i) {
    for (size_t j = i + 1; j < pts.size(); ++j) {
      const double orig = std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
      const double now = std::hypot(proj[i][0] - proj[j][0], proj[i][1] - proj[j][1]);
      CHECK(std::abs(orig - now) < 1e-9);
    }
  }
}

TEST_CASE("rank-1 data leaves no variance for the second component") {
  Rng rng(115);
  std::vector<std::vector<double>> pts;
  const std::vector<double> dir = {0.6, -0.3, 0.9, 0.2};
  for (int i = 0; i < 25; ++i) {
    const double t = rng.uniform(-2, 2);
    pts.push_back({t * dir[0], t * dir[1], t * dir[2], t * dir[3]});
  }
  auto basis = pca_fit(pts);
  REQUIRE(basis.explained_variance.size() == 2);
  CHECK(basis.explained_variance[1] < 1e-10);
  // second projected coordinate carries (numerically) nothing
  auto proj = pca_apply(basis, pts);
  double var2 = 0;
  for (const auto& p : proj) var2 += p[1] * p[1];
  CHECK(var2 / 25.0 < 1e-10);
}

TEST_CASE("PC1 explained variance matches the power-iteration oracle") {
  Rng rng(116);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> p(5);
    for (auto& x : p) x = rng.uniform(-1, 1);
    p[0] *= 3.0;  // dominant direction
    pts.push_back(std::move(p));
  }
  auto basis = pca_fit(pts);
  const double oracle = oracles::power_iteration_top_variance(pts);
  CHECK(std::abs(basis.explained_variance[0] - oracle) < 1e-8);
}

TEST_CASE("component signs follow the largest-magnitude-positive convention") {
  Rng rng(117);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 40; ++i) pts.push_back({rng.uniform(-1, 1), rng.uniform(-4, 4), 0.0});
  auto basis = pca_fit(pts);
  for (const auto& comp : basis.components) {
    size_t arg = 0;
    for (size_t i = 1; i < comp.size(); ++i) {
      if (std::abs(comp[i]) > std::abs(comp[arg])) arg = i;
    }
    CHECK(comp[arg] > 0.0);
  }
}
