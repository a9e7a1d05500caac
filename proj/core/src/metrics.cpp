// SPDX-License-Identifier: Apache-2.0
#include "graphlog/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace graphlog {

std::optional<double> roc_auc(const std::vector<double>& scores,
                              const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("roc_auc: scores/labels length mismatch");
  }
  size_t n_pos = 0, n_neg = 0;
  for (int l : labels) {
    if (l == 1) ++n_pos;
    else if (l == 0) ++n_neg;
    else throw std::invalid_argument("roc_auc: labels must be 0 or 1");
  }
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tie groups; ranks are 1-based.
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

ClusterAgreement cluster_metrics(const std::vector<int32_t>& assignments,
                                 const std::vector<int32_t>& true_labels) {
  if (assignments.size() != true_labels.size() || assignments.empty()) {
    throw std::invalid_argument("cluster_metrics: bad input sizes");
  }
  const double n = static_cast<double>(assignments.size());
  std::map<int32_t, double> pa, pb;
  std::map<std::pair<int32_t, int32_t>, double> pab;
  for (size_t i = 0; i < assignments.size(); ++i) {
    pa[assignments[i]] += 1.0;
    pb[true_labels[i]] += 1.0;
    pab[{assignments[i], true_labels[i]}] += 1.0;
  }
  double h_a = 0.0, h_b = 0.0, mi = 0.0;
  for (auto& [k, v] : pa) {
    v /= n;
    h_a -= v * std::log(v);
  }
  for (auto& [k, v] : pb) {
    v /= n;
    h_b -= v * std::log(v);
  }
  for (auto& [k, v] : pab) {
    v /= n;
    mi += v * std::log(v / (pa[k.first] * pb[k.second]));
  }
  ClusterAgreement out;
  const double denom = 0.5 * (h_a + h_b);
  out.nmi = denom > 0.0 ? std::max(0.0, mi / denom) : 1.0;

  std::map<int32_t, std::map<int32_t, size_t>> by_cluster;
  for (size_t i = 0; i < assignments.size(); ++i) {
    ++by_cluster[assignments[i]][true_labels[i]];
  }
  size_t agree = 0;
  for (const auto& [c, hist] : by_cluster) {
    size_t best = 0;
    for (const auto& [lbl, cnt] : hist) best = std::max(best, cnt);
    agree += best;
  }
  out.purity = static_cast<double>(agree) / n;
  return out;
}

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// eigenvalues (descending) with eigenvectors as rows of `vectors`.
void jacobi_eigen(std::vector<std::vector<double>> a, std::vector<double>& values,
                  std::vector<std::vector<double>>& vectors) {
  const size_t d = a.size();
  std::vector<std::vector<double>> v(d, std::vector<double>(d, 0.0));
  for (size_t i = 0; i < d; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (size_t p = 0; p < d; ++p) {
      for (size_t q = p + 1; q < d; ++q) off += a[p][q] * a[p][q];
    }
    if (off < 1e-24) break;
    for (size_t p = 0; p < d; ++p) {
      for (size_t q = p + 1; q < d; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (size_t i = 0; i < d; ++i) {
          const double aip = a[i][p], aiq = a[i][q];
          a[i][p] = c * aip - s * aiq;
          a[i][q] = s * aip + c * aiq;
        }
        for (size_t i = 0; i < d; ++i) {
          const double api = a[p][i], aqi = a[q][i];
          a[p][i] = c * api - s * aqi;
          a[q][i] = s * api + c * aqi;
        }
        for (size_t i = 0; i < d; ++i) {
          const double vip = v[i][p], viq = v[i][q];
          v[i][p] = c * vip - s * viq;
          v[i][q] = s * vip + c * viq;
        }
      }
    }
  }
  std::vector<size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t x, size_t y) { return a[x][x] > a[y][y]; });
  values.resize(d);
  vectors.assign(d, std::vector<double>(d));
  for (size_t r = 0; r < d; ++r) {
    values[r] = a[order[r]][order[r]];
    for (size_t i = 0; i < d; ++i) vectors[r][i] = v[i][order[r]];
  }
}

}  // namespace

PcaBasis pca_fit(const std::vector<std::vector<double>>& points) {
  if (points.empty()) throw std::invalid_argument("pca_fit: empty point set");
  const size_t m = points.size();
  const size_t d = points[0].size();
  PcaBasis basis;
  basis.mean.assign(d, 0.0);
  for (const auto& p : points) {
    for (size_t c = 0; c < d; ++c) basis.mean[c] += p[c];
  }
  for (size_t c = 0; c < d; ++c) basis.mean[c] /= static_cast<double>(m);

  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  const double denom = m > 1 ? static_cast<double>(m - 1) : 1.0;
  for (const auto& p : points) {
    for (size_t i = 0; i < d; ++i) {
      const double xi = p[i] - basis.mean[i];
      for (size_t j = i; j < d; ++j) {
        cov[i][j] += xi * (p[j] - basis.mean[j]) / denom;
      }
    }
  }
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j < i; ++j) cov[i][j] = cov[j][i];
  }

  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
  jacobi_eigen(cov, values, vectors);

  const size_t ncomp = std::min<size_t>(2, d);
  for (size_t k = 0; k < ncomp; ++k) {
    auto comp = vectors[k];
    // Deterministic sign: largest-magnitude entry positive.
    size_t arg = 0;
    for (size_t i = 1; i < d; ++i) {
      if (std::abs(comp[i]) > std::abs(comp[arg])) arg = i;
    }
    if (comp[arg] < 0.0) {
      for (auto& x : comp) x = -x;
    }
    basis.components.push_back(std::move(comp));
    basis.explained_variance.push_back(values[k]);
  }
  return basis;
}

std::vector<std::array<double, 2>> pca_apply(const PcaBasis& basis,
                                             const std::vector<std::vector<double>>& points) {
  std::vector<std::array<double, 2>> out(points.size(), {0.0, 0.0});
  for (size_t i = 0; i < points.size(); ++i) {
    for (size_t k = 0; k < basis.components.size(); ++k) {
      double dot = 0.0;
      for (size_t c = 0; c < basis.mean.size(); ++c) {
        dot += (points[i][c] - basis.mean[c]) * basis.components[k][c];
      }
      out[i][k] = dot;
    }
  }
  return out;
}

std::vector<std::array<double, 2>> pca_project(const std::vector<std::vector<double>>& points) {
  return pca_apply(pca_fit(points), points);
}

}  // namespace graphlog
