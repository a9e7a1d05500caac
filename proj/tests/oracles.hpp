// SPDX-License-Identifier: Apache-2.0
//
// Independent test oracles. Everything here is deliberately written the dumb
// way (brute force, direct definitions, O(n^2) scans) and must stay
// independent of the library code paths it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <vector>

namespace oracles {

// |a - fd| / max(1, |a|, |fd|)
inline double rel_err(double analytic, double fd) {
  return std::abs(analytic - fd) / std::max({1.0, std::abs(analytic), std::abs(fd)});
}

// Central finite differences of a scalar function over one mutable buffer.
// `eval` must recompute the full pipeline from the current buffer contents.
inline std::vector<double> finite_difference(std::function<double()> eval,
                                             std::function<double(size_t)> get,
                                             std::function<void(size_t, double)> set,
                                             size_t count, double step = 1e-6) {
  std::vector<double> out(count);
  for (size_t i = 0; i < count; ++i) {
    const double orig = get(i);
    set(i, orig + step);
    const double hi = eval();
    set(i, orig - step);
    const double lo = eval();
    set(i, orig);
    out[i] = (hi - lo) / (2.0 * step);
  }
  return out;
}

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Minimum SSE over all partitions of the points into at most k clusters with
// every cluster holding >= min_size points; cluster centers are the means.
// Exponential; callers keep m <= 12, k <= 3.
inline double best_partition_sse(const std::vector<std::vector<double>>& pts, uint32_t k,
                                 uint32_t min_size = 2) {
  const size_t m = pts.size();
  const size_t d = pts[0].size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<uint32_t> assign(m, 0);
  const uint64_t total = [&] {
    uint64_t t = 1;
    for (size_t i = 0; i < m; ++i) t *= k;
    return t;
  }();
  for (uint64_t code = 0; code < total; ++code) {
    uint64_t c = code;
    for (size_t i = 0; i < m; ++i) {
      assign[i] = static_cast<uint32_t>(c % k);
      c /= k;
    }
    std::vector<uint32_t> counts(k, 0);
    for (uint32_t a : assign) ++counts[a];
    bool ok = true;
    for (uint32_t cnt : counts) {
      if (cnt > 0 && cnt < min_size) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    std::vector<std::vector<double>> means(k, std::vector<double>(d, 0.0));
    for (size_t i = 0; i < m; ++i) {
      for (size_t c2 = 0; c2 < d; ++c2) means[assign[i]][c2] += pts[i][c2];
    }
    for (uint32_t j = 0; j < k; ++j) {
      if (counts[j] == 0) continue;
      for (size_t c2 = 0; c2 < d; ++c2) means[j][c2] /= counts[j];
    }
    double sse = 0.0;
    for (size_t i = 0; i < m; ++i) sse += sq_dist(pts[i], means[assign[i]]);
    best = std::min(best, sse);
  }
  return best;
}

// SSE of a given assignment with centers recomputed as cluster means.
inline double partition_sse(const std::vector<std::vector<double>>& pts,
                            const std::vector<uint32_t>& assign) {
  uint32_t k = 0;
  for (uint32_t a : assign) k = std::max(k, a + 1);
  const size_t d = pts[0].size();
  std::vector<std::vector<double>> means(k, std::vector<double>(d, 0.0));
  std::vector<uint32_t> counts(k, 0);
  for (size_t i = 0; i < pts.size(); ++i) {
    ++counts[assign[i]];
    for (size_t c = 0; c < d; ++c) means[assign[i]][c] += pts[i][c];
  }
  for (uint32_t j = 0; j < k; ++j) {
    for (size_t c = 0; c < d; ++c) {
      if (counts[j]) means[j][c] /= counts[j];
    }
  }
  double sse = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) sse += sq_dist(pts[i], means[assign[i]]);
  return sse;
}

// O(n^2) pairwise AUC: P(score_pos > score_neg) + 0.5 P(tie).
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  uint64_t pairs = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

// NMI (arithmetic normalization) and purity straight from the contingency table.
inline std::pair<double, double> contingency_nmi_purity(const std::vector<int32_t>& a,
                                                        const std::vector<int32_t>& b) {
  const double n = static_cast<double>(a.size());
  std::map<int32_t, double> pa, pb;
  std::map<std::pair<int32_t, int32_t>, double> pab;
  for (size_t i = 0; i < a.size(); ++i) {
    pa[a[i]] += 1.0 / n;
    pb[b[i]] += 1.0 / n;
    pab[{a[i], b[i]}] += 1.0 / n;
  }
  double ha = 0, hb = 0, mi = 0;
  for (auto& [k, v] : pa) ha -= v * std::log(v);
  for (auto& [k, v] : pb) hb -= v * std::log(v);
  for (auto& [k, v] : pab) mi += v * std::log(v / (pa[k.first] * pb[k.second]));
  const double denom = 0.5 * (ha + hb);
  const double nmi = denom > 0 ? mi / denom : 1.0;
  std::map<int32_t, std::map<int32_t, int>> table;
  for (size_t i = 0; i < a.size(); ++i) ++table[a[i]][b[i]];
  double agree = 0;
  for (auto& [c, hist] : table) {
    int best = 0;
    for (auto& [l, cnt] : hist) best = std::max(best, cnt);
    agree += best;
  }
  return {nmi, agree / n};
}

// Dominant eigenvalue of the covariance of a centered point set.
inline double power_iteration_top_variance(const std::vector<std::vector<double>>& pts,
                                           int iters = 2000) {
  const size_t m = pts.size();
  const size_t d = pts[0].size();
  std::vector<double> mean(d, 0.0);
  for (const auto& p : pts) {
    for (size_t c = 0; c < d; ++c) mean[c] += p[c] / static_cast<double>(m);
  }
  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (const auto& p : pts) {
    for (size_t i = 0; i < d; ++i) {
      for (size_t j = 0; j < d; ++j) {
        cov[i][j] += (p[i] - mean[i]) * (p[j] - mean[j]) / static_cast<double>(m - 1);
      }
    }
  }
  std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d)));
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    std::vector<double> w(d, 0.0);
    for (size_t i = 0; i < d; ++i) {
      for (size_t j = 0; j < d; ++j) w[i] += cov[i][j] * v[j];
    }
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    for (size_t i = 0; i < d; ++i) v[i] = w[i] / norm;
    lambda = 0.0;
    for (size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (size_t j = 0; j < d; ++j) acc += cov[i][j] * v[j];
      lambda += v[i] * acc;
    }
  }
  return lambda;
}

// Plain cosine with the same clamping contract as the library.
inline double cos_sim(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  na = std::max(std::sqrt(na), 1e-12);
  nb = std::max(std::sqrt(nb), 1e-12);
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

}  // namespace oracles
