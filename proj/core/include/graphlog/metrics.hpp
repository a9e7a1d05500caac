// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace graphlog {

// Rank-sum ROC-AUC with average ranks for ties:
// P(score_pos > score_neg) + 0.5 P(tie). Empty when only one class is present.
std::optional<double> roc_auc(const std::vector<double>& scores,
                              const std::vector<int>& labels);

struct ClusterAgreement {
  double nmi = 0.0;     // arithmetic-mean normalization
  double purity = 0.0;
};

ClusterAgreement cluster_metrics(const std::vector<int32_t>& assignments,
                                 const std::vector<int32_t>& true_labels);

// Principal-component basis of a centered point set, via Jacobi
// eigendecomposition of the covariance matrix. Component signs follow a
// deterministic convention: the largest-magnitude entry of each component
// vector is positive.
struct PcaBasis {
  std::vector<double> mean;                    // d
  std::vector<std::vector<double>> components; // 2 x d (fewer if d < 2)
  std::vector<double> explained_variance;      // eigenvalues, matching order
};

PcaBasis pca_fit(const std::vector<std::vector<double>>& points);
std::vector<std::array<double, 2>> pca_apply(const PcaBasis& basis,
                                             const std::vector<std::vector<double>>& points);
// Fit + apply in one call.
std::vector<std::array<double, 2>> pca_project(const std::vector<std::vector<double>>& points);

}  // namespace graphlog
