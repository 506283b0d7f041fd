#pragma once

#include "hkgf/training.hpp"

namespace hkgf {

// The seven classification metrics, as percents in [0, 100].
struct SingleMetrics {
  double auc = 0, acc = 0, f1 = 0, bac = 0, sen = 0, spe = 0, pre = 0;
  std::vector<std::string> warnings;  // degenerate denominators

  double by_name(const std::string& name) const;
};

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"auc", "acc", "f1", "bac",
                                                 "sen", "spe", "pre"};
  return names;
}

// Mann-Whitney pair counting with ties at 1/2; other metrics from the
// confusion matrix at `threshold` (score >= threshold predicts positive).
SingleMetrics compute_metrics(const std::vector<int>& labels, const std::vector<double>& scores,
                              double threshold = 0.5);

struct MetricsReport {
  struct Entry {
    std::string metric;
    double mean = 0;
    double std = 0;
    std::vector<double> per_repeat;
  };
  std::vector<Entry> entries;
  std::vector<std::string> warnings;

  const Entry& entry(const std::string& metric) const;
};

struct CvPlan {
  int folds = 5;
  int repeats = 5;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  bool stratified = true;

  void validate() const;
};

// Per repeat: stratified k-fold; held-out predictions pooled per repeat and
// scored once; mean/std reported across repeats. Deterministic per plan.
MetricsReport cross_validate(const Cohort& cohort, const ModelSpec& model_spec,
                             const TrainConfig& train_cfg, const CvPlan& plan);

struct TTestResult {
  double t = 0;
  double p = 1;
  double dof = 0;
};

// Welch's unequal-variance t-test, two-sided p via the Student-t CDF.
TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

struct RankedConnection {
  int roi_a = 0, roi_b = 0;  // roi_a < roi_b
  double p = 1;              // correlation route
  double t = 0;
  double score = 0;          // attention route: mean attention weight
};

// Per subject: correlations between ROI embedding rows; per ROI pair: Welch
// test across classes; significant pairs (p < 0.05) ranked by ascending p.
std::vector<RankedConnection> discriminative_connections_correlation(
    const std::vector<Matrix>& embeddings, const std::vector<int>& labels, int top_k = 15);

// Pairs ranked by mean symmetrized attention over the positive class.
std::vector<RankedConnection> discriminative_connections_attention(
    const std::vector<Matrix>& attention, const std::vector<int>& labels, int top_k = 15);

std::string metrics_to_json(const MetricsReport& report);
std::string metrics_table(const MetricsReport& report);

// Pearson correlations between the rows of one embedding matrix.
Matrix embedding_row_correlations(const Matrix& embedding);

}  // namespace hkgf
