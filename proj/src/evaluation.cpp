#include "hkgf/evaluation.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>
#include <sstream>

namespace hkgf {

using nlohmann::json;

double SingleMetrics::by_name(const std::string& name) const {
  if (name == "auc") return auc;
  if (name == "acc") return acc;
  if (name == "f1") return f1;
  if (name == "bac") return bac;
  if (name == "sen") return sen;
  if (name == "spe") return spe;
  if (name == "pre") return pre;
  throw ValidationError("unknown metric: " + name);
}

SingleMetrics compute_metrics(const std::vector<int>& labels, const std::vector<double>& scores,
                              double threshold) {
  require(labels.size() == scores.size(), "compute_metrics: labels/scores length mismatch");
  require(!labels.empty(), "compute_metrics: empty input");
  long long n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] == 0 || labels[i] == 1, "compute_metrics: labels must be 0/1");
    require(std::isfinite(scores[i]) && scores[i] >= 0.0 && scores[i] <= 1.0,
            "compute_metrics: scores must lie in [0, 1]");
    labels[i] == 1 ? ++n_pos : ++n_neg;
  }
  require(n_pos > 0 && n_neg > 0,
          "compute_metrics: AUC undefined for a single-class label vector");

  SingleMetrics m;

  // Pair counting, ties worth 1/2.
  double correct = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] != 0) continue;
      if (scores[i] > scores[j]) {
        correct += 1.0;
      } else if (scores[i] == scores[j]) {
        correct += 0.5;
      }
    }
  }
  m.auc = 100.0 * correct / (static_cast<double>(n_pos) * static_cast<double>(n_neg));

  long long tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int pred = scores[i] >= threshold ? 1 : 0;
    if (pred == 1 && labels[i] == 1) ++tp;
    if (pred == 0 && labels[i] == 0) ++tn;
    if (pred == 1 && labels[i] == 0) ++fp;
    if (pred == 0 && labels[i] == 1) ++fn;
  }
  auto ratio = [&m](long long num, long long den, const char* what) {
    if (den == 0) {
      m.warnings.push_back(std::string(what) + " undefined (zero denominator), reported as 0");
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.acc = 100.0 * static_cast<double>(tp + tn) / static_cast<double>(labels.size());
  m.sen = 100.0 * ratio(tp, tp + fn, "sensitivity");
  m.spe = 100.0 * ratio(tn, tn + fp, "specificity");
  m.pre = 100.0 * ratio(tp, tp + fp, "precision");
  m.bac = (m.sen + m.spe) / 2.0;
  if (m.pre + m.sen > 0.0) {
    m.f1 = 2.0 * m.pre * m.sen / (m.pre + m.sen);
  } else {
    m.warnings.push_back("f1 undefined (zero precision and sensitivity), reported as 0");
    m.f1 = 0.0;
  }
  return m;
}

const MetricsReport::Entry& MetricsReport::entry(const std::string& metric) const {
  for (const auto& e : entries) {
    if (e.metric == metric) return e;
  }
  throw ValidationError("metrics report has no entry for " + metric);
}

void CvPlan::validate() const {
  require(folds >= 2, "cv folds must be >= 2");
  require(repeats >= 1, "cv repeats must be >= 1");
  require(seeds.size() == static_cast<std::size_t>(repeats),
          "cv seeds list length must equal repeats");
}

namespace {

// Stratified assignment: shuffle within each class, deal round-robin.
std::vector<int> fold_assignment(const Cohort& cohort, int folds, std::uint64_t seed) {
  std::vector<int> fold(cohort.size(), -1);
  Rng rng(seed);
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<int> members;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      if (cohort[i].label == cls) members.push_back(static_cast<int>(i));
    }
    rng.shuffle(members);
    for (std::size_t k = 0; k < members.size(); ++k) {
      fold[static_cast<std::size_t>(members[k])] = static_cast<int>(k % static_cast<std::size_t>(folds));
    }
  }
  return fold;
}

}  // namespace

MetricsReport cross_validate(const Cohort& cohort, const ModelSpec& model_spec,
                             const TrainConfig& train_cfg, const CvPlan& plan) {
  plan.validate();
  model_spec.validate();
  train_cfg.validate();
  require(cohort.size() >= static_cast<std::size_t>(2 * plan.folds),
          "cross_validate: cohort too small for the fold count");

  struct Task {
    int repeat, fold;
  };
  std::vector<Task> tasks;
  std::vector<std::vector<int>> folds_per_repeat(static_cast<std::size_t>(plan.repeats));
  for (int r = 0; r < plan.repeats; ++r) {
    folds_per_repeat[static_cast<std::size_t>(r)] =
        fold_assignment(cohort, plan.folds, plan.seeds[static_cast<std::size_t>(r)]);
    for (int f = 0; f < plan.folds; ++f) {
      // every fold must contain both classes
      int pos = 0, neg = 0;
      for (std::size_t i = 0; i < cohort.size(); ++i) {
        if (folds_per_repeat[static_cast<std::size_t>(r)][i] == f) {
          cohort[i].label == 1 ? ++pos : ++neg;
        }
      }
      if (pos == 0 || neg == 0) {
        throw ValidationError("repeat " + std::to_string(r) + " fold " + std::to_string(f) +
                              " contains a single class; cannot evaluate");
      }
      tasks.push_back({r, f});
    }
  }

  // scores[i] = P(label 1) for subject i when it was held out, per repeat.
  std::vector<std::vector<double>> scores(
      static_cast<std::size_t>(plan.repeats),
      std::vector<double>(cohort.size(), std::numeric_limits<double>::quiet_NaN()));

  parallel_for_tasks(static_cast<int>(tasks.size()), parallelism_width(), [&](int ti) {
    const Task task = tasks[static_cast<std::size_t>(ti)];
    const auto& fold = folds_per_repeat[static_cast<std::size_t>(task.repeat)];
    Cohort train_set;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      if (fold[i] != task.fold) train_set.push_back(cohort[i]);
    }
    TrainConfig cfg = train_cfg;
    cfg.seed = plan.seeds[static_cast<std::size_t>(task.repeat)] * 1000ULL +
               static_cast<std::uint64_t>(task.fold);
    Model model(model_spec, cfg.seed);
    train(model, train_set, cfg);
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      if (fold[i] == task.fold) {
        scores[static_cast<std::size_t>(task.repeat)][i] = model.forward(cohort[i]).probs(1);
      }
    }
  });

  MetricsReport report;
  std::vector<SingleMetrics> per_repeat;
  for (int r = 0; r < plan.repeats; ++r) {
    std::vector<int> labels;
    std::vector<double> sc;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      const double s = scores[static_cast<std::size_t>(r)][i];
      require(std::isfinite(s), "internal: subject missing a held-out prediction");
      labels.push_back(cohort[i].label);
      sc.push_back(s);
    }
    SingleMetrics m = compute_metrics(labels, sc);
    for (const auto& w : m.warnings) {
      report.warnings.push_back("repeat " + std::to_string(r) + ": " + w);
    }
    per_repeat.push_back(std::move(m));
  }

  for (const auto& name : metric_names()) {
    MetricsReport::Entry e;
    e.metric = name;
    for (const auto& m : per_repeat) e.per_repeat.push_back(m.by_name(name));
    const double n = static_cast<double>(e.per_repeat.size());
    e.mean = std::accumulate(e.per_repeat.begin(), e.per_repeat.end(), 0.0) / n;
    if (e.per_repeat.size() >= 2) {
      double ss = 0.0;
      for (double v : e.per_repeat) ss += (v - e.mean) * (v - e.mean);
      e.std = std::sqrt(ss / (n - 1.0));
    }
    report.entries.push_back(std::move(e));
  }
  return report;
}

TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() >= 2 && b.size() >= 2, "welch_t_test: each sample needs >= 2 values");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / na;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / nb;
  double va = 0.0, vb = 0.0;
  for (double x : a) va += (x - ma) * (x - ma);
  for (double x : b) vb += (x - mb) * (x - mb);
  va /= na - 1.0;
  vb /= nb - 1.0;

  const double se2 = va / na + vb / nb;
  TTestResult r;
  if (se2 <= 0.0) {
    if (ma == mb) {
      r.t = 0.0;
      r.p = 1.0;
      r.dof = na + nb - 2.0;
      return r;
    }
    r.t = ma > mb ? std::numeric_limits<double>::infinity()
                  : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    r.dof = na + nb - 2.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.dof = se2 * se2 /
          ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
  const boost::math::students_t dist(r.dof);
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

Matrix embedding_row_correlations(const Matrix& embedding) {
  const int n = static_cast<int>(embedding.rows());
  require(embedding.cols() >= 3, "embedding_row_correlations: need >= 3 feature dims");
  Matrix corr = Matrix::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double r = pearson(embedding.row(i).transpose(), embedding.row(j).transpose());
      corr(i, j) = r;
      corr(j, i) = r;
    }
  }
  return corr;
}

std::vector<RankedConnection> discriminative_connections_correlation(
    const std::vector<Matrix>& embeddings, const std::vector<int>& labels, int top_k) {
  require(embeddings.size() == labels.size(),
          "discriminative_connections: embeddings/labels length mismatch");
  require(!embeddings.empty(), "discriminative_connections: empty input");
  require(top_k >= 1, "top_k must be >= 1");
  const int n = static_cast<int>(embeddings.front().rows());

  std::vector<Matrix> corr;
  corr.reserve(embeddings.size());
  for (const auto& e : embeddings) {
    require(e.rows() == n, "discriminative_connections: inconsistent ROI counts");
    corr.push_back(embedding_row_correlations(e));
  }

  std::vector<RankedConnection> hits;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      std::vector<double> neg, pos;
      for (std::size_t s = 0; s < corr.size(); ++s) {
        (labels[s] == 1 ? pos : neg).push_back(corr[s](i, j));
      }
      require(pos.size() >= 2 && neg.size() >= 2,
              "discriminative_connections: each class needs >= 2 subjects");
      const TTestResult t = welch_t_test(pos, neg);
      if (t.p < 0.05) {
        hits.push_back(RankedConnection{i, j, t.p, t.t, 0.0});
      }
    }
  }
  std::sort(hits.begin(), hits.end(), [](const RankedConnection& a, const RankedConnection& b) {
    if (a.p != b.p) return a.p < b.p;
    if (a.roi_a != b.roi_a) return a.roi_a < b.roi_a;
    return a.roi_b < b.roi_b;
  });
  if (hits.size() > static_cast<std::size_t>(top_k)) hits.resize(static_cast<std::size_t>(top_k));
  return hits;
}

std::vector<RankedConnection> discriminative_connections_attention(
    const std::vector<Matrix>& attention, const std::vector<int>& labels, int top_k) {
  require(attention.size() == labels.size(),
          "discriminative_connections_attention: attention/labels length mismatch");
  require(top_k >= 1, "top_k must be >= 1");
  if (attention.empty()) {
    throw ValidationError(
        "attention route requires per-subject attention matrices (hkgat model only)");
  }
  const int n = static_cast<int>(attention.front().rows());
  Matrix mean = Matrix::Zero(n, n);
  int n_pos = 0;
  for (std::size_t s = 0; s < attention.size(); ++s) {
    require(attention[s].rows() == n && attention[s].cols() == n,
            "attention matrices must be square and consistent");
    if (labels[s] == 1) {
      mean += attention[s];
      ++n_pos;
    }
  }
  require(n_pos > 0, "attention route needs at least one positive-class subject");
  mean /= static_cast<double>(n_pos);
  const Matrix sym = 0.5 * (mean + mean.transpose());

  std::vector<RankedConnection> ranked;
  ranked.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      ranked.push_back(RankedConnection{i, j, 1.0, 0.0, sym(i, j)});
    }
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const RankedConnection& a, const RankedConnection& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.roi_a != b.roi_a) return a.roi_a < b.roi_a;
              return a.roi_b < b.roi_b;
            });
  if (ranked.size() > static_cast<std::size_t>(top_k))
    ranked.resize(static_cast<std::size_t>(top_k));
  return ranked;
}

std::string metrics_to_json(const MetricsReport& report) {
  json out = json::array();
  for (const auto& e : report.entries) {
    out.push_back({{"metric", e.metric},
                   {"mean", e.mean},
                   {"std", e.std},
                   {"per_repeat", e.per_repeat}});
  }
  json doc = {{"metrics", out}, {"warnings", report.warnings}};
  return doc.dump(2) + "\n";
}

std::string metrics_table(const MetricsReport& report) {
  std::ostringstream os;
  os << "metric   mean    std\n";
  for (const auto& e : report.entries) {
    char line[64];
    std::snprintf(line, sizeof(line), "%-6s %6.2f %6.2f\n", e.metric.c_str(), e.mean, e.std);
    os << line;
  }
  return os.str();
}

}  // namespace hkgf
