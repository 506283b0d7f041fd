#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hkgf/common.hpp"

namespace hkgf {

enum class Modality { kFc, kSc, kAsl, kCoupling };

std::string to_string(Modality m);

struct TimeSeriesMatrix {
  Matrix values;  // N rois x T timepoints
  std::vector<std::string> roi_labels;  // optional, empty or size N

  void validate() const;
};

struct ConnectivityGraph {
  Matrix adjacency;  // N x N, 0 = absent edge
  Matrix features;   // N x D, row j = node-j feature
  Modality modality = Modality::kFc;

  int num_nodes() const { return static_cast<int>(adjacency.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }
  void validate() const;
};

struct Subject {
  std::string id;
  std::map<Modality, ConnectivityGraph> graphs;
  int label = 0;  // 0 = negative/CN, 1 = positive

  const ConnectivityGraph& graph(Modality m) const;
  int num_rois() const;
};

using Cohort = std::vector<Subject>;

// Pearson correlation; zero-variance series correlate 0.
double pearson(const Vector& x, const Vector& y);

// FC graph: features = full correlation matrix, adjacency keeps the top
// keep_fraction of off-diagonal entries ranked by |r| (symmetric pairs counted
// once, ties broken by lexicographic (i,j)), retained edges keep their signed
// correlation weight unless binarize is set.
ConnectivityGraph build_fc_graph(const TimeSeriesMatrix& ts, double keep_fraction = 0.5,
                                 bool binarize = false);

// Same construction from a precomputed N x N correlation matrix.
ConnectivityGraph build_fc_graph_from_matrix(const Matrix& corr, double keep_fraction = 0.5,
                                             bool binarize = false);

// SC graph: features = [FN | FA | FL] (N x 3N), adjacency = FN + FA + FL.
ConnectivityGraph build_sc_graph(const Matrix& fn, const Matrix& fa, const Matrix& fl);

// Symmetric renormalization with self-loops: D~^{-1/2} (A + I) D~^{-1/2}.
// Requires a symmetric nonnegative input.
Matrix normalize_adjacency(const Matrix& a);

// Encoder-path variant tolerating signed weights: degrees are taken from
// |A| + I while the shifted weights keep their sign. Identical to
// normalize_adjacency on nonnegative inputs.
Matrix normalize_adjacency_signed(const Matrix& a);

// Two-level hierarchical block model (modules nested in super-modules) with a
// fixed inter-module block perturbed by `effect` for class 1. Paired FC and
// SC graphs per subject; deterministic per seed; labels alternate 0/1.
Cohort generate_synthetic_cohort(int n_subjects, int n_rois, double effect,
                                 std::uint64_t seed);

// Per-subject raw synthetic matrices, the on-disk form written by the CLI.
struct SyntheticSubjectMatrices {
  std::string id;
  int label = 0;
  Matrix fc_corr;  // N x N correlation-style matrix, unit diagonal
  Matrix sc_fn, sc_fa, sc_fl;
};

std::vector<SyntheticSubjectMatrices> generate_synthetic_matrices(int n_subjects, int n_rois,
                                                                  double effect,
                                                                  std::uint64_t seed);

// Graph-construction knobs shared by cohort loading.
struct GraphBuildOptions {
  double keep_fraction = 0.5;
  bool binarize = false;
};

Subject subject_from_matrices(const SyntheticSubjectMatrices& m,
                              const GraphBuildOptions& opts = {});

// --- File formats -----------------------------------------------------------
// Matrices: UTF-8 CSV, no header, row-major, decimal floats, NaN forbidden.
// Cohort manifest: JSON {"subjects": [{id, label, fc_timeseries_path |
// fc_matrix_path, sc_fn_path, sc_fa_path, sc_fl_path}]}, paths relative to the
// manifest file.

Matrix load_matrix(const std::string& path);
void save_matrix(const std::string& path, const Matrix& m);

Cohort load_cohort(const std::string& manifest_path, const GraphBuildOptions& opts = {});

}  // namespace hkgf
