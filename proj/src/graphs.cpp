#include "hkgf/graphs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hkgf {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Modality m) {
  switch (m) {
    case Modality::kFc: return "fc";
    case Modality::kSc: return "sc";
    case Modality::kAsl: return "asl";
    case Modality::kCoupling: return "coupling";
  }
  return "?";
}

void TimeSeriesMatrix::validate() const {
  require(values.rows() >= 2, "time series needs at least 2 ROIs");
  require(values.cols() >= 3, "time series needs at least 3 timepoints");
  require(values.allFinite(), "time series contains non-finite values");
  require(roi_labels.empty() || roi_labels.size() == static_cast<std::size_t>(values.rows()),
          "roi_labels size must match ROI count");
}

void ConnectivityGraph::validate() const {
  require(adjacency.rows() == adjacency.cols(), "adjacency must be square");
  require(features.rows() == adjacency.rows(), "features row count must equal node count");
  if (modality == Modality::kFc || modality == Modality::kSc) {
    require(adjacency.isApprox(adjacency.transpose(), 1e-12), "fc/sc adjacency must be symmetric");
  }
  if (modality == Modality::kFc) {
    require(adjacency.diagonal().isZero(0.0), "fc adjacency must have zero diagonal");
  }
}

const ConnectivityGraph& Subject::graph(Modality m) const {
  auto it = graphs.find(m);
  if (it == graphs.end()) {
    throw ValidationError("subject '" + id + "' is missing the " + to_string(m) + " modality");
  }
  return it->second;
}

int Subject::num_rois() const {
  require(!graphs.empty(), "subject '" + id + "' has no graphs");
  return graphs.begin()->second.num_nodes();
}

double pearson(const Vector& x, const Vector& y) {
  require(x.size() == y.size(), "pearson: length mismatch");
  require(x.size() >= 3, "pearson: need at least 3 samples");
  const double n = static_cast<double>(x.size());
  const Vector xc = x.array() - x.mean();
  const Vector yc = y.array() - y.mean();
  const double sx = xc.squaredNorm();
  const double sy = yc.squaredNorm();
  if (sx <= 0.0 || sy <= 0.0) return 0.0;  // flat channel
  const double r = xc.dot(yc) / std::sqrt(sx * sy);
  (void)n;
  return std::clamp(r, -1.0, 1.0);
}

namespace {

// Keep the strongest off-diagonal pairs by |w|; ties resolved by lexicographic
// (i, j) so results are reproducible.
Matrix sparsify_symmetric(const Matrix& w, double keep_fraction, bool binarize) {
  const int n = static_cast<int>(w.rows());
  struct Edge {
    double mag;
    int i, j;
  };
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      edges.push_back({std::abs(w(i, j)), i, j});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.mag != b.mag) return a.mag > b.mag;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  const std::size_t keep = static_cast<std::size_t>(
      std::ceil(keep_fraction * static_cast<double>(edges.size())));
  Matrix adj = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < keep && k < edges.size(); ++k) {
    const Edge& e = edges[k];
    const double v = binarize ? 1.0 : w(e.i, e.j);
    adj(e.i, e.j) = v;
    adj(e.j, e.i) = v;
  }
  return adj;
}

}  // namespace

ConnectivityGraph build_fc_graph_from_matrix(const Matrix& corr, double keep_fraction,
                                             bool binarize) {
  require(corr.rows() == corr.cols(), "fc matrix must be square");
  require(corr.rows() >= 2, "fc matrix needs at least 2 ROIs");
  require(corr.allFinite(), "fc matrix contains non-finite values");
  require(keep_fraction > 0.0 && keep_fraction <= 1.0, "keep_fraction must lie in (0, 1]");

  ConnectivityGraph g;
  g.modality = Modality::kFc;
  g.features = corr;
  g.adjacency = sparsify_symmetric(corr, keep_fraction, binarize);
  g.validate();
  return g;
}

ConnectivityGraph build_fc_graph(const TimeSeriesMatrix& ts, double keep_fraction,
                                 bool binarize) {
  ts.validate();
  const int n = static_cast<int>(ts.values.rows());
  Matrix corr = Matrix::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double r = pearson(ts.values.row(i).transpose(), ts.values.row(j).transpose());
      corr(i, j) = r;
      corr(j, i) = r;
    }
  }
  return build_fc_graph_from_matrix(corr, keep_fraction, binarize);
}

ConnectivityGraph build_sc_graph(const Matrix& fn, const Matrix& fa, const Matrix& fl) {
  const int n = static_cast<int>(fn.rows());
  for (const auto* m : {&fn, &fa, &fl}) {
    require(m->rows() == n && m->cols() == n, "sc metric matrices must share shape");
    require(m->allFinite(), "sc metric matrix contains non-finite values");
    require(m->isApprox(m->transpose(), 1e-12), "sc metric matrix must be symmetric");
    require((m->array() >= 0.0).all(), "sc metric matrix must be nonnegative");
  }
  ConnectivityGraph g;
  g.modality = Modality::kSc;
  g.features.resize(n, 3 * n);
  g.features << fn, fa, fl;
  g.adjacency = fn + fa + fl;
  g.validate();
  return g;
}

Matrix normalize_adjacency(const Matrix& a) {
  require(a.rows() == a.cols(), "normalize_adjacency: matrix must be square");
  require(a.allFinite(), "normalize_adjacency: non-finite entries");
  require(a.isApprox(a.transpose(), 1e-12), "normalize_adjacency: matrix must be symmetric");
  require((a.array() >= 0.0).all(), "normalize_adjacency: matrix must be nonnegative");
  const Matrix h = a + Matrix::Identity(a.rows(), a.cols());
  const Vector d = h.rowwise().sum();
  const Vector s = d.array().rsqrt();
  return s.asDiagonal() * h * s.asDiagonal();
}

Matrix normalize_adjacency_signed(const Matrix& a) {
  require(a.rows() == a.cols(), "normalize_adjacency_signed: matrix must be square");
  require(a.allFinite(), "normalize_adjacency_signed: non-finite entries");
  const Matrix h = a + Matrix::Identity(a.rows(), a.cols());
  const Vector d = a.cwiseAbs().rowwise().sum().array() + 1.0;  // |A| + I degrees
  const Vector s = d.array().rsqrt();
  return s.asDiagonal() * h * s.asDiagonal();
}

namespace {

// Four modules grouped into two super-modules. Returns module index per ROI.
std::vector<int> module_assignment(int n_rois) {
  std::vector<int> mod(n_rois);
  for (int i = 0; i < n_rois; ++i) {
    mod[i] = std::min(4 * i / n_rois, 3);
  }
  return mod;
}

// Block strength: within-module / within-super-module / across super-modules.
double block_level(int mi, int mj, double within, double super_level, double cross) {
  if (mi == mj) return within;
  if (mi / 2 == mj / 2) return super_level;
  return cross;
}

// The class-1 perturbation targets edges between module 0 and module 2,
// i.e. a fixed inter-module block crossing the super-module boundary.
bool perturbed_pair(int mi, int mj) {
  return (mi == 0 && mj == 2) || (mi == 2 && mj == 0);
}

}  // namespace

std::vector<SyntheticSubjectMatrices> generate_synthetic_matrices(int n_subjects, int n_rois,
                                                                  double effect,
                                                                  std::uint64_t seed) {
  require(n_subjects >= 2 && n_subjects % 2 == 0, "n_subjects must be even and >= 2");
  require(n_rois >= 8, "n_rois must be >= 8");
  require(effect >= 0.0 && std::isfinite(effect), "effect must be >= 0");

  const std::vector<int> mod = module_assignment(n_rois);
  const double noise_sd = 0.05;
  const double delta = 0.3;  // class shift per unit effect

  Rng rng(seed);
  std::vector<SyntheticSubjectMatrices> out;
  out.reserve(n_subjects);
  for (int s = 0; s < n_subjects; ++s) {
    SyntheticSubjectMatrices subj;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "subj_%04d", s);
    subj.id = buf;
    subj.label = s % 2;
    const double shift = subj.label == 1 ? delta * effect : 0.0;

    subj.fc_corr = Matrix::Identity(n_rois, n_rois);
    subj.sc_fn = Matrix::Zero(n_rois, n_rois);
    subj.sc_fa = Matrix::Zero(n_rois, n_rois);
    subj.sc_fl = Matrix::Zero(n_rois, n_rois);
    for (int i = 0; i < n_rois; ++i) {
      for (int j = i + 1; j < n_rois; ++j) {
        const bool hit = perturbed_pair(mod[i], mod[j]);
        const double fc_base = block_level(mod[i], mod[j], 0.7, 0.35, 0.15);
        const double sc_base = block_level(mod[i], mod[j], 0.8, 0.4, 0.1);
        const double fc = std::clamp(fc_base + (hit ? shift : 0.0) + rng.normal(0.0, noise_sd),
                                     -0.99, 0.99);
        subj.fc_corr(i, j) = fc;
        subj.fc_corr(j, i) = fc;
        const double sc_shift = hit ? shift : 0.0;
        const double fn = std::max(0.9 * sc_base + sc_shift + rng.normal(0.0, noise_sd), 0.0);
        const double fa = std::clamp(0.45 * sc_base + 0.5 * sc_shift + rng.normal(0.0, noise_sd),
                                     0.0, 1.0);
        const double fl = std::max(0.7 * sc_base + sc_shift + rng.normal(0.0, noise_sd), 0.0);
        subj.sc_fn(i, j) = subj.sc_fn(j, i) = fn;
        subj.sc_fa(i, j) = subj.sc_fa(j, i) = fa;
        subj.sc_fl(i, j) = subj.sc_fl(j, i) = fl;
      }
    }
    out.push_back(std::move(subj));
  }
  return out;
}

Subject subject_from_matrices(const SyntheticSubjectMatrices& m, const GraphBuildOptions& opts) {
  Subject s;
  s.id = m.id;
  s.label = m.label;
  s.graphs[Modality::kFc] = build_fc_graph_from_matrix(m.fc_corr, opts.keep_fraction, opts.binarize);
  s.graphs[Modality::kSc] = build_sc_graph(m.sc_fn, m.sc_fa, m.sc_fl);
  return s;
}

Cohort generate_synthetic_cohort(int n_subjects, int n_rois, double effect, std::uint64_t seed) {
  Cohort cohort;
  for (const auto& m : generate_synthetic_matrices(n_subjects, n_rois, effect, seed)) {
    cohort.push_back(subject_from_matrices(m));
  }
  return cohort;
}

// --- CSV + manifest ----------------------------------------------------------

Matrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open matrix file: " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    int col = 0;
    while (pos <= line.size()) {
      ++col;
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      const char* first = line.data() + pos;
      const char* last = line.data() + comma;
      while (first < last && (*first == ' ' || *first == '\t')) ++first;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(first, last, v);
      while (ptr < last && (*ptr == ' ' || *ptr == '\t')) ++ptr;
      if (ec != std::errc() || ptr != last || first == last) {
        throw ValidationError(path + ": parse error at line " + std::to_string(lineno) +
                              ", column " + std::to_string(col));
      }
      if (!std::isfinite(v)) {
        throw ValidationError(path + ": non-finite value at line " + std::to_string(lineno) +
                              ", column " + std::to_string(col));
      }
      row.push_back(v);
      pos = comma + 1;
      if (comma == line.size()) break;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ValidationError(path + ": ragged row at line " + std::to_string(lineno) +
                            " (expected " + std::to_string(rows.front().size()) + " columns, got " +
                            std::to_string(row.size()) + ")");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(path + ": empty matrix file");

  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.front().size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

void save_matrix(const std::string& path, const Matrix& m) {
  require(m.allFinite(), "save_matrix: refusing to write non-finite values");
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 12);
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      if (j) out.push_back(',');
      out += buf;
    }
    out.push_back('\n');
  }
  write_file_atomic(path, out);
}

namespace {

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError(where + ": unknown key '" + key + "'");
    }
  }
}

std::string resolve(const fs::path& base, const std::string& rel) {
  fs::path p(rel);
  return (p.is_absolute() ? p : base / p).string();
}

Matrix load_referenced_matrix(const fs::path& base, const std::string& rel) {
  const std::string full = resolve(base, rel);
  if (!fs::exists(full)) {
    throw ValidationError("manifest references a missing file: " + full);
  }
  return load_matrix(full);
}

}  // namespace

Cohort load_cohort(const std::string& manifest_path, const GraphBuildOptions& opts) {
  std::ifstream in(manifest_path);
  if (!in) throw ValidationError("cannot open manifest: " + manifest_path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(manifest_path + ": invalid JSON: " + e.what());
  }
  require(doc.is_object() && doc.contains("subjects") && doc["subjects"].is_array(),
          manifest_path + ": manifest must be an object with a 'subjects' array");
  reject_unknown_keys(doc, {"subjects"}, manifest_path);

  const fs::path base = fs::path(manifest_path).parent_path();
  Cohort cohort;
  for (const auto& entry : doc["subjects"]) {
    require(entry.is_object(), manifest_path + ": subject entries must be objects");
    reject_unknown_keys(entry,
                        {"id", "label", "fc_timeseries_path", "fc_matrix_path", "sc_fn_path",
                         "sc_fa_path", "sc_fl_path"},
                        manifest_path);
    require(entry.contains("id") && entry["id"].is_string(), "subject entry missing string 'id'");
    require(entry.contains("label") && entry["label"].is_number_integer(),
            "subject entry missing integer 'label'");
    Subject s;
    s.id = entry["id"].get<std::string>();
    s.label = entry["label"].get<int>();
    require(s.label == 0 || s.label == 1, "subject '" + s.id + "': label must be 0 or 1");

    const bool has_ts = entry.contains("fc_timeseries_path");
    const bool has_mat = entry.contains("fc_matrix_path");
    require(has_ts != has_mat,
            "subject '" + s.id + "': exactly one of fc_timeseries_path/fc_matrix_path required");
    if (has_ts) {
      TimeSeriesMatrix ts;
      ts.values = load_referenced_matrix(base, entry["fc_timeseries_path"].get<std::string>());
      s.graphs[Modality::kFc] = build_fc_graph(ts, opts.keep_fraction, opts.binarize);
    } else {
      const Matrix corr = load_referenced_matrix(base, entry["fc_matrix_path"].get<std::string>());
      s.graphs[Modality::kFc] = build_fc_graph_from_matrix(corr, opts.keep_fraction, opts.binarize);
    }

    const bool has_sc = entry.contains("sc_fn_path") || entry.contains("sc_fa_path") ||
                        entry.contains("sc_fl_path");
    if (has_sc) {
      require(entry.contains("sc_fn_path") && entry.contains("sc_fa_path") &&
                  entry.contains("sc_fl_path"),
              "subject '" + s.id + "': sc_fn/sc_fa/sc_fl paths must be given together");
      const Matrix fn = load_referenced_matrix(base, entry["sc_fn_path"].get<std::string>());
      const Matrix fa = load_referenced_matrix(base, entry["sc_fa_path"].get<std::string>());
      const Matrix fl = load_referenced_matrix(base, entry["sc_fl_path"].get<std::string>());
      s.graphs[Modality::kSc] = build_sc_graph(fn, fa, fl);
    }
    cohort.push_back(std::move(s));
  }

  std::sort(cohort.begin(), cohort.end(),
            [](const Subject& a, const Subject& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < cohort.size(); ++i) {
    require(cohort[i].id != cohort[i - 1].id, "duplicate subject id: " + cohort[i].id);
  }
  return cohort;
}

}  // namespace hkgf
