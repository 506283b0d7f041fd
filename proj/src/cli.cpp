#include "hkgf/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "hkgf/cost.hpp"
#include "hkgf/kernels.hpp"

namespace hkgf {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::validate() const {
  encoder_kind_from_string(kind);
  require(hidden >= 1, "hidden width must be >= 1");
  require(lambda >= 0.0, "lambda must be >= 0");
  require(curvature > 0.0, "curvature must be > 0");
  require(heads >= 1, "heads must be >= 1");
  require(keep_fraction > 0.0 && keep_fraction <= 1.0, "keep_fraction must lie in (0, 1]");
  train.validate();
  cv.validate();
}

namespace {

void reject_unknown(const json& obj, const std::vector<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError(where + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path + ": invalid JSON: " + e.what());
  }
  reject_unknown(doc, {"model", "train", "cv", "data", "output_dir", "seed"}, path);

  RunConfig cfg;
  if (doc.contains("model")) {
    const json& m = doc["model"];
    reject_unknown(m, {"kind", "hidden", "lambda", "curvature", "heads", "attention_bias"},
                   path + ":model");
    cfg.kind = m.value("kind", cfg.kind);
    cfg.hidden = m.value("hidden", cfg.hidden);
    cfg.lambda = m.value("lambda", cfg.lambda);
    cfg.curvature = m.value("curvature", cfg.curvature);
    cfg.heads = m.value("heads", cfg.heads);
    cfg.attention_bias = m.value("attention_bias", cfg.attention_bias);
  }
  if (doc.contains("train")) {
    const json& t = doc["train"];
    reject_unknown(t, {"learning_rate", "weight_decay", "batch_size", "epochs"}, path + ":train");
    cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
    cfg.train.weight_decay = t.value("weight_decay", cfg.train.weight_decay);
    cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
    cfg.train.epochs = t.value("epochs", cfg.train.epochs);
  }
  if (doc.contains("cv")) {
    const json& c = doc["cv"];
    reject_unknown(c, {"folds", "repeats", "seeds"}, path + ":cv");
    cfg.cv.folds = c.value("folds", cfg.cv.folds);
    cfg.cv.repeats = c.value("repeats", cfg.cv.repeats);
    if (c.contains("seeds")) cfg.cv.seeds = c["seeds"].get<std::vector<std::uint64_t>>();
  }
  if (doc.contains("data")) {
    const json& d = doc["data"];
    reject_unknown(d, {"manifest", "keep_fraction", "binarize"}, path + ":data");
    cfg.manifest = d.value("manifest", cfg.manifest);
    cfg.keep_fraction = d.value("keep_fraction", cfg.keep_fraction);
    cfg.binarize = d.value("binarize", cfg.binarize);
    if (!cfg.manifest.empty()) {
      // manifest paths resolve relative to the config file
      fs::path mp(cfg.manifest);
      if (!mp.is_absolute()) cfg.manifest = (fs::path(path).parent_path() / mp).string();
    }
  }
  cfg.output_dir = doc.value("output_dir", cfg.output_dir);
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

ModelSpec make_model_spec(const RunConfig& cfg, int n_rois) {
  const EncoderKind kind = encoder_kind_from_string(cfg.kind);
  auto encoder = [&](int input_dim) {
    EncoderSpec e = default_encoder_spec(kind, input_dim, cfg.lambda, cfg.curvature);
    e.layer_dims = {cfg.hidden, cfg.hidden};
    e.attention_bias = cfg.attention_bias;
    if (is_attention(kind)) {
      e.layer_configs[0].heads = cfg.heads;
      e.layer_configs[1].heads = 1;
    }
    return e;
  };
  ModelSpec spec;
  spec.kind = kind;
  spec.n_rois = n_rois;
  spec.curvature.c = cfg.curvature;
  spec.hnn_hidden = 32;
  spec.fc_encoder = encoder(n_rois);
  spec.sc_encoder = encoder(3 * n_rois);
  spec.coupling_encoder = encoder(spec.fc_encoder.output_dim() + spec.sc_encoder.output_dim());
  spec.validate();
  return spec;
}

namespace {

struct CommonFlags {
  std::string config_path;
  RunConfig cfg;

  // Registers config + override flags on a subcommand. Overrides are applied
  // after parsing (flags win over the config file).
  void attach(CLI::App* cmd, bool with_model = true, bool with_train = true,
              bool with_cv = true) {
    cmd->add_option("--config", config_path, "JSON run configuration file");
    if (with_model) {
      cmd->add_option("--kind", overrides.kind, "encoder kind: hkgcn|hkgat|gcn|gat");
      cmd->add_option("--hidden", overrides.hidden, "encoder hidden width");
      cmd->add_option("--lambda", overrides.lambda, "cosine-branch scale");
      cmd->add_option("--curvature", overrides.curvature, "ball curvature c");
      cmd->add_option("--heads", overrides.heads, "first-layer attention heads");
      cmd->add_flag("--attention-bias", overrides.attention_bias, "enable attention-layer bias");
    }
    if (with_train) {
      cmd->add_option("--lr", overrides.lr, "learning rate");
      cmd->add_option("--weight-decay", overrides.weight_decay, "weight decay");
      cmd->add_option("--batch-size", overrides.batch_size, "batch size");
      cmd->add_option("--epochs", overrides.epochs, "training epochs");
    }
    if (with_cv) {
      cmd->add_option("--folds", overrides.folds, "cross-validation folds");
      cmd->add_option("--repeats", overrides.repeats, "cross-validation repeats");
      cmd->add_option("--cv-seeds", overrides.cv_seeds, "comma-separated per-repeat seeds");
    }
    cmd->add_option("--manifest", overrides.manifest, "cohort manifest path");
    cmd->add_option("--keep-fraction", overrides.keep_fraction, "FC edge retention fraction");
    cmd->add_flag("--binarize", overrides.binarize, "binarize retained FC edges");
    cmd->add_option("--out", overrides.output_dir, "output directory");
    cmd->add_option("--seed", overrides.seed, "run seed");
  }

  RunConfig resolve() {
    RunConfig out = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (!overrides.kind.empty()) out.kind = overrides.kind;
    if (overrides.hidden > 0) out.hidden = overrides.hidden;
    if (overrides.lambda >= 0) out.lambda = overrides.lambda;
    if (overrides.curvature > 0) out.curvature = overrides.curvature;
    if (overrides.heads > 0) out.heads = overrides.heads;
    if (overrides.attention_bias) out.attention_bias = true;
    if (overrides.lr > 0) out.train.learning_rate = overrides.lr;
    if (overrides.weight_decay >= 0) out.train.weight_decay = overrides.weight_decay;
    if (overrides.batch_size > 0) out.train.batch_size = overrides.batch_size;
    if (overrides.epochs >= 0) out.train.epochs = overrides.epochs;
    if (overrides.folds > 0) out.cv.folds = overrides.folds;
    if (overrides.repeats > 0) {
      out.cv.repeats = overrides.repeats;
      if (overrides.cv_seeds.empty()) {
        out.cv.seeds.clear();
        for (int r = 0; r < overrides.repeats; ++r)
          out.cv.seeds.push_back(static_cast<std::uint64_t>(r + 1));
      }
    }
    if (!overrides.cv_seeds.empty()) {
      out.cv.seeds.clear();
      std::stringstream ss(overrides.cv_seeds);
      std::string item;
      while (std::getline(ss, item, ',')) {
        out.cv.seeds.push_back(std::stoull(item));
      }
      out.cv.repeats = static_cast<int>(out.cv.seeds.size());
    }
    if (!overrides.manifest.empty()) out.manifest = overrides.manifest;
    if (overrides.keep_fraction > 0) out.keep_fraction = overrides.keep_fraction;
    if (overrides.binarize) out.binarize = true;
    if (!overrides.output_dir.empty()) out.output_dir = overrides.output_dir;
    if (overrides.seed_set) out.seed = overrides.seed;
    out.validate();
    return out;
  }

  struct {
    std::string kind;
    int hidden = -1;
    double lambda = -1;
    double curvature = -1;
    int heads = -1;
    bool attention_bias = false;
    double lr = -1;
    double weight_decay = -1;
    int batch_size = -1;
    int epochs = -1;
    int folds = -1;
    int repeats = -1;
    std::string cv_seeds;
    std::string manifest;
    double keep_fraction = -1;
    bool binarize = false;
    std::string output_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
  } overrides;
};

Cohort load_cohort_checked(const RunConfig& cfg) {
  require(!cfg.manifest.empty(), "a cohort manifest is required (--manifest or config data.manifest)");
  GraphBuildOptions opts;
  opts.keep_fraction = cfg.keep_fraction;
  opts.binarize = cfg.binarize;
  return load_cohort(cfg.manifest, opts);
}

std::string format_history_csv(const TrainHistory& history) {
  std::string out = "epoch,mean_train_loss\n";
  char buf[64];
  for (std::size_t e = 0; e < history.epoch_loss.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e, history.epoch_loss[e]);
    out += buf;
  }
  return out;
}

int cmd_synth(int subjects, int rois, double effect, std::uint64_t seed,
              const std::string& out_dir, bool force) {
  const fs::path dir(out_dir);
  const fs::path manifest = dir / "manifest.json";
  if (fs::exists(manifest) && !force) {
    throw ValidationError("refusing to overwrite " + manifest.string() +
                          " (pass --force to allow)");
  }
  const auto mats = generate_synthetic_matrices(subjects, rois, effect, seed);
  json subjects_json = json::array();
  for (const auto& m : mats) {
    save_matrix((dir / (m.id + "_fc.csv")).string(), m.fc_corr);
    save_matrix((dir / (m.id + "_fn.csv")).string(), m.sc_fn);
    save_matrix((dir / (m.id + "_fa.csv")).string(), m.sc_fa);
    save_matrix((dir / (m.id + "_fl.csv")).string(), m.sc_fl);
    subjects_json.push_back({{"id", m.id},
                             {"label", m.label},
                             {"fc_matrix_path", m.id + "_fc.csv"},
                             {"sc_fn_path", m.id + "_fn.csv"},
                             {"sc_fa_path", m.id + "_fa.csv"},
                             {"sc_fl_path", m.id + "_fl.csv"}});
  }
  write_file_atomic(manifest.string(), json{{"subjects", subjects_json}}.dump(2) + "\n");
  std::cout << "wrote " << mats.size() << " subjects to " << out_dir << "\n";
  return 0;
}

int cmd_build_graphs(const RunConfig& cfg, const std::string& out_dir) {
  const Cohort cohort = load_cohort_checked(cfg);
  const fs::path dir(out_dir);
  for (const auto& s : cohort) {
    const ConnectivityGraph& fc = s.graph(Modality::kFc);
    save_matrix((dir / (s.id + "_fc_features.csv")).string(), fc.features);
    save_matrix((dir / (s.id + "_fc_adjacency.csv")).string(), fc.adjacency);
    if (s.graphs.count(Modality::kSc)) {
      const ConnectivityGraph& sc = s.graph(Modality::kSc);
      save_matrix((dir / (s.id + "_sc_features.csv")).string(), sc.features);
      save_matrix((dir / (s.id + "_sc_adjacency.csv")).string(), sc.adjacency);
    }
  }
  std::cout << "built graphs for " << cohort.size() << " subjects in " << out_dir << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const Cohort cohort = load_cohort_checked(cfg);
  require(!cohort.empty(), "empty cohort");
  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = cfg.seed;
  Model model(make_model_spec(cfg, cohort.front().num_rois()), cfg.seed);
  const TrainHistory history = train(model, cohort, train_cfg);
  const fs::path dir(cfg.output_dir);
  save_checkpoint(model, (dir / "checkpoint.bin").string());
  write_file_atomic((dir / "history.csv").string(), format_history_csv(history));
  if (!history.epoch_loss.empty()) {
    std::printf("final mean train loss: %.6f\n", history.epoch_loss.back());
  }
  std::cout << "checkpoint: " << (dir / "checkpoint.bin").string() << "\n";
  return 0;
}

int cmd_cv(const RunConfig& cfg) {
  const Cohort cohort = load_cohort_checked(cfg);
  require(!cohort.empty(), "empty cohort");
  TrainConfig train_cfg = cfg.train;
  const ModelSpec spec = make_model_spec(cfg, cohort.front().num_rois());
  CvPlan plan = cfg.cv;
  // the run seed offsets the per-repeat seeds so distinct runs differ
  for (auto& s : plan.seeds) s += cfg.seed;
  const MetricsReport report = cross_validate(cohort, spec, train_cfg, plan);
  write_file_atomic((fs::path(cfg.output_dir) / "metrics.json").string(),
                    metrics_to_json(report));
  std::cout << metrics_table(report);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

int cmd_kernel_bench(const std::string& kernel, int dim, int pairs, double sigma,
                     double curvature, const std::string& m_list, std::int64_t oracle_samples,
                     std::uint64_t seed, const std::string& out_path) {
  KernelConfig base;
  base.curvature.c = curvature;
  base.sigma = sigma;
  const KernelActivation activation =
      kernel == "hac" ? KernelActivation::kRelu : KernelActivation::kCosine;
  require(kernel == "hac" || kernel == "hrbf", "kernel must be hac or hrbf");

  std::vector<int> ms;
  {
    std::stringstream ss(m_list);
    std::string item;
    while (std::getline(ss, item, ',')) ms.push_back(std::stoi(item));
  }
  require(!ms.empty(), "m-list must not be empty");

  // Sample pairs deep inside the ball so tangent coordinates stay O(1).
  Rng rng(seed);
  std::vector<std::pair<BallPoint, BallPoint>> pts;
  for (int p = 0; p < pairs; ++p) {
    Vector a(dim), b(dim);
    for (int i = 0; i < dim; ++i) {
      a(i) = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
      b(i) = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
    }
    pts.push_back({BallPoint{a}, BallPoint{b}});
  }

  // Reference values once per pair.
  std::vector<double> reference(pts.size());
  for (std::size_t p = 0; p < pts.size(); ++p) {
    if (activation == KernelActivation::kCosine) {
      reference[p] = hrbf_closed_form(pts[p].first, pts[p].second, base);
    } else {
      reference[p] = mc_kernel_oracle(pts[p].first, pts[p].second, base, activation,
                                      oracle_samples, seed + 17 + static_cast<std::uint64_t>(p));
    }
  }

  std::string csv = "m,mean_abs_err\n";
  char buf[64];
  for (std::size_t mi = 0; mi < ms.size(); ++mi) {
    KernelConfig cfg = base;
    cfg.feature_count = ms[mi];
    const RandomFeatureMap map =
        sample_feature_map(dim, cfg, activation, seed + 1000 + static_cast<std::uint64_t>(mi));
    double err = 0.0;
    for (std::size_t p = 0; p < pts.size(); ++p) {
      err += std::abs(kernel_estimate(pts[p].first, pts[p].second, map, cfg) - reference[p]);
    }
    err /= static_cast<double>(pts.size());
    std::snprintf(buf, sizeof(buf), "%d,%.17g\n", ms[mi], err);
    csv += buf;
  }
  if (!out_path.empty()) {
    write_file_atomic(out_path, csv);
  }
  std::cout << csv;
  return 0;
}

int cmd_gradcheck(int rois, const std::string& kind, double lambda, double curvature,
                  std::uint64_t seed, double tolerance, bool inject_fault) {
  const Cohort cohort = generate_synthetic_cohort(2, rois, 1.0, seed);
  ModelSpec spec = default_model_spec(encoder_kind_from_string(kind), rois, lambda, curvature);
  Model model(spec, seed);
  const GradcheckReport report =
      gradcheck(model, cohort.front(), tolerance, inject_fault ? 1.0 : 0.0);
  for (const auto& e : report.entries) {
    std::printf("%-16s max_rel_err %.3e (checked %lld)\n", e.tensor.c_str(), e.max_rel_err,
                e.checked);
  }
  std::printf("worst %.3e tolerance %.3e -> %s\n", report.worst, report.tolerance,
              report.passed() ? "PASS" : "FAIL");
  if (!report.passed()) {
    throw NumericalError("gradient check failed: worst relative error " +
                         std::to_string(report.worst));
  }
  return 0;
}

int cmd_flops(int rois, bool breakdown) {
  std::cout << cost_table(rois);
  if (breakdown) {
    for (EncoderKind kind : {EncoderKind::kGcn, EncoderKind::kHkgcn, EncoderKind::kGat,
                             EncoderKind::kHkgat}) {
      const EncoderSpec spec = default_encoder_spec(kind, rois);
      const CostReport r = cost_report(spec, rois);
      std::printf("\n%s (fmri, N=%d): params %lld, macs %lld\n", to_string(kind).c_str(), rois,
                  r.params, r.macs);
      for (const auto& l : r.layers) {
        std::printf("  %-4s params %lld macs %lld\n", l.name.c_str(), l.params, l.macs);
      }
      std::printf("convention: %s\n", r.convention.c_str());
    }
  }
  return 0;
}

int cmd_discriminative(const RunConfig& cfg, const std::string& checkpoint_path,
                       const std::string& route, int top_k, const std::string& out_path) {
  require(route == "correlation" || route == "attention",
          "route must be 'correlation' or 'attention'");
  const Cohort cohort = load_cohort_checked(cfg);
  require(!cohort.empty(), "empty cohort");

  // model spec comes from the checkpoint header
  std::ifstream in(checkpoint_path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + checkpoint_path);
  std::string head(16, '\0');
  in.read(head.data(), 16);
  require(in.gcount() == 16 && head.substr(0, 4) == "HKGF",
          checkpoint_path + ": not a checkpoint file");
  std::uint64_t hlen = 0;
  std::memcpy(&hlen, head.data() + 8, sizeof(hlen));
  std::string header_str(hlen, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(hlen));
  const json header = json::parse(header_str);
  const ModelSpec spec = model_spec_from_json(header.at("model"));
  in.close();

  Model model(spec, 0);
  load_checkpoint(model, checkpoint_path, false);

  if (route == "attention" && !is_attention(spec.kind)) {
    throw ValidationError("attention route requires an hkgat/gat model; checkpoint is " +
                          to_string(spec.kind));
  }

  std::vector<Matrix> embeddings, attention;
  std::vector<int> labels;
  for (const auto& s : cohort) {
    const ForwardResult r = model.forward(s);
    labels.push_back(s.label);
    if (route == "correlation") {
      embeddings.push_back(r.x_cp);
    } else {
      require(!r.coupling_attention.empty(), "model produced no coupling attention");
      Matrix avg = Matrix::Zero(spec.n_rois, spec.n_rois);
      for (const auto& a : r.coupling_attention) avg += a;
      attention.push_back(avg / static_cast<double>(r.coupling_attention.size()));
    }
  }

  const std::vector<RankedConnection> ranked =
      route == "correlation" ? discriminative_connections_correlation(embeddings, labels, top_k)
                             : discriminative_connections_attention(attention, labels, top_k);

  json out = json::array();
  for (const auto& c : ranked) {
    std::printf("roi %3d -- roi %3d", c.roi_a, c.roi_b);
    if (route == "correlation") {
      std::printf("  p=%.6g t=%.4f\n", c.p, c.t);
      out.push_back({{"roi_a", c.roi_a}, {"roi_b", c.roi_b}, {"p", c.p}, {"t", c.t}});
    } else {
      std::printf("  weight=%.6g\n", c.score);
      out.push_back({{"roi_a", c.roi_a}, {"roi_b", c.roi_b}, {"weight", c.score}});
    }
  }
  if (!out_path.empty()) {
    write_file_atomic(out_path, out.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"hyperbolic kernel graph fusion for multimodal connectome classification"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
  int synth_subjects = 200, synth_rois = 32;
  double synth_effect = 1.0;
  std::uint64_t synth_seed = 0;
  std::string synth_out = "synth";
  bool synth_force = false;
  synth->add_option("--subjects", synth_subjects, "subject count (even)");
  synth->add_option("--rois", synth_rois, "ROI count (>= 8)");
  synth->add_option("--effect", synth_effect, "class effect size (>= 0)");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--out", synth_out, "output directory");
  synth->add_flag("--force", synth_force, "overwrite existing outputs");

  // build-graphs
  auto* build = app.add_subcommand("build-graphs", "construct FC/SC graph files from a manifest");
  CommonFlags build_flags;
  std::string build_out = "graphs";
  build_flags.attach(build, false, false, false);
  build->add_option("--graphs-out", build_out, "directory for the graph CSV files");

  // train
  auto* train_cmd = app.add_subcommand("train", "train on a full cohort");
  CommonFlags train_flags;
  train_flags.attach(train_cmd);

  // cv
  auto* cv_cmd = app.add_subcommand("cv", "stratified repeated cross-validation");
  CommonFlags cv_flags;
  cv_flags.attach(cv_cmd);

  // kernel-bench
  auto* bench = app.add_subcommand("kernel-bench", "random-feature vs oracle convergence sweep");
  std::string bench_kernel = "hrbf", bench_mlist = "64,256,1024,4096", bench_out;
  int bench_dim = 16, bench_pairs = 50;
  double bench_sigma = 1.0, bench_curvature = 0.001;
  std::int64_t bench_samples = 200000;
  std::uint64_t bench_seed = 0;
  bench->add_option("--kernel", bench_kernel, "hrbf or hac");
  bench->add_option("--dim", bench_dim, "ball dimension");
  bench->add_option("--pairs", bench_pairs, "random point pairs");
  bench->add_option("--sigma", bench_sigma, "feature distribution std-dev");
  bench->add_option("--curvature", bench_curvature, "ball curvature c");
  bench->add_option("--m-list", bench_mlist, "comma-separated feature counts");
  bench->add_option("--oracle-samples", bench_samples, "Monte-Carlo oracle sample count (hac)");
  bench->add_option("--seed", bench_seed, "sweep seed");
  bench->add_option("--bench-out", bench_out, "CSV output path");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  int gc_rois = 8;
  std::string gc_kind = "hkgcn";
  double gc_lambda = 0.01, gc_curvature = 0.001, gc_tol = 1e-4;
  std::uint64_t gc_seed = 0;
  bool gc_fault = false;
  gc->add_option("--rois", gc_rois, "ROI count of the probe model");
  gc->add_option("--kind", gc_kind, "encoder kind");
  gc->add_option("--lambda", gc_lambda, "cosine-branch scale");
  gc->add_option("--curvature", gc_curvature, "ball curvature c");
  gc->add_option("--seed", gc_seed, "model/subject seed");
  gc->add_option("--tolerance", gc_tol, "max relative error to accept");
  gc->add_flag("--inject-fault", gc_fault, "corrupt one analytic gradient (self-test)");

  // flops
  auto* flops = app.add_subcommand("flops", "parameter and MAC accounting table");
  int flops_rois = 116;
  bool flops_breakdown = false;
  flops->add_option("--rois", flops_rois, "ROI count (fMRI dim; DTI uses 3N)");
  flops->add_flag("--breakdown", flops_breakdown, "per-layer breakdown");

  // discriminative
  auto* disc = app.add_subcommand("discriminative", "extract discriminative connections");
  CommonFlags disc_flags;
  std::string disc_checkpoint, disc_route = "correlation", disc_out;
  int disc_topk = 15;
  disc_flags.attach(disc, false, false, false);
  disc->add_option("--checkpoint", disc_checkpoint, "trained model checkpoint")->required();
  disc->add_option("--route", disc_route, "correlation or attention");
  disc->add_option("--top-k", disc_topk, "connections to report");
  disc->add_option("--disc-out", disc_out, "JSON output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      return cmd_synth(synth_subjects, synth_rois, synth_effect, synth_seed, synth_out,
                       synth_force);
    }
    if (build->parsed()) return cmd_build_graphs(build_flags.resolve(), build_out);
    if (train_cmd->parsed()) {
      CommonFlags& f = train_flags;
      if (f.overrides.seed != 0 || train_cmd->count("--seed")) f.overrides.seed_set = true;
      return cmd_train(f.resolve());
    }
    if (cv_cmd->parsed()) {
      CommonFlags& f = cv_flags;
      if (f.overrides.seed != 0 || cv_cmd->count("--seed")) f.overrides.seed_set = true;
      return cmd_cv(f.resolve());
    }
    if (bench->parsed()) {
      return cmd_kernel_bench(bench_kernel, bench_dim, bench_pairs, bench_sigma, bench_curvature,
                              bench_mlist, bench_samples, bench_seed, bench_out);
    }
    if (gc->parsed()) {
      return cmd_gradcheck(gc_rois, gc_kind, gc_lambda, gc_curvature, gc_seed, gc_tol, gc_fault);
    }
    if (flops->parsed()) return cmd_flops(flops_rois, flops_breakdown);
    if (disc->parsed()) {
      return cmd_discriminative(disc_flags.resolve(), disc_checkpoint, disc_route, disc_topk,
                                disc_out);
    }
    throw ValidationError("no command given");
  } catch (const NumericalError& e) {
    std::cerr << "numerical-error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace hkgf
