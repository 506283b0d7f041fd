#include "hkgf/training.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace hkgf {

using nlohmann::json;

void TrainConfig::validate() const {
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(epochs >= 0, "epochs must be >= 0");
  require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0,
          "adam betas must lie in (0, 1)");
  require(adam_epsilon > 0.0, "adam_epsilon must be > 0");
}

AdamState AdamState::init(const ParameterStore& store) {
  AdamState s;
  s.m.reserve(static_cast<std::size_t>(store.size()));
  s.v.reserve(static_cast<std::size_t>(store.size()));
  for (int i = 0; i < store.size(); ++i) {
    const Matrix& v = store.tensor(i).value;
    s.m.push_back(Matrix::Zero(v.rows(), v.cols()));
    s.v.push_back(Matrix::Zero(v.rows(), v.cols()));
  }
  return s;
}

void adam_step(ParameterStore& store, AdamState& state, const TrainConfig& cfg) {
  require(state.m.size() == static_cast<std::size_t>(store.size()),
          "adam state does not match the parameter store");
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (int i = 0; i < store.size(); ++i) {
    NamedTensor& t = store.tensor(i);
    if (!t.grad.allFinite()) {
      throw NumericalError("non-finite gradient in tensor '" + t.name + "'");
    }
    Matrix g = t.grad;
    if (cfg.weight_decay != 0.0) g += cfg.weight_decay * t.value;
    auto& m = state.m[static_cast<std::size_t>(i)];
    auto& v = state.v[static_cast<std::size_t>(i)];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    const Matrix m_hat = m / bc1;
    const Matrix v_hat = v / bc2;
    t.value -= cfg.learning_rate *
               m_hat.cwiseQuotient(v_hat.cwiseSqrt().array().matrix() +
                                   Matrix::Constant(v.rows(), v.cols(), cfg.adam_epsilon));
  }
}

TrainHistory train(Model& model, const Cohort& cohort, const TrainConfig& cfg) {
  cfg.validate();
  require(!cohort.empty(), "train: empty cohort");

  AdamState state = AdamState::init(model.store());
  TrainHistory history;
  std::vector<int> order(cohort.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(cfg.seed * 1000003ULL + static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t batch_end = std::min(pos + static_cast<std::size_t>(cfg.batch_size),
                                             order.size());
      const double inv = 1.0 / static_cast<double>(batch_end - pos);
      model.store().zero_grads();
      for (std::size_t k = pos; k < batch_end; ++k) {
        loss_sum += model.forward_backward(cohort[static_cast<std::size_t>(order[k])], inv).loss;
      }
      adam_step(model.store(), state, cfg);
      pos = batch_end;
    }
    history.epoch_loss.push_back(loss_sum / static_cast<double>(cohort.size()));
  }
  return history;
}

GradcheckReport gradcheck(const Model& model, const Subject& subject, double tolerance,
                          double inject_fault) {
  GradcheckReport report;
  report.tolerance = tolerance;
  const int n_tensors = model.store().size();
  if (n_tensors == 0) return report;

  // Analytic gradients once.
  Model base = model;
  base.store().zero_grads();
  base.forward_backward(subject, 1.0);
  if (inject_fault != 0.0) {
    base.store().tensor(0).grad(0, 0) += inject_fault;
  }

  report.entries.resize(static_cast<std::size_t>(n_tensors));
  const int width = parallelism_width();
  parallel_for_tasks(n_tensors, width, [&](int ti) {
    Model probe = model;  // thread-local copy to perturb
    const NamedTensor& analytic = base.store().tensor(ti);
    NamedTensor& t = probe.store().tensor(ti);
    GradcheckEntry entry;
    entry.tensor = t.name;
    for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
        const double theta = t.value(r, c);
        const double a = analytic.grad(r, c);
        auto fd = [&](double h) {
          t.value(r, c) = theta + h;
          const double up = probe.forward(subject).loss;
          t.value(r, c) = theta - h;
          const double down = probe.forward(subject).loss;
          t.value(r, c) = theta;
          return (up - down) / (2.0 * h);
        };
        auto rel_err = [&](double numeric) {
          if (std::abs(a) + std::abs(numeric) <= 1e-8) return -1.0;  // below floor
          return std::abs(a - numeric) / (std::abs(a) + std::abs(numeric));
        };
        // Small step first (stays inside one piecewise-linear cell around
        // zero-initialized entries); the larger step resolves entries whose
        // gradients are too small for the short secant's quantization.
        double rel = rel_err(fd(1e-4 * std::max(std::abs(theta), 1e-2)));
        if (rel > tolerance) {
          const double rel_wide = rel_err(fd(1e-4 * std::max(std::abs(theta), 1.0)));
          if (rel_wide >= 0.0) rel = std::min(rel, rel_wide);
        }
        if (rel < 0.0) continue;
        ++entry.checked;
        entry.max_rel_err = std::max(entry.max_rel_err, rel);
      }
    }
    report.entries[static_cast<std::size_t>(ti)] = std::move(entry);
  });

  for (const auto& e : report.entries) report.worst = std::max(report.worst, e.max_rel_err);
  return report;
}

namespace {

constexpr char kMagic[4] = {'H', 'K', 'G', 'F'};
constexpr std::uint32_t kVersion = 1;

void append_raw(std::string& out, const void* data, std::size_t n) {
  out.append(static_cast<const char*>(data), n);
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  json tensors = json::array();
  for (int i = 0; i < model.store().size(); ++i) {
    const NamedTensor& t = model.store().tensor(i);
    tensors.push_back({{"name", t.name},
                       {"rows", t.value.rows()},
                       {"cols", t.value.cols()}});
  }
  const json header = {{"format_version", kVersion},
                       {"model", model_spec_to_json(model.spec())},
                       {"init_seed", model.seed()},
                       {"tensors", tensors}};
  const std::string header_str = header.dump();

  std::string blob;
  append_raw(blob, kMagic, 4);
  const std::uint32_t version = kVersion;
  append_raw(blob, &version, sizeof(version));
  const std::uint64_t hlen = header_str.size();
  append_raw(blob, &hlen, sizeof(hlen));
  blob += header_str;
  for (int i = 0; i < model.store().size(); ++i) {
    const Matrix& v = model.store().tensor(i).value;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      for (Eigen::Index c = 0; c < v.cols(); ++c) {
        const double x = v(r, c);
        append_raw(blob, &x, sizeof(x));
      }
    }
  }
  write_file_atomic(path, blob);
}

int load_checkpoint(Model& model, const std::string& path, bool allow_subset) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  require(blob.size() >= 16 && std::memcmp(blob.data(), kMagic, 4) == 0,
          path + ": not a checkpoint file");
  std::uint32_t version = 0;
  std::memcpy(&version, blob.data() + 4, sizeof(version));
  require(version == kVersion, path + ": unsupported checkpoint version");
  std::uint64_t hlen = 0;
  std::memcpy(&hlen, blob.data() + 8, sizeof(hlen));
  require(blob.size() >= 16 + hlen, path + ": truncated header");
  json header;
  try {
    header = json::parse(blob.substr(16, hlen));
  } catch (const json::exception& e) {
    throw ValidationError(path + ": bad checkpoint header: " + e.what());
  }

  std::size_t offset = 16 + hlen;
  int loaded = 0;
  for (const auto& tj : header.at("tensors")) {
    const std::string name = tj.at("name").get<std::string>();
    const Eigen::Index rows = tj.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = tj.at("cols").get<Eigen::Index>();
    const std::size_t bytes = static_cast<std::size_t>(rows * cols) * sizeof(double);
    require(offset + bytes <= blob.size(), path + ": truncated payload at tensor " + name);
    const int idx = model.store().index_of(name);
    if (idx >= 0) {
      NamedTensor& t = model.store().tensor(idx);
      require(t.value.rows() == rows && t.value.cols() == cols,
              path + ": shape mismatch for tensor " + name);
      std::size_t p = offset;
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          double x;
          std::memcpy(&x, blob.data() + p, sizeof(x));
          t.value(r, c) = x;
          p += sizeof(x);
        }
      }
      ++loaded;
    }
    offset += bytes;
  }
  if (!allow_subset) {
    require(loaded == model.store().size(),
            path + ": checkpoint does not cover every model tensor");
  }
  return loaded;
}

}  // namespace hkgf
