#pragma once

#include "hkgf/model.hpp"

namespace hkgf {

struct TrainConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;  // L2-coupled into the gradient
  int batch_size = 128;
  int epochs = 50;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdamState {
  std::vector<Matrix> m, v;
  long long t = 0;

  static AdamState init(const ParameterStore& store);
};

// Classic Adam with bias correction; weight decay folded into the gradient.
// Aborts with the tensor name on non-finite gradients.
void adam_step(ParameterStore& store, AdamState& state, const TrainConfig& cfg);

struct TrainHistory {
  std::vector<double> epoch_loss;  // mean train loss per epoch
};

TrainHistory train(Model& model, const Cohort& cohort, const TrainConfig& cfg);

struct GradcheckEntry {
  std::string tensor;
  double max_rel_err = 0.0;
  long long checked = 0;  // scalars measured (|analytic|+|numeric| above floor)
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double worst = 0.0;
  double tolerance = 0.0;

  bool passed() const { return worst <= tolerance; }
};

// Central finite differences (relative step 1e-4) against the analytic
// backward pass, over every trainable scalar. inject_fault, when nonzero, is
// added to one analytic gradient entry so callers can verify the check fails
// on wrong gradients.
GradcheckReport gradcheck(const Model& model, const Subject& subject, double tolerance,
                          double inject_fault = 0.0);

// Checkpoint: magic + JSON header (spec, tensor names/shapes) + row-major
// little-endian float64 payload.
void save_checkpoint(const Model& model, const std::string& path);

// Loads name-matching tensors (shapes must agree). With allow_subset the file
// may cover any subset of the model; returns the number of tensors loaded.
int load_checkpoint(Model& model, const std::string& path, bool allow_subset = true);

}  // namespace hkgf
