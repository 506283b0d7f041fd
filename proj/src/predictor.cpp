#include "hkgf/predictor.hpp"

#include <cmath>

namespace hkgf {

void HnnParams::validate(int input_dim) const {
  require(w1.rows() == input_dim, "hnn: layer-1 input width mismatch");
  require(w1.cols() == b1.size() && w2.rows() == w1.cols(), "hnn: hidden widths inconsistent");
  require(w2.cols() == b2.size() && w_out.rows() == w2.cols(), "hnn: hidden widths inconsistent");
  require(w_out.cols() == 2 && b_out.size() == 2, "hnn: output layer must produce 2 logits");
}

HnnParams init_hnn_params(int input_dim, int hidden, Rng& rng) {
  require(input_dim >= 1 && hidden >= 1, "hnn dims must be positive");
  auto glorot = [&rng](int rows, int cols) {
    const double limit = std::sqrt(6.0 / (rows + cols));
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-limit, limit);
    return m;
  };
  HnnParams p;
  p.w1 = glorot(input_dim, hidden);
  p.b1 = Vector::Zero(hidden);
  p.w2 = glorot(hidden, hidden);
  p.b2 = Vector::Zero(hidden);
  p.w_out = glorot(hidden, 2);
  p.b_out = Vector::Zero(2);
  return p;
}

Vector average_pool(const Matrix& x_cp) {
  require(x_cp.rows() >= 1 && x_cp.cols() >= 1, "average_pool: empty input");
  return x_cp.colwise().mean().transpose();
}

namespace {

TapeHnnParams to_tape(Tape& tape, const HnnParams& p) {
  TapeHnnParams tp;
  tp.w1 = tape.constant(p.w1);
  tp.b1 = tape.constant(p.b1.transpose());
  tp.w2 = tape.constant(p.w2);
  tp.b2 = tape.constant(p.b2.transpose());
  tp.w_out = tape.constant(p.w_out);
  tp.b_out = tape.constant(p.b_out.transpose());
  return tp;
}

}  // namespace

Tape::Ref hnn_tape(Tape& tape, Tape::Ref x_row, const TapeHnnParams& p,
                   const CurvatureConfig& cfg, bool hyperbolic) {
  auto dense = [&](Tape::Ref in, Tape::Ref w, Tape::Ref b) {
    Tape::Ref pre = in;
    if (hyperbolic) {
      pre = tape.log_map_rows(tape.project_rows(in, cfg.c, cfg.epsilon), cfg.c);
    }
    return tape.relu(tape.add_row_vector(tape.matmul(pre, w), b));
  };
  Tape::Ref h1 = dense(x_row, p.w1, p.b1);
  Tape::Ref h2 = dense(h1, p.w2, p.b2);
  return tape.add_row_vector(tape.matmul(h2, p.w_out), p.b_out);
}

Vector hnn_forward(const Vector& x, const HnnParams& p, const CurvatureConfig& cfg) {
  p.validate(static_cast<int>(x.size()));
  require(x.allFinite(), "hnn_forward: non-finite input");
  Tape tape;
  Tape::Ref logits = hnn_tape(tape, tape.constant(x.transpose()), to_tape(tape, p), cfg, true);
  return tape.value(logits).row(0).transpose();
}

Vector mlp_forward(const Vector& x, const HnnParams& p) {
  p.validate(static_cast<int>(x.size()));
  require(x.allFinite(), "mlp_forward: non-finite input");
  Tape tape;
  CurvatureConfig cfg;  // unused on the Euclidean path
  Tape::Ref logits = hnn_tape(tape, tape.constant(x.transpose()), to_tape(tape, p), cfg, false);
  return tape.value(logits).row(0).transpose();
}

CeResult softmax_cross_entropy(const Vector& logits, int label) {
  require(logits.size() >= 2, "softmax_cross_entropy: need at least 2 logits");
  require(logits.allFinite(), "softmax_cross_entropy: non-finite logits");
  require(label >= 0 && label < logits.size(), "softmax_cross_entropy: label out of range");
  const double mx = logits.maxCoeff();
  Vector ex = (logits.array() - mx).exp();
  const double sum = ex.sum();
  CeResult r;
  r.probs = ex / sum;
  r.loss = std::log(sum) + mx - logits(label);
  return r;
}

}  // namespace hkgf
