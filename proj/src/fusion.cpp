#include "hkgf/fusion.hpp"

namespace hkgf {

void CouplingGraph::validate() const {
  require(adjacency.rows() == adjacency.cols(), "coupling adjacency must be square");
  require(features.rows() == adjacency.rows(), "coupling features row count mismatch");
  require((adjacency.array().abs() <= 1.0 + 1e-9).all(),
          "coupling adjacency entries must lie in [-1, 1]");
}

Matrix row_normalize(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double r = x.row(i).norm();
    if (r > 0.0) {
      out.row(i) = x.row(i) / r;
    } else {
      out.row(i).setZero();
    }
  }
  return out;
}

Matrix coupling_adjacency(const Matrix& xf, const Matrix& xs) {
  require(xf.cols() == xs.cols(),
          "coupling_adjacency: embedding widths differ (" + std::to_string(xf.cols()) + " vs " +
              std::to_string(xs.cols()) + ")");
  require(xf.rows() == xs.rows(), "coupling_adjacency: node counts differ");
  return row_normalize(xf) * row_normalize(xs).transpose();
}

Matrix coupling_features(const Matrix& xf, const Matrix& xs) {
  require(xf.rows() == xs.rows(), "coupling_features: node counts differ");
  Matrix out(xf.rows(), xf.cols() + xs.cols());
  out << row_normalize(xf), row_normalize(xs);
  return out;
}

CouplingGraph build_coupling_graph(const Matrix& xf, const Matrix& xs) {
  CouplingGraph g;
  g.adjacency = coupling_adjacency(xf, xs);
  g.features = coupling_features(xf, xs);
  g.validate();
  return g;
}

Matrix coupling_normalized_adjacency(const Matrix& a_c) {
  const Matrix sym = 0.5 * (a_c + a_c.transpose());
  const Matrix shifted = 0.5 * (sym.array() + 1.0);
  return normalize_adjacency(shifted);
}

TapeCoupling coupling_tape(Tape& tape, Tape::Ref xf, Tape::Ref xs) {
  require(tape.value(xf).cols() == tape.value(xs).cols(),
          "coupling_tape: embedding widths differ");
  Tape::Ref nf = tape.row_normalize(xf);
  Tape::Ref ns = tape.row_normalize(xs);
  TapeCoupling out;
  out.adjacency = tape.matmul(nf, tape.transpose(ns));
  out.features = tape.concat_cols(nf, ns);
  return out;
}

Tape::Ref coupling_normalized_adjacency_tape(Tape& tape, Tape::Ref a_c) {
  const Eigen::Index n = tape.value(a_c).rows();
  Tape::Ref sym = tape.scale(tape.add(a_c, tape.transpose(a_c)), 0.5);
  Tape::Ref shifted = tape.scale(tape.add_scalar(sym, 1.0), 0.5);
  Tape::Ref with_loops = tape.add_const(shifted, Matrix::Identity(n, n));
  Tape::Ref degrees = tape.row_sums(with_loops);
  Tape::Ref inv_sqrt = tape.pow_elem(degrees, -0.5);
  return tape.scale_cols(tape.scale_rows(with_loops, inv_sqrt), inv_sqrt);
}

Matrix couple_and_encode(const Matrix& xf, const Matrix& xs, const EncoderSpec& spec,
                         const EncoderParams& params) {
  spec.validate();
  CouplingGraph g = build_coupling_graph(xf, xs);
  require(g.features.cols() == spec.input_dim,
          "couple_and_encode: second-stage input width must equal M_F + M_S");
  ConnectivityGraph cg;
  cg.modality = Modality::kCoupling;
  cg.features = g.features;
  if (is_attention(spec.kind)) {
    // full neighborhoods
    cg.adjacency = Matrix::Ones(g.adjacency.rows(), g.adjacency.cols());
    return encode_graph(cg, spec, params);
  }
  Tape tape;
  std::vector<std::vector<TapeLayerParams>> tape_params;
  for (const auto& p : params.dense) {
    TapeLayerParams tp;
    tp.weight = tape.constant(p.weight);
    tp.bias = tape.constant(p.bias.transpose());
    tp.has_bias = p.bias.size() > 0;
    tape_params.push_back({tp});
  }
  Tape::Ref a_norm = tape.constant(coupling_normalized_adjacency(g.adjacency));
  TapeEncoderOut out =
      encode_graph_tape(tape, a_norm, Matrix(), tape.constant(g.features), spec, tape_params);
  return tape.value(out.out);
}

}  // namespace hkgf
