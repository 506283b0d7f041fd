#pragma once

#include "hkgf/layers.hpp"

namespace hkgf {

// Cross-modality SC-FC coupling graph: cosine similarities between the
// row-normalized modality embeddings, plus their concatenation as features.
struct CouplingGraph {
  Matrix adjacency;  // N x N, entries in [-1, 1]
  Matrix features;   // N x (M_F + M_S)

  void validate() const;
};

// Row-wise L2 normalization; zero rows stay zero.
Matrix row_normalize(const Matrix& x);

// A_C[i][j] = cos(xf_i, xs_j). Requires equal embedding widths.
Matrix coupling_adjacency(const Matrix& xf, const Matrix& xs);

// [row_normalize(xf) | row_normalize(xs)].
Matrix coupling_features(const Matrix& xf, const Matrix& xs);

CouplingGraph build_coupling_graph(const Matrix& xf, const Matrix& xs);

// Signed coupling weights shifted to [0, 1] after symmetrization, then
// renormalized with self-loops; the dense-encoder aggregation matrix.
Matrix coupling_normalized_adjacency(const Matrix& a_c);

// Builds the coupling graph and runs the second-stage encoder on it. Attention
// kinds use full neighborhoods (dense A_C keeps every node a neighbor).
Matrix couple_and_encode(const Matrix& xf, const Matrix& xs, const EncoderSpec& spec,
                         const EncoderParams& params);

// --- tape builders --------------------------------------------------------------

struct TapeCoupling {
  Tape::Ref adjacency;  // A_C
  Tape::Ref features;   // X_C
};

TapeCoupling coupling_tape(Tape& tape, Tape::Ref xf, Tape::Ref xs);

Tape::Ref coupling_normalized_adjacency_tape(Tape& tape, Tape::Ref a_c);

}  // namespace hkgf
