#pragma once

#include <functional>
#include <vector>

#include "hkgf/common.hpp"

namespace hkgf {

// Minimal reverse-mode tape over dense matrices. Build a computation by
// chaining ops, then call backward() on a 1x1 root; gradients accumulate into
// grad() of every node marked as requiring gradients. Nodes that no parameter
// feeds into skip gradient work entirely.
class Tape {
 public:
  struct Ref {
    int i = -1;
    bool valid() const { return i >= 0; }
  };

  Ref constant(Matrix v) { return push(std::move(v), false); }
  Ref param(Matrix v) { return push(std::move(v), true); }

  const Matrix& value(Ref r) const { return nodes_[r.i].value; }
  const Matrix& grad(Ref r) const { return nodes_[r.i].grad; }
  bool requires_grad(Ref r) const { return nodes_[r.i].requires_grad; }

  // --- elementwise / structural ---
  Ref add(Ref a, Ref b);
  Ref sub(Ref a, Ref b);
  Ref hadamard(Ref a, Ref b);
  Ref scale(Ref a, double s);
  Ref add_scalar(Ref a, double s);
  Ref add_const(Ref a, const Matrix& c);
  Ref transpose(Ref a);
  Ref concat_cols(Ref a, Ref b);
  Ref block_rows(Ref a, int start, int count);

  // --- matrix products and broadcasts ---
  Ref matmul(Ref a, Ref b);
  Ref add_row_vector(Ref a, Ref b);  // b is 1 x M, added to every row
  Ref scale_rows(Ref a, Ref v);      // v is N x 1
  Ref scale_cols(Ref a, Ref v);      // v is M x 1
  Ref row_sums(Ref a);               // -> N x 1
  Ref mean_rows(Ref a);              // -> 1 x M

  // --- activations ---
  Ref relu(Ref a);
  Ref leaky_relu(Ref a, double slope);
  Ref elu(Ref a, double alpha);
  Ref cosine(Ref a);
  Ref pow_elem(Ref a, double p);  // entries must stay positive on grad paths

  // --- manifold ops, applied row-wise ---
  Ref log_map_rows(Ref a, double c);
  Ref project_rows(Ref a, double c, double eps);
  Ref row_normalize(Ref a);  // zero rows map to zero

  // Softmax per row over mask != 0; entries off the mask come out 0.
  Ref masked_softmax_rows(Ref scores, const Matrix& mask);

  // logits: 1 x K row. Returns a 1x1 loss; probabilities via ce_probs().
  Ref softmax_cross_entropy(Ref logits, int label);
  const Matrix& ce_probs(Ref loss) const;

  void backward(Ref root);

  std::size_t size() const { return nodes_.size(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void()> back;
    bool requires_grad = false;
    Matrix aux;  // op-specific cache (e.g. CE probabilities)
  };

  Ref push(Matrix v, bool requires_grad) {
    nodes_.push_back(Node{std::move(v), Matrix(), nullptr, requires_grad, Matrix()});
    return Ref{static_cast<int>(nodes_.size()) - 1};
  }

  Matrix& grad_buf(int i);
  void accumulate(int i, const Matrix& g);

  std::vector<Node> nodes_;
};

}  // namespace hkgf
