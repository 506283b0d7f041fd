#include "hkgf/autodiff.hpp"

#include <cmath>

#include "hkgf/manifold.hpp"

namespace hkgf {

Matrix& Tape::grad_buf(int i) {
  Node& n = nodes_[i];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(int i, const Matrix& g) {
  if (!nodes_[i].requires_grad) return;
  grad_buf(i) += g;
}

Tape::Ref Tape::add(Ref a, Ref b) {
  Ref out = push(value(a) + value(b), requires_grad(a) || requires_grad(b));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, b, out]() {
      accumulate(a.i, nodes_[out.i].grad);
      accumulate(b.i, nodes_[out.i].grad);
    };
  }
  return out;
}

Tape::Ref Tape::sub(Ref a, Ref b) {
  Ref out = push(value(a) - value(b), requires_grad(a) || requires_grad(b));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, b, out]() {
      accumulate(a.i, nodes_[out.i].grad);
      if (nodes_[b.i].requires_grad) grad_buf(b.i) -= nodes_[out.i].grad;
    };
  }
  return out;
}

Tape::Ref Tape::hadamard(Ref a, Ref b) {
  Ref out = push(value(a).cwiseProduct(value(b)), requires_grad(a) || requires_grad(b));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, b, out]() {
      if (nodes_[a.i].requires_grad)
        grad_buf(a.i) += nodes_[out.i].grad.cwiseProduct(nodes_[b.i].value);
      if (nodes_[b.i].requires_grad)
        grad_buf(b.i) += nodes_[out.i].grad.cwiseProduct(nodes_[a.i].value);
    };
  }
  return out;
}

Tape::Ref Tape::scale(Ref a, double s) {
  Ref out = push(s * value(a), requires_grad(a));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, s, out]() { grad_buf(a.i) += s * nodes_[out.i].grad; };
  }
  return out;
}

Tape::Ref Tape::add_scalar(Ref a, double s) {
  Ref out = push(value(a).array() + s, requires_grad(a));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, out]() { grad_buf(a.i) += nodes_[out.i].grad; };
  }
  return out;
}

Tape::Ref Tape::add_const(Ref a, const Matrix& c) {
  Ref out = push(value(a) + c, requires_grad(a));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, out]() { grad_buf(a.i) += nodes_[out.i].grad; };
  }
  return out;
}

Tape::Ref Tape::transpose(Ref a) {
  Ref out = push(value(a).transpose(), requires_grad(a));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, out]() { grad_buf(a.i) += nodes_[out.i].grad.transpose(); };
  }
  return out;
}

Tape::Ref Tape::concat_cols(Ref a, Ref b) {
  require(value(a).rows() == value(b).rows(), "concat_cols: row mismatch");
  Matrix v(value(a).rows(), value(a).cols() + value(b).cols());
  v << value(a), value(b);
  Ref out = push(std::move(v), requires_grad(a) || requires_grad(b));
  if (nodes_[out.i].requires_grad) {
    const Eigen::Index ca = value(a).cols();
    nodes_[out.i].back = [this, a, b, out, ca]() {
      const Matrix& g = nodes_[out.i].grad;
      if (nodes_[a.i].requires_grad) grad_buf(a.i) += g.leftCols(ca);
      if (nodes_[b.i].requires_grad) grad_buf(b.i) += g.rightCols(g.cols() - ca);
    };
  }
  return out;
}

Tape::Ref Tape::block_rows(Ref a, int start, int count) {
  require(start >= 0 && count >= 1 && start + count <= value(a).rows(),
          "block_rows: slice out of range");
  Ref out = push(value(a).middleRows(start, count), requires_grad(a));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, out, start, count]() {
      grad_buf(a.i).middleRows(start, count) += nodes_[out.i].grad;
    };
  }
  return out;
}

Tape::Ref Tape::matmul(Ref a, Ref b) {
  require(value(a).cols() == value(b).rows(), "matmul: inner dimension mismatch");
  Ref out = push(value(a) * value(b), requires_grad(a) || requires_grad(b));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, b, out]() {
      const Matrix& g = nodes_[out.i].grad;
      if (nodes_[a.i].requires_grad) grad_buf(a.i).noalias() += g * nodes_[b.i].value.transpose();
      if (nodes_[b.i].requires_grad) grad_buf(b.i).noalias() += nodes_[a.i].value.transpose() * g;
    };
  }
  return out;
}

Tape::Ref Tape::add_row_vector(Ref a, Ref b) {
  require(value(b).rows() == 1 && value(b).cols() == value(a).cols(),
          "add_row_vector: b must be 1 x cols(a)");
  Ref out = push(value(a).rowwise() + value(b).row(0), requires_grad(a) || requires_grad(b));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, b, out]() {
      const Matrix& g = nodes_[out.i].grad;
      if (nodes_[a.i].requires_grad) grad_buf(a.i) += g;
      if (nodes_[b.i].requires_grad) grad_buf(b.i) += g.colwise().sum();
    };
  }
  return out;
}

Tape::Ref Tape::scale_rows(Ref a, Ref v) {
  require(value(v).cols() == 1 && value(v).rows() == value(a).rows(),
          "scale_rows: v must be rows(a) x 1");
  Ref out = push(value(v).asDiagonal() * value(a), requires_grad(a) || requires_grad(v));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, v, out]() {
      const Matrix& g = nodes_[out.i].grad;
      if (nodes_[a.i].requires_grad) grad_buf(a.i) += nodes_[v.i].value.asDiagonal() * g;
      if (nodes_[v.i].requires_grad)
        grad_buf(v.i) += g.cwiseProduct(nodes_[a.i].value).rowwise().sum();
    };
  }
  return out;
}

Tape::Ref Tape::scale_cols(Ref a, Ref v) {
  require(value(v).cols() == 1 && value(v).rows() == value(a).cols(),
          "scale_cols: v must be cols(a) x 1");
  Ref out = push(value(a) * value(v).col(0).asDiagonal(), requires_grad(a) || requires_grad(v));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, v, out]() {
      const Matrix& g = nodes_[out.i].grad;
      if (nodes_[a.i].requires_grad)
        grad_buf(a.i) += g * nodes_[v.i].value.col(0).asDiagonal();
      if (nodes_[v.i].requires_grad)
        grad_buf(v.i) += g.cwiseProduct(nodes_[a.i].value).colwise().sum().transpose();
    };
  }
  return out;
}

Tape::Ref Tape::row_sums(Ref a) {
  Ref out = push(value(a).rowwise().sum(), requires_grad(a));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, out]() {
      grad_buf(a.i).colwise() += nodes_[out.i].grad.col(0);
    };
  }
  return out;
}

Tape::Ref Tape::mean_rows(Ref a) {
  const double inv_n = 1.0 / static_cast<double>(value(a).rows());
  Ref out = push(value(a).colwise().mean(), requires_grad(a));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, out, inv_n]() {
      grad_buf(a.i).rowwise() += inv_n * nodes_[out.i].grad.row(0);
    };
  }
  return out;
}

Tape::Ref Tape::relu(Ref a) {
  Ref out = push(value(a).cwiseMax(0.0), requires_grad(a));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, out]() {
      // subgradient 0 at the kink
      grad_buf(a.i) +=
          nodes_[out.i].grad.cwiseProduct((nodes_[a.i].value.array() > 0.0).cast<double>().matrix());
    };
  }
  return out;
}

Tape::Ref Tape::leaky_relu(Ref a, double slope) {
  Matrix v = value(a).unaryExpr([slope](double x) { return x >= 0.0 ? x : slope * x; });
  Ref out = push(std::move(v), requires_grad(a));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, out, slope]() {
      // slope used at the kink
      Matrix d = nodes_[a.i].value.unaryExpr([slope](double x) { return x > 0.0 ? 1.0 : slope; });
      grad_buf(a.i) += nodes_[out.i].grad.cwiseProduct(d);
    };
  }
  return out;
}

Tape::Ref Tape::elu(Ref a, double alpha) {
  Matrix v = value(a).unaryExpr(
      [alpha](double x) { return x >= 0.0 ? x : alpha * std::expm1(x); });
  Ref out = push(std::move(v), requires_grad(a));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, out, alpha]() {
      Matrix d = nodes_[a.i].value.unaryExpr(
          [alpha](double x) { return x >= 0.0 ? 1.0 : alpha * std::exp(x); });
      grad_buf(a.i) += nodes_[out.i].grad.cwiseProduct(d);
    };
  }
  return out;
}

Tape::Ref Tape::cosine(Ref a) {
  Ref out = push(value(a).array().cos(), requires_grad(a));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, out]() {
      grad_buf(a.i) -=
          nodes_[out.i].grad.cwiseProduct(nodes_[a.i].value.array().sin().matrix());
    };
  }
  return out;
}

Tape::Ref Tape::pow_elem(Ref a, double p) {
  Ref out = push(value(a).array().pow(p), requires_grad(a));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, out, p]() {
      Matrix d = p * nodes_[a.i].value.array().pow(p - 1.0);
      grad_buf(a.i) += nodes_[out.i].grad.cwiseProduct(d);
    };
  }
  return out;
}

Tape::Ref Tape::log_map_rows(Ref a, double c) {
  const Matrix& x = value(a);
  const double sqrt_c = std::sqrt(c);
  Matrix v(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    v.row(i) = logmap_scale(sqrt_c * x.row(i).norm()) * x.row(i);
  }
  Ref out = push(std::move(v), requires_grad(a));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, out, c, sqrt_c]() {
      const Matrix& x = nodes_[a.i].value;
      const Matrix& g = nodes_[out.i].grad;
      Matrix& acc = grad_buf(a.i);
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double r = x.row(i).norm();
        const double t = sqrt_c * r;
        const double s = logmap_scale(t);
        // k = s'(r)/r, with the small-t series continuing it through r = 0.
        double k;
        if (t < 1e-4) {
          k = c * (2.0 / 3.0 + 0.8 * t * t);
        } else {
          k = c * (1.0 / (1.0 - t * t) - s) / (t * t);
        }
        const double gz = g.row(i).dot(x.row(i));
        acc.row(i) += s * g.row(i) + (k * gz) * x.row(i);
      }
    };
  }
  return out;
}

Tape::Ref Tape::project_rows(Ref a, double c, double eps) {
  const Matrix& x = value(a);
  const double sqrt_c = std::sqrt(c);
  Matrix v = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double norm = x.row(i).norm();
    if (sqrt_c * norm >= 1.0) v.row(i) = (1.0 - eps) / (sqrt_c * norm) * x.row(i);
  }
  Ref out = push(std::move(v), requires_grad(a));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, out, eps, sqrt_c]() {
      const Matrix& x = nodes_[a.i].value;
      const Matrix& g = nodes_[out.i].grad;
      Matrix& acc = grad_buf(a.i);
      const double kf = (1.0 - eps) / sqrt_c;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double r = x.row(i).norm();
        if (sqrt_c * r < 1.0) {
          acc.row(i) += g.row(i);
        } else {
          const double gz = g.row(i).dot(x.row(i));
          acc.row(i) += kf / r * g.row(i) - (kf * gz / (r * r * r)) * x.row(i);
        }
      }
    };
  }
  return out;
}

Tape::Ref Tape::row_normalize(Ref a) {
  const Matrix& x = value(a);
  Matrix v(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double r = x.row(i).norm();
    if (r > 0.0) {
      v.row(i) = x.row(i) / r;
    } else {
      v.row(i).setZero();
    }
  }
  Ref out = push(std::move(v), requires_grad(a));
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, a, out]() {
      const Matrix& x = nodes_[a.i].value;
      const Matrix& u = nodes_[out.i].value;
      const Matrix& g = nodes_[out.i].grad;
      Matrix& acc = grad_buf(a.i);
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double r = x.row(i).norm();
        if (r > 0.0) {
          const double gu = g.row(i).dot(u.row(i));
          acc.row(i) += (g.row(i) - gu * u.row(i)) / r;
        }
        // zero rows: subgradient 0
      }
    };
  }
  return out;
}

Tape::Ref Tape::masked_softmax_rows(Ref scores, const Matrix& mask) {
  const Matrix& s = value(scores);
  require(mask.rows() == s.rows() && mask.cols() == s.cols(), "masked_softmax: shape mismatch");
  Matrix v = Matrix::Zero(s.rows(), s.cols());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (mask(i, j) != 0.0) mx = std::max(mx, s(i, j));
    }
    require(std::isfinite(mx), "masked_softmax: a row has an empty neighborhood");
    double z = 0.0;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (mask(i, j) != 0.0) {
        v(i, j) = std::exp(s(i, j) - mx);
        z += v(i, j);
      }
    }
    v.row(i) /= z;
  }
  Ref out = push(std::move(v), requires_grad(scores));
  if (nodes_[out.i].requires_grad) {
    Matrix mask_copy = mask;
    nodes_[out.i].back = [this, scores, out, mask_copy]() {
      const Matrix& alpha = nodes_[out.i].value;
      const Matrix& g = nodes_[out.i].grad;
      Matrix& acc = grad_buf(scores.i);
      for (Eigen::Index i = 0; i < alpha.rows(); ++i) {
        double dot = 0.0;
        for (Eigen::Index j = 0; j < alpha.cols(); ++j) {
          if (mask_copy(i, j) != 0.0) dot += g(i, j) * alpha(i, j);
        }
        for (Eigen::Index j = 0; j < alpha.cols(); ++j) {
          if (mask_copy(i, j) != 0.0) acc(i, j) += alpha(i, j) * (g(i, j) - dot);
        }
      }
    };
  }
  return out;
}

Tape::Ref Tape::softmax_cross_entropy(Ref logits, int label) {
  const Matrix& z = value(logits);
  require(z.rows() == 1, "softmax_cross_entropy: logits must be a single row");
  require(label >= 0 && label < z.cols(), "softmax_cross_entropy: label out of range");
  const double mx = z.maxCoeff();
  Matrix shifted = z.array() - mx;
  Matrix ex = shifted.array().exp();
  const double sum = ex.sum();
  Matrix probs = ex / sum;
  const double loss = std::log(sum) + mx - z(0, label);
  Ref out = push(Matrix::Constant(1, 1, loss), requires_grad(logits));
  nodes_[out.i].aux = probs;
  if (nodes_[out.i].requires_grad) {
    nodes_[out.i].back = [this, logits, out, label]() {
      const double g = nodes_[out.i].grad(0, 0);
      Matrix d = nodes_[out.i].aux;
      d(0, label) -= 1.0;
      grad_buf(logits.i) += g * d;
    };
  }
  return out;
}

const Matrix& Tape::ce_probs(Ref loss) const { return nodes_[loss.i].aux; }

void Tape::backward(Ref root) {
  require(root.valid() && value(root).size() == 1, "backward: root must be a 1x1 node");
  require(nodes_[root.i].requires_grad,
          "backward: root does not depend on any parameter");
  grad_buf(root.i) = Matrix::Constant(1, 1, 1.0);
  for (int i = root.i; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.back && n.grad.size() != 0) n.back();
  }
}

}  // namespace hkgf
