#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "hkgf/autodiff.hpp"
#include "hkgf/common.hpp"

using namespace hkgf;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

// Central finite differences of a scalar-valued tape program with respect to
// every entry of every input, compared against the tape's backward pass.
double max_rel_err(const std::vector<Matrix>& inputs,
                   const std::function<Tape::Ref(Tape&, const std::vector<Tape::Ref>&)>& program) {
  Tape tape;
  std::vector<Tape::Ref> refs;
  for (const auto& in : inputs) refs.push_back(tape.param(in));
  Tape::Ref root = program(tape, refs);
  tape.backward(root);

  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (Eigen::Index r = 0; r < inputs[k].rows(); ++r) {
      for (Eigen::Index c = 0; c < inputs[k].cols(); ++c) {
        const double h = 1e-6 * std::max(std::abs(inputs[k](r, c)), 1.0);
        auto eval = [&](double delta) {
          std::vector<Matrix> shifted = inputs;
          shifted[static_cast<std::size_t>(k)](r, c) += delta;
          Tape t2;
          std::vector<Tape::Ref> rs;
          for (const auto& in : shifted) rs.push_back(t2.constant(in));
          return t2.value(program(t2, rs))(0, 0);
        };
        const double numeric = (eval(h) - eval(-h)) / (2.0 * h);
        const double analytic = tape.grad(refs[k]).size() ? tape.grad(refs[k])(r, c) : 0.0;
        if (std::abs(analytic) + std::abs(numeric) < 1e-10) continue;
        worst = std::max(worst, std::abs(analytic - numeric) /
                                    (std::abs(analytic) + std::abs(numeric)));
      }
    }
  }
  return worst;
}

// Reduce any matrix to a scalar through fixed weights so every entry matters.
Tape::Ref reduce(Tape& tape, Tape::Ref m) {
  const Matrix& v = tape.value(m);
  Matrix left(1, v.rows()), right(v.cols(), 1);
  for (Eigen::Index i = 0; i < v.rows(); ++i) left(0, i) = 0.3 + 0.1 * static_cast<double>(i);
  for (Eigen::Index j = 0; j < v.cols(); ++j) right(j, 0) = 0.7 - 0.05 * static_cast<double>(j);
  return tape.matmul(tape.matmul(tape.constant(left), m), tape.constant(right));
}

}  // namespace

TEST_CASE("binary and unary elementwise ops match finite differences") {
  Rng rng(7);
  const Matrix a = random_matrix(3, 4, rng);
  const Matrix b = random_matrix(3, 4, rng);

  auto check = [&](const char* name,
                   std::function<Tape::Ref(Tape&, const std::vector<Tape::Ref>&)> prog,
                   std::vector<Matrix> ins) {
    CAPTURE(name);
    CHECK(max_rel_err(ins, prog) < 1e-7);
  };

  check("add", [](Tape& t, const std::vector<Tape::Ref>& r) {
    return reduce(t, t.add(r[0], r[1])); }, {a, b});
  check("sub", [](Tape& t, const std::vector<Tape::Ref>& r) {
    return reduce(t, t.sub(r[0], r[1])); }, {a, b});
  check("hadamard", [](Tape& t, const std::vector<Tape::Ref>& r) {
    return reduce(t, t.hadamard(r[0], r[1])); }, {a, b});
  check("scale", [](Tape& t, const std::vector<Tape::Ref>& r) {
    return reduce(t, t.scale(r[0], -1.7)); }, {a});
  check("add_scalar", [](Tape& t, const std::vector<Tape::Ref>& r) {
    return reduce(t, t.add_scalar(r[0], 0.9)); }, {a});
  check("add_const", [&](Tape& t, const std::vector<Tape::Ref>& r) {
    return reduce(t, t.add_const(r[0], b)); }, {a});
  check("transpose", [](Tape& t, const std::vector<Tape::Ref>& r) {
    return reduce(t, t.transpose(r[0])); }, {a});
  check("cosine", [](Tape& t, const std::vector<Tape::Ref>& r) {
    return reduce(t, t.cosine(r[0])); }, {a});
  check("elu", [](Tape& t, const std::vector<Tape::Ref>& r) {
    return reduce(t, t.elu(r[0], 1.3)); }, {a});
  check("leaky_relu", [](Tape& t, const std::vector<Tape::Ref>& r) {
    return reduce(t, t.leaky_relu(r[0], 0.2)); }, {a});
  check("relu", [](Tape& t, const std::vector<Tape::Ref>& r) {
    return reduce(t, t.relu(r[0])); }, {a});
}

TEST_CASE("structural and broadcast ops match finite differences") {
  Rng rng(11);
  const Matrix a = random_matrix(4, 3, rng);
  const Matrix b = random_matrix(4, 2, rng);
  const Matrix row = random_matrix(1, 3, rng);
  const Matrix colv = random_matrix(4, 1, rng);
  const Matrix colw = random_matrix(3, 1, rng);

  CHECK(max_rel_err({a, b}, [](Tape& t, const std::vector<Tape::Ref>& r) {
          return reduce(t, t.concat_cols(r[0], r[1]));
        }) < 1e-7);
  CHECK(max_rel_err({a, row}, [](Tape& t, const std::vector<Tape::Ref>& r) {
          return reduce(t, t.add_row_vector(r[0], r[1]));
        }) < 1e-7);
  CHECK(max_rel_err({a, colv}, [](Tape& t, const std::vector<Tape::Ref>& r) {
          return reduce(t, t.scale_rows(r[0], r[1]));
        }) < 1e-7);
  CHECK(max_rel_err({a, colw}, [](Tape& t, const std::vector<Tape::Ref>& r) {
          return reduce(t, t.scale_cols(r[0], r[1]));
        }) < 1e-7);
  CHECK(max_rel_err({a}, [](Tape& t, const std::vector<Tape::Ref>& r) {
          return reduce(t, t.row_sums(r[0]));
        }) < 1e-7);
  CHECK(max_rel_err({a}, [](Tape& t, const std::vector<Tape::Ref>& r) {
          return reduce(t, t.mean_rows(r[0]));
        }) < 1e-7);
  CHECK(max_rel_err({a}, [](Tape& t, const std::vector<Tape::Ref>& r) {
          return reduce(t, t.block_rows(r[0], 1, 2));
        }) < 1e-7);
  CHECK(max_rel_err({a, b}, [](Tape& t, const std::vector<Tape::Ref>& r) {
          return reduce(t, t.matmul(t.transpose(r[0]), r[1]));
        }) < 1e-7);
}

TEST_CASE("positive-domain and manifold ops match finite differences") {
  Rng rng(13);
  Matrix pos = random_matrix(4, 3, rng).array().abs() + 0.5;
  const Matrix a = random_matrix(4, 3, rng, 0.4);

  CHECK(max_rel_err({pos}, [](Tape& t, const std::vector<Tape::Ref>& r) {
          return reduce(t, t.pow_elem(r[0], -0.5));
        }) < 1e-7);
  CHECK(max_rel_err({a}, [](Tape& t, const std::vector<Tape::Ref>& r) {
          return reduce(t, t.row_normalize(r[0]));
        }) < 1e-7);
  CHECK(max_rel_err({a}, [](Tape& t, const std::vector<Tape::Ref>& r) {
          return reduce(t, t.log_map_rows(r[0], 0.7));
        }) < 1e-7);
  // interior rows: projection is the identity
  CHECK(max_rel_err({a}, [](Tape& t, const std::vector<Tape::Ref>& r) {
          return reduce(t, t.project_rows(r[0], 0.7, 1e-5));
        }) < 1e-7);
  // rows far outside: radial-shrink branch
  Matrix far = 20.0 * random_matrix(4, 3, rng);
  CHECK(max_rel_err({far}, [](Tape& t, const std::vector<Tape::Ref>& r) {
          return reduce(t, t.project_rows(r[0], 0.7, 1e-5));
        }) < 1e-7);
}

TEST_CASE("softmax and cross-entropy ops match finite differences") {
  Rng rng(17);
  const Matrix scores = random_matrix(4, 4, rng);
  Matrix mask = Matrix::Zero(4, 4);
  Rng mrng(5);
  for (int i = 0; i < 4; ++i) {
    mask(i, i) = 1.0;
    for (int j = 0; j < 4; ++j) {
      if (mrng.uniform01() < 0.5) mask(i, j) = 1.0;
    }
  }
  CHECK(max_rel_err({scores}, [&](Tape& t, const std::vector<Tape::Ref>& r) {
          return reduce(t, t.masked_softmax_rows(r[0], mask));
        }) < 1e-7);

  const Matrix logits = random_matrix(1, 2, rng);
  CHECK(max_rel_err({logits}, [](Tape& t, const std::vector<Tape::Ref>& r) {
          return t.softmax_cross_entropy(r[0], 1);
        }) < 1e-7);
}

TEST_CASE("composed program: shared subexpressions accumulate correctly") {
  Rng rng(23);
  const Matrix x = random_matrix(3, 3, rng);
  const Matrix w = random_matrix(3, 3, rng);
  // y = relu(xw) + cos(xw); reuses the xw node twice
  CHECK(max_rel_err({x, w}, [](Tape& t, const std::vector<Tape::Ref>& r) {
          Tape::Ref z = t.matmul(r[0], r[1]);
          return reduce(t, t.add(t.relu(z), t.scale(t.cosine(z), 0.01)));
        }) < 1e-7);
}

TEST_CASE("sym-renorm composition matches finite differences") {
  Rng rng(29);
  // mimic the coupling normalization: symmetrize, shift to [0,1], renormalize
  const Matrix a = random_matrix(4, 4, rng, 0.4);
  CHECK(max_rel_err({a}, [](Tape& t, const std::vector<Tape::Ref>& r) {
          const Eigen::Index n = t.value(r[0]).rows();
          Tape::Ref sym = t.scale(t.add(r[0], t.transpose(r[0])), 0.5);
          Tape::Ref shifted = t.scale(t.add_scalar(sym, 1.0), 0.5);
          Tape::Ref loops = t.add_const(shifted, Matrix::Identity(n, n));
          Tape::Ref deg = t.row_sums(loops);
          Tape::Ref isq = t.pow_elem(deg, -0.5);
          return reduce(t, t.scale_cols(t.scale_rows(loops, isq), isq));
        }) < 1e-7);
}

TEST_CASE("constants do not accumulate gradients and backward requires a param path") {
  Tape tape;
  Tape::Ref c = tape.constant(Matrix::Ones(2, 2));
  Tape::Ref p = tape.param(Matrix::Ones(2, 2));
  Tape::Ref out = tape.matmul(c, p);
  Tape::Ref root = reduce(tape, out);
  tape.backward(root);
  CHECK(tape.grad(c).size() == 0);
  CHECK(tape.grad(p).size() == 4);

  Tape t2;
  Tape::Ref c2 = t2.constant(Matrix::Ones(1, 1));
  CHECK_THROWS_AS(t2.backward(c2), ValidationError);
}
