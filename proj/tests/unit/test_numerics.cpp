// Copyright 2026 The ticon-desk Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "ticon/errors.hpp"
#include "ticon/numerics/gradcheck.hpp"
#include "ticon/numerics/ops.hpp"
#include "ticon/numerics/optim.hpp"
#include "ticon/rng.hpp"

using namespace ticon;
using namespace ticon::num;

namespace {

Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Tensor t = Tensor::matrix(r, c);
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

// Projects an op output onto fixed random weights so the scalar depends on
// every output component (plain sums of softmax rows are constant).
Var project(Tape& tape, Var y, std::uint64_t seed) {
  Rng rng(seed);
  Tensor w = random_tensor(rng, y.rows(), y.cols());
  return ops::sum(ops::mul(y, tape.constant(std::move(w))));
}

using OpCase = std::function<Var(Tape&, Var, Rng&, std::size_t, std::size_t)>;

// Runs 50 random instances with rows, cols <= 16.
double worst_over_random_inputs(const OpCase& op, double input_scale = 1.0) {
  Rng shapes(12345);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t r = 1 + shapes.below(16);
    const std::size_t c = 1 + shapes.below(16);
    Tensor x = random_tensor(shapes, r, c, input_scale);
    const std::uint64_t aux_seed = shapes.next_u64();
    worst = std::max(worst, grad_check(
                                [&](Tape& t, Var in) {
                                  Rng aux(aux_seed);
                                  return project(t, op(t, in, aux, r, c), aux_seed + 1);
                                },
                                x, 1e-5));
  }
  return worst;
}

}  // namespace

TEST(GradCheck, PolynomialGradient) {
  const Tensor x = Tensor::from_rows({{1.0, 2.0}});
  const double err = grad_check([](Tape&, Var v) { return ops::sum(ops::mul(v, v)); }, x, 1e-5);
  EXPECT_LE(err, 1e-6);

  Tape tape;
  Var v = tape.leaf(x);
  tape.backward(ops::sum(ops::mul(v, v)));
  EXPECT_DOUBLE_EQ(v.grad()[0], 2.0);
  EXPECT_DOUBLE_EQ(v.grad()[1], 4.0);
}

TEST(GradCheck, CosineAgainstFixedVector) {
  Rng rng(7);
  const Tensor c = random_tensor(rng, 1, 8);
  const Tensor x = random_tensor(rng, 1, 8);
  const double err = grad_check(
      [&](Tape& t, Var v) { return ops::sum(ops::cosine_rows(v, t.constant(c))); }, x, 1e-5);
  EXPECT_LE(err, 1e-5);
}

TEST(GradCheck, NonFiniteIsNumericalError) {
  const Tensor x = Tensor::from_rows({{0.0, 0.0}});
  EXPECT_THROW(grad_check([](Tape&, Var v) { return ops::sum(ops::l2_normalize_rows(v)); }, x),
               NumericalError);
}

TEST(Primitives, MatmulGradients) {
  EXPECT_LE(worst_over_random_inputs([](Tape& t, Var x, Rng& aux, std::size_t, std::size_t c) {
              return ops::matmul(x, t.constant(random_tensor(aux, c, 5)));
            }),
            1e-5);
  EXPECT_LE(worst_over_random_inputs([](Tape& t, Var x, Rng& aux, std::size_t, std::size_t) {
              return ops::matmul(t.constant(random_tensor(aux, 3, x.rows())), x);
            }),
            1e-5);
  EXPECT_LE(worst_over_random_inputs([](Tape& t, Var x, Rng& aux, std::size_t, std::size_t c) {
              return ops::matmul_nt(x, t.constant(random_tensor(aux, 4, c)));
            }),
            1e-5);
  // Both operands depend on x: x x^T.
  EXPECT_LE(worst_over_random_inputs(
                [](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::matmul_nt(x, x); }),
            1e-5);
}

TEST(Primitives, ElementwiseGradients) {
  EXPECT_LE(worst_over_random_inputs([](Tape& t, Var x, Rng& aux, std::size_t r, std::size_t c) {
              return ops::add(x, t.constant(random_tensor(aux, r, c)));
            }),
            1e-5);
  EXPECT_LE(worst_over_random_inputs(
                [](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::mul(x, x); }),
            1e-5);
  EXPECT_LE(worst_over_random_inputs([](Tape& t, Var x, Rng& aux, std::size_t r, std::size_t c) {
              return ops::sub(ops::mul(x, t.constant(random_tensor(aux, r, c))), x);
            }),
            1e-5);
  EXPECT_LE(worst_over_random_inputs([](Tape& t, Var x, Rng& aux, std::size_t, std::size_t c) {
              return ops::add_row(x, t.constant(random_tensor(aux, 1, c)));
            }),
            1e-5);
  // Bias gradient: broadcast row added to a constant matrix.
  EXPECT_LE(worst_over_random_inputs([](Tape& t, Var x, Rng& aux, std::size_t, std::size_t c) {
              return ops::add_row(t.constant(random_tensor(aux, 6, c)), ops::mean_rows(x));
            }),
            1e-5);
}

TEST(Primitives, NonlinearityGradients) {
  EXPECT_LE(worst_over_random_inputs(
                [](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::gelu(x); }, 2.0),
            1e-5);
  EXPECT_LE(worst_over_random_inputs(
                [](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::tanh(x); }, 2.0),
            1e-5);
  EXPECT_LE(worst_over_random_inputs(
                [](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::sigmoid(x); }, 2.0),
            1e-5);
}

TEST(Primitives, LayerNormGradients) {
  EXPECT_LE(worst_over_random_inputs([](Tape& t, Var x, Rng& aux, std::size_t, std::size_t c) {
              Var g = t.constant(random_tensor(aux, 1, c));
              Var b = t.constant(random_tensor(aux, 1, c));
              return ops::layer_norm(x, g, b);
            }),
            1e-5);
  // Gradient with respect to the scale, via a parameter.
  Rng rng(3);
  Parameter gamma("g", random_tensor(rng, 1, 6));
  Parameter beta("b", random_tensor(rng, 1, 6));
  const Tensor x = random_tensor(rng, 4, 6);
  std::vector<Parameter*> ps{&gamma, &beta};
  const double err = grad_check_params(
      [&](Tape& t) {
        return project(t, ops::layer_norm(t.constant(x), t.param(gamma), t.param(beta)), 9);
      },
      ps);
  EXPECT_LE(err, 1e-5);
}

TEST(Primitives, SoftmaxGradients) {
  EXPECT_LE(worst_over_random_inputs([](Tape&, Var x, Rng&, std::size_t, std::size_t) {
              return ops::softmax_rows(x);
            }),
            1e-5);
  EXPECT_LE(worst_over_random_inputs([](Tape&, Var x, Rng& aux, std::size_t r, std::size_t c) {
              static thread_local Tensor bias;
              bias = random_tensor(aux, r, c);
              return ops::softmax_rows(x, &bias);
            }),
            1e-5);
  EXPECT_LE(worst_over_random_inputs([](Tape&, Var x, Rng&, std::size_t, std::size_t) {
              return ops::log_softmax_rows(x);
            }),
            1e-5);
}

TEST(Primitives, NormalizationGradients) {
  EXPECT_LE(worst_over_random_inputs([](Tape&, Var x, Rng&, std::size_t, std::size_t) {
              return ops::l2_normalize_rows(x);
            }),
            1e-5);
  EXPECT_LE(worst_over_random_inputs([](Tape& t, Var x, Rng& aux, std::size_t r, std::size_t c) {
              return ops::cosine_rows(x, t.constant(random_tensor(aux, r, c)));
            }),
            1e-5);
}

TEST(Primitives, StructuralGradients) {
  EXPECT_LE(worst_over_random_inputs([](Tape&, Var x, Rng& aux, std::size_t r, std::size_t) {
              std::vector<std::size_t> idx;
              for (std::size_t i = 0; i < 1 + aux.below(r); ++i) idx.push_back(aux.below(r));
              return ops::mean_rows(x, idx);
            }),
            1e-5);
  EXPECT_LE(worst_over_random_inputs([](Tape& t, Var x, Rng& aux, std::size_t r, std::size_t) {
              return ops::concat_cols({x, t.constant(random_tensor(aux, r, 3)), x});
            }),
            1e-5);
  EXPECT_LE(worst_over_random_inputs([](Tape& t, Var x, Rng& aux, std::size_t, std::size_t c) {
              return ops::concat_rows({t.constant(random_tensor(aux, 2, c)), x, x});
            }),
            1e-5);
  EXPECT_LE(worst_over_random_inputs([](Tape&, Var x, Rng& aux, std::size_t r, std::size_t) {
              std::vector<std::size_t> idx;
              for (int i = 0; i < 7; ++i) idx.push_back(aux.below(r));
              return ops::gather_rows(x, idx);
            }),
            1e-5);
  EXPECT_LE(worst_over_random_inputs([](Tape&, Var x, Rng& aux, std::size_t, std::size_t c) {
              const std::size_t start = aux.below(c);
              return ops::slice_cols(x, start, c - start);
            }),
            1e-5);
  EXPECT_LE(worst_over_random_inputs(
                [](Tape&, Var x, Rng&, std::size_t, std::size_t) { return ops::transpose(x); }),
            1e-5);
  EXPECT_LE(worst_over_random_inputs([](Tape&, Var x, Rng&, std::size_t, std::size_t) {
              return ops::repeat_rows(ops::mean_rows(x), 5);
            }),
            1e-5);
  EXPECT_LE(worst_over_random_inputs([](Tape&, Var x, Rng& aux, std::size_t r, std::size_t c) {
              std::vector<std::size_t> cols(r);
              for (auto& v : cols) v = aux.below(c);
              return ops::pick_cols(x, cols);
            }),
            1e-5);
}

TEST(Primitives, SoftmaxRowsArePositiveAndSumToOne) {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor x = random_tensor(rng, 1 + rng.below(16), 1 + rng.below(16), 5.0);
    const Tensor bias = random_tensor(rng, x.rows(), x.cols(), 3.0);
    Tape tape(false);
    const Tensor y = ops::softmax_rows(tape.constant(x), &bias).value();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double s = 0.0;
      for (double v : y.row_span(r)) {
        EXPECT_GT(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Primitives, SoftmaxNegativeInfinityBiasExcludesColumn) {
  Tape tape(false);
  Tensor bias = Tensor::from_rows({{0.0, -std::numeric_limits<double>::infinity(), 0.0}});
  const Tensor y = ops::softmax_rows(tape.constant(Tensor::from_rows({{1.0, 5.0, 1.0}})), &bias).value();
  EXPECT_EQ(y[1], 0.0);
  EXPECT_DOUBLE_EQ(y[0], 0.5);
}

TEST(Primitives, L2NormalizeUnitNormAndZeroRejected) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Tape tape(false);
    const Tensor y =
        ops::l2_normalize_rows(tape.constant(random_tensor(rng, 3, 1 + rng.below(16), 10.0))).value();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double s = 0.0;
      for (double v : y.row_span(r)) s += v * v;
      EXPECT_NEAR(std::sqrt(s), 1.0, 1e-12);
    }
  }
  Tape tape(false);
  EXPECT_THROW(ops::l2_normalize_rows(tape.constant(Tensor::matrix(2, 3))), NumericalError);
}

TEST(Primitives, MeanRowsBackwardDistributesToGatheredRows) {
  Tape tape;
  Var x = tape.leaf(Tensor::matrix(5, 2, 1.0));
  const std::vector<std::size_t> idx{1, 3};
  tape.backward(ops::sum(ops::mean_rows(x, idx)));
  for (std::size_t r = 0; r < 5; ++r) {
    const double expected = (r == 1 || r == 3) ? 0.5 : 0.0;
    EXPECT_EQ(x.grad()(r, 0), expected);
    EXPECT_EQ(x.grad()(r, 1), expected);
  }
}

TEST(Primitives, NonFiniteForwardIsHardError) {
  Tape tape;
  EXPECT_THROW(tape.leaf(Tensor::from_rows({{std::nan("")}})), NumericalError);
  Var big = tape.leaf(Tensor::from_rows({{1e300}}));
  EXPECT_THROW(ops::mul(big, big), NumericalError);
}

TEST(Primitives, ShapeMismatchIsShapeError) {
  Tape tape;
  Var a = tape.leaf(Tensor::matrix(2, 3));
  Var b = tape.leaf(Tensor::matrix(2, 4));
  EXPECT_THROW(ops::add(a, b), ShapeError);
  EXPECT_THROW(ops::matmul(a, b), ShapeError);
}

TEST(AdamW, ZeroLearningRateLeavesParamsButUpdatesMoments) {
  Parameter p("p", Tensor::from_rows({{1.5, -2.0}}));
  p.grad = Tensor::from_rows({{0.3, -0.7}});
  OptState st;
  std::vector<Parameter*> ps{&p};
  adamw_step(ps, st, 0.0, {0.9, 0.95, 0.05, 1e-8});
  EXPECT_EQ(p.value, Tensor::from_rows({{1.5, -2.0}}));
  EXPECT_EQ(st.step_count, 1u);
  EXPECT_NEAR(st.first_moment[0][0], 0.1 * 0.3, 1e-15);
  EXPECT_NEAR(st.second_moment[0][1], 0.05 * 0.49, 1e-15);
}

TEST(AdamW, SingleScalarFirstStep) {
  Parameter p("p", Tensor::scalar(1.0));
  p.grad = Tensor::scalar(1.0);
  OptState st;
  std::vector<Parameter*> ps{&p};
  adamw_step(ps, st, 0.1, {0.9, 0.95, 0.0, 1e-8});
  // mhat = vhat = 1 after bias correction.
  EXPECT_NEAR(p.value.item(), 1.0 - 0.1 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p.value.item(), 0.9, 1e-8);
}

TEST(AdamW, DecayOnlyPath) {
  Parameter p("p", Tensor::from_rows({{2.0, -4.0}}));
  OptState st;
  std::vector<Parameter*> ps{&p};
  adamw_step(ps, st, 0.1, {0.9, 0.95, 0.05, 1e-8});
  EXPECT_DOUBLE_EQ(p.value[0], 2.0 * (1.0 - 0.1 * 0.05));
  EXPECT_DOUBLE_EQ(p.value[1], -4.0 * (1.0 - 0.1 * 0.05));
}

TEST(AdamW, ExactIdentityWithoutStepOrDecay) {
  Rng rng(11);
  Parameter p("p", random_tensor(rng, 4, 4));
  const Tensor before = p.value;
  OptState st;
  std::vector<Parameter*> ps{&p};
  for (int i = 0; i < 5; ++i) {
    p.grad = random_tensor(rng, 4, 4);
    adamw_step(ps, st, 0.0, {0.9, 0.95, 0.0, 1e-8});
  }
  EXPECT_EQ(p.value, before);
  EXPECT_EQ(st.step_count, 5u);
}

TEST(AdamW, ShapeMismatchRejected) {
  Parameter p("p", Tensor::matrix(2, 2));
  OptState st;
  std::vector<Parameter*> ps{&p};
  adamw_step(ps, st, 0.1, {});
  Parameter q("q", Tensor::matrix(3, 2));
  std::vector<Parameter*> qs{&q};
  EXPECT_THROW(adamw_step(qs, st, 0.1, {}), ShapeError);
}

TEST(Schedule, WarmupAndCosineEndpoints) {
  Schedule s{2e-4, 200, 2000, 0.1};
  EXPECT_EQ(lr_at(0, s), 0.0);
  EXPECT_DOUBLE_EQ(lr_at(200, s), 2e-4);
  EXPECT_NEAR(lr_at(2000, s), 2e-5, 1e-18);
  EXPECT_DOUBLE_EQ(lr_at(100, s), 1e-4);
  EXPECT_NEAR(lr_at(1100, s), 2e-5 + 0.5 * (2e-4 - 2e-5), 1e-15);
  EXPECT_THROW(lr_at(-1, s), RangeError);
  EXPECT_THROW(lr_at(2001, s), RangeError);
  for (std::int64_t i = 201; i <= 2000; ++i) EXPECT_LE(lr_at(i, s), lr_at(i - 1, s));
}

TEST(Schedule, ValidateRejectsBadWarmup) {
  EXPECT_THROW((Schedule{1e-3, 0, 10, 0.1}).validate(), ConfigError);
  EXPECT_THROW((Schedule{1e-3, 11, 10, 0.1}).validate(), ConfigError);
  EXPECT_NO_THROW((Schedule{1e-3, 10, 10, 0.1}).validate());
}

TEST(Rng, StreamsAreStableAndDistinct) {
  EXPECT_EQ(stream_seed(1, "maskplan/iter7"), stream_seed(1, "maskplan/iter7"));
  EXPECT_NE(stream_seed(1, "maskplan/iter7"), stream_seed(1, "maskplan/iter8"));
  EXPECT_NE(stream_seed(1, "a"), stream_seed(2, "a"));
  Rng a = Rng::stream(3, "x"), b = Rng::stream(3, "x");
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}
