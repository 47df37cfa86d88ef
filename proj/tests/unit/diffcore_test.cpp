#include <gtest/gtest.h>

#include <cmath>

#include "support/gradcheck.hpp"
#include "udabench/diffcore/adam.hpp"
#include "udabench/diffcore/graph.hpp"
#include "udabench/diffcore/svd.hpp"

using namespace udabench;
using udabench::testing::check_gradients;
using udabench::testing::random_tensor;

TEST(Evaluate, IdentityMatmul) {
  Graph g;
  auto a = Tensor::from_rows({{1, 2}, {3, 4}});
  auto out = matmul(constant(g, Tensor::identity(2)), constant(g, a));
  EXPECT_EQ(out.value(), a);
}

TEST(Evaluate, SoftmaxOfZerosIsUniform) {
  Graph g;
  auto p = row_softmax(constant(g, Tensor::from_rows({{0, 0}})));
  EXPECT_DOUBLE_EQ(p.value()(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(p.value()(0, 1), 0.5);
}

TEST(Evaluate, Relu) {
  Graph g;
  auto r = relu(constant(g, Tensor::from_rows({{-1, 2}})));
  EXPECT_EQ(r.value(), Tensor::from_rows({{0, 2}}));
}

TEST(Evaluate, ShapeMismatchNamesNode) {
  Graph g;
  auto a = constant(g, Tensor(2, 3));
  auto b = constant(g, Tensor(2, 3));
  try {
    matmul(a, b);
    FAIL() << "expected StructuralError";
  } catch (const StructuralError& e) {
    EXPECT_NE(std::string(e.what()).find("node 2 (matmul)"), std::string::npos) << e.what();
  }
}

TEST(Evaluate, NonFiniteNamesNode) {
  Graph g;
  auto x = constant(g, Tensor::from_rows({{-1.0}}));
  try {
    log(x);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("(log)"), std::string::npos) << e.what();
  }
}

TEST(Evaluate, BroadcastRowAndColumn) {
  Graph g;
  auto col = constant(g, Tensor::from_rows({{1}, {2}}));
  auto row = constant(g, Tensor::from_rows({{10, 20, 30}}));
  auto s = add(col, row);
  EXPECT_EQ(s.value(), Tensor::from_rows({{11, 21, 31}, {12, 22, 32}}));
  EXPECT_THROW(add(constant(g, Tensor(2, 3)), constant(g, Tensor(3, 2))), StructuralError);
}

TEST(Backward, SumGivesOnes) {
  Graph g;
  Rng rng(1);
  auto x = g.input(random_tensor(rng, 3, 4), true);
  g.backward(sum(x));
  EXPECT_EQ(x.grad(), Tensor::ones(3, 4));
}

TEST(Backward, SquareAtThree) {
  Graph g;
  auto x = g.input(Tensor::scalar(3.0), true);
  g.backward(mul(x, x));
  EXPECT_DOUBLE_EQ(x.grad().item(), 6.0);
}

TEST(Backward, NonScalarLossIsStructuralError) {
  Graph g;
  auto x = g.input(Tensor(2, 2, 1.0), true);
  EXPECT_THROW(g.backward(x), StructuralError);
}

TEST(Backward, SoftmaxCrossEntropyMatchesFiniteDifferences) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    Graph g;
    auto w = g.input(random_tensor(rng, 4, 3), true);
    auto x = constant(g, random_tensor(rng, 5, 4));
    auto target = constant(g, row_softmax(constant(g, random_tensor(rng, 5, 3))).value());
    auto p = row_softmax(matmul(x, w));
    auto loss = neg(mean(mul(target, log(p, 1e-12))));
    auto r = check_gradients(g, loss, {w});
    EXPECT_LT(r.max_rel_error, 1e-4);
  }
}

TEST(Backward, EveryOpMatchesFiniteDifferences) {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Graph g;
    auto a = g.input(random_tensor(rng, 4, 3), true);
    auto b = g.input(random_tensor(rng, 4, 3), true);
    auto c = g.input(random_tensor(rng, 1, 3), true);
    auto pos = add_scalar(exp(a), 0.5);
    auto t1 = div(mul(b, c), pos);
    auto t2 = softplus(sub(a, c));
    auto t3 = row_log_softmax(concat_cols(a, b));
    auto t4 = l2_row_norm(concat_rows(a, b));
    auto t5 = sort_cols(transpose(b));
    auto t6 = svd_values(a);
    auto t7 = nuclear_norm(b);
    auto t8 = abs(slice_rows(b, 1, 3));
    auto loss = add(add(add(sum(square(t1)), mean(t2)), add(sum(scale(t3, 0.3)), sum(t4))),
                    add(add(sum(mul(t5, t5)), sum(t6)), add(t7, sum(row_sum(col_sum(relu(t8)))))));
    auto r = check_gradients(g, loss, {a, b, c});
    EXPECT_LT(r.max_rel_error, 1e-4) << "trial " << trial;
  }
}

TEST(GradReverse, ForwardIsIdentity) {
  Graph g;
  Rng rng(3);
  auto t = random_tensor(rng, 3, 2);
  auto x = g.input(t, true);
  EXPECT_EQ(grad_reverse(x, 1.7).value(), t);
}

TEST(GradReverse, NegatesAndScales) {
  Graph g;
  auto x = g.input(Tensor::from_rows({{0.3, -0.2}}), true);
  auto upstream = constant(g, Tensor::from_rows({{1.0, -1.0}}));
  g.backward(sum(mul(grad_reverse(x, 2.5), upstream)));
  EXPECT_EQ(x.grad(), Tensor::from_rows({{-2.5, 2.5}}));

  Graph h;
  auto y = h.input(Tensor::from_rows({{0.3, -0.2}}), true);
  h.backward(sum(mul(grad_reverse(y, 1.0), constant(h, Tensor::from_rows({{4.0, 5.0}})))));
  EXPECT_EQ(y.grad(), Tensor::from_rows({{-4.0, -5.0}}));
}

TEST(GradReverse, TwiceRestoresGradient) {
  Rng rng(5);
  Graph g;
  auto x = g.input(random_tensor(rng, 3, 3), true);
  auto w = constant(g, random_tensor(rng, 3, 3));
  g.backward(sum(mul(grad_reverse(grad_reverse(x, 1.0), 1.0), w)));
  EXPECT_EQ(x.grad(), w.value());
}

TEST(GradReverse, RejectsNonPositiveLambda) {
  Graph g;
  auto x = g.input(Tensor(1, 1), true);
  EXPECT_THROW(grad_reverse(x, 0.0), ConfigError);
}

TEST(Svd, DiagonalMatrix) {
  auto s = singular_values(Tensor::from_rows({{3, 0}, {0, 1}}));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[0], 3.0, 1e-14);
  EXPECT_NEAR(s[1], 1.0, 1e-14);
}

TEST(Svd, ZeroMatrix) {
  for (double v : singular_values(Tensor(4, 3))) EXPECT_EQ(v, 0.0);
}

TEST(Svd, FrobeniusIdentityAndOrdering) {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t r = 1 + rng.below(8), c = 1 + rng.below(8);
    Tensor a = random_tensor(rng, r, c);
    auto res = svd(a);
    double ss = 0.0;
    for (std::size_t k = 0; k < res.s.size(); ++k) {
      ss += res.s[k] * res.s[k];
      if (k > 0) { EXPECT_GE(res.s[k - 1], res.s[k]); }
      EXPECT_GE(res.s[k], 0.0);
    }
    EXPECT_NEAR(ss, a.frobenius_sq(), 1e-10 * std::max(1.0, a.frobenius_sq()));
    // Reconstruction U·S·Vᵀ.
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        double v = 0.0;
        for (std::size_t k = 0; k < res.s.size(); ++k) v += res.u(i, k) * res.s[k] * res.v(j, k);
        EXPECT_NEAR(v, a(i, j), 1e-10);
      }
  }
}

TEST(Svd, Random5x4GradientOfSum) {
  Rng rng(99);
  Graph g;
  auto a = g.input(random_tensor(rng, 5, 4), true);
  auto s = svd_values(a);
  EXPECT_NEAR(s.value().frobenius_sq(), a.value().frobenius_sq(), 1e-10);
  auto r = check_gradients(g, sum(s), {a});
  EXPECT_LT(r.max_rel_error, 1e-4);
}

TEST(Svd, WideMatrixGradient) {
  Rng rng(4);
  Graph g;
  auto a = g.input(random_tensor(rng, 3, 7), true);
  auto weights = constant(g, Tensor::column(std::vector<double>{1.0, -0.5, 2.0}));
  auto r = check_gradients(g, sum(mul(svd_values(a), weights)), {a});
  EXPECT_LT(r.max_rel_error, 1e-4);
}

TEST(Svd, IterationCapRaises) {
  Rng rng(8);
  Tensor a = random_tensor(rng, 6, 6);
  EXPECT_THROW(svd(a, SvdOptions{1, 1e-12}), NumericError);
}

TEST(Softmax, RowsAreProbabilities) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    Graph g;
    auto p = row_softmax(constant(g, random_tensor(rng, 1 + rng.below(8), 1 + rng.below(8), 10.0)));
    for (std::size_t i = 0; i < p.rows(); ++i) {
      double s = 0.0;
      for (double v : p.value().row_span(i)) {
        EXPECT_GE(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Dropout, EvaluationIsIdentityAndTrainingScales) {
  Rng rng(2);
  Graph g;
  auto x = g.input(Tensor(50, 40, 1.0), true);
  EXPECT_EQ(dropout(x, 0.5, rng, false).id, x.id);
  auto d = dropout(x, 0.5, rng, true);
  for (double v : d.value().data()) EXPECT_TRUE(v == 0.0 || v == 2.0);
  const double m = d.value().sum() / static_cast<double>(d.value().size());
  EXPECT_NEAR(m, 1.0, 0.1);
  // The mask is fixed once sampled.
  Tensor before = d.value();
  g.evaluate();
  EXPECT_EQ(d.value(), before);
}

TEST(Detach, BlocksGradient) {
  Graph g;
  auto x = g.input(Tensor::scalar(2.0), true);
  auto y = mul(x, detach(x));
  g.backward(y);
  EXPECT_DOUBLE_EQ(x.grad().item(), 2.0);
}

TEST(Adam, ZeroLearningRateOnlyMovesMoments) {
  ParamSet set;
  auto& p = set.add("w", Tensor::from_rows({{1.0, -2.0}}));
  p.grad = Tensor::from_rows({{0.5, 0.5}});
  p.has_grad = true;
  adam_step(set, 0.0);
  EXPECT_EQ(p.value, Tensor::from_rows({{1.0, -2.0}}));
  EXPECT_EQ(p.step, 1);
  EXPECT_NE(p.first_moment[0], 0.0);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParamSet set;
  auto& p = set.add("w", Tensor::scalar(1.0));
  p.grad = Tensor::scalar(1.0);
  p.has_grad = true;
  adam_step(set, 0.1, AdamOptions{0.9, 0.999, 1e-8, 0.0});
  // m̂ = 1, v̂ = 1 → Δ = 0.1 / (1 + 1e-8)
  EXPECT_NEAR(p.value.item(), 1.0 - 0.1 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, IdenticalParamsStayIdentical) {
  ParamSet set;
  set.add("a", Tensor::scalar(0.7));
  set.add("b", Tensor::scalar(0.7));
  auto& a = set.at("a");
  auto& b = set.at("b");
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const double gval = rng.normal();
    a.grad = b.grad = Tensor::scalar(gval);
    a.has_grad = b.has_grad = true;
    adam_step(set, 0.01);
  }
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.step, 20);
}

TEST(Adam, NonFiniteGradientRejected) {
  ParamSet set;
  auto& p = set.add("w", Tensor::scalar(1.0));
  p.grad = Tensor::scalar(std::nan(""));
  p.has_grad = true;
  EXPECT_THROW(adam_step(set, 0.1), NumericError);
  EXPECT_EQ(p.value.item(), 1.0);
}

TEST(Adam, SkipsUnreachedParameters) {
  ParamSet set;
  set.add("used", Tensor::scalar(1.0));
  set.add("unused", Tensor::scalar(1.0));
  auto& used = set.at("used");
  auto& unused = set.at("unused");
  Graph g;
  g.backward(mul(g.param(used), constant(g, Tensor::scalar(3.0))));
  EXPECT_TRUE(used.has_grad);
  EXPECT_FALSE(unused.has_grad);
  adam_step(set, 0.1);
  EXPECT_NE(used.value.item(), 1.0);
  EXPECT_EQ(unused.value.item(), 1.0);
  EXPECT_EQ(unused.step, 0);
}

TEST(Rng, DeterministicAndStreamsDiffer) {
  Rng a(42, 1), b(42, 1), c(42, 2);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    (void)c;
  }
  Rng d(42, 1), e(42, 2);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += d.next_u64() == e.next_u64();
  EXPECT_EQ(same, 0);
  Rng f(42);
  double s = 0.0;
  for (int i = 0; i < 10000; ++i) s += f.uniform();
  EXPECT_NEAR(s / 10000.0, 0.5, 0.02);
}
