#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "heroes/diff/gradient_check.h"
#include "heroes/diff/tape.h"

namespace heroes::diff {
namespace {

TEST(Primitive, SigmoidOfZero) {
  Tape t;
  EXPECT_DOUBLE_EQ(t.sigmoid(t.scalar(0.0)).value(), 0.5);
}

TEST(Primitive, IdentityMatvec) {
  Tape t;
  const Var w = t.constant(Tensor::matrix(2, 2, {1, 0, 0, 1}));
  const Var y = t.matvec(w, t.constant({3.0, 4.0}));
  EXPECT_EQ(y.values()[0], 3.0);
  EXPECT_EQ(y.values()[1], 4.0);
}

TEST(Primitive, Concat) {
  Tape t;
  const Var y = t.concat({t.constant({1.0}), t.constant({2.0, 3.0})});
  ASSERT_EQ(y.size(), 3u);
  EXPECT_EQ(y.value(0), 1.0);
  EXPECT_EQ(y.value(2), 3.0);
}

TEST(Primitive, ShapeMismatchNamesBothShapes) {
  Tape t;
  try {
    t.add(t.constant({1.0, 2.0}), t.constant({1.0, 2.0, 3.0}));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("add"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[2]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[3]"), std::string::npos) << msg;
  }
}

TEST(Primitive, LogDomain) {
  Tape t;
  EXPECT_THROW(t.log(t.constant({1.0, 0.0})), DomainError);
  EXPECT_THROW(t.log(t.scalar(-2.0)), DomainError);
}

TEST(Tensor, RankLimit) {
  EXPECT_THROW(Tensor({2, 2, 2}), ShapeError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(Softplus, ClosedForms) {
  EXPECT_NEAR(scaled_softplus(0.0, 5.0), 5.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(scaled_softplus(50.0, 5.0), 50.0 + 5.0 * std::log1p(std::exp(-10.0)), 1e-12);
  const double tiny = scaled_softplus(-1000.0, 5.0);
  EXPECT_GT(tiny, 0.0);
  EXPECT_LT(tiny, 1e-80);
  EXPECT_THROW(scaled_softplus(1.0, 0.0), ConfigError);
  Tape t;
  EXPECT_THROW(t.softplus(t.scalar(1.0), -1.0), ConfigError);
}

TEST(Softplus, MonotoneAndPositive) {
  double prev = 0.0;
  for (double x = -800.0; x <= 800.0; x += 3.7) {
    const double v = scaled_softplus(x, 5.0);
    EXPECT_GT(v, 0.0);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Backward, SigmoidSlopeAtZero) {
  Parameter w("w", Tensor::vector({0.0}));
  Tape t;
  const Var root = t.sigmoid(t.mul(t.param(w), t.scalar(1.0)));
  t.backward(root);
  EXPECT_DOUBLE_EQ(w.grad[0], 0.25);
}

TEST(Backward, Bilinear) {
  Parameter a("a", Tensor::vector({1.0, 2.0}));
  Tape t;
  t.backward(t.sum(t.mul(t.param(a), t.constant({3.0, 4.0}))));
  EXPECT_EQ(a.grad[0], 3.0);
  EXPECT_EQ(a.grad[1], 4.0);
}

TEST(Backward, RootMustBeScalar) {
  Parameter a("a", Tensor::vector({1.0, 2.0}));
  Tape t;
  EXPECT_THROW(t.backward(t.param(a)), ShapeError);
}

TEST(Backward, TwoUsesAccumulate) {
  // y = x*x + 3x  →  dy/dx = 2x + 3
  Parameter x("x", Tensor::vector({1.5}));
  Tape t;
  const Var xv = t.param(x);
  t.backward(t.sum(t.add(t.mul(xv, xv), t.scale(xv, 3.0))));
  EXPECT_DOUBLE_EQ(x.grad[0], 2 * 1.5 + 3.0);
}

TEST(Backward, DetachAndFrozenBlockGradient) {
  Parameter x("x", Tensor::vector({2.0}));
  Tape t;
  const Var xv = t.param(x);
  t.backward(t.sum(t.mul(xv, t.detach(xv))));
  EXPECT_DOUBLE_EQ(x.grad[0], 2.0);

  x.zero_grad();
  Tape t2;
  t2.backward(t2.sum(t2.mul(t2.frozen(x), t2.scalar(3.0))));
  EXPECT_EQ(x.grad[0], 0.0);
}

TEST(GradCheck, Quadratic) {
  Parameter w("w", Tensor::vector({3.0}));
  Parameter* ps[] = {&w};
  const auto r = gradient_check([&](Tape& t) {
    const Var v = t.param(w);
    return t.sum(t.mul(v, v));
  }, ps, 1e-5);
  EXPECT_LT(r.max_relative_error, 1e-8);
  EXPECT_NEAR(w.grad[0], 6.0, 1e-12);
  EXPECT_EQ(w.value[0], 3.0);
}

TEST(GradCheck, ConstantObjective) {
  Parameter w("w", Tensor::vector({0.7, -0.2}));
  Parameter* ps[] = {&w};
  const auto r = gradient_check([&](Tape& t) {
    t.param(w);
    const Var p = t.scalar(0.5);
    return t.neg(t.log(p));
  }, ps);
  EXPECT_EQ(r.max_relative_error, 0.0);
  EXPECT_EQ(w.grad[0], 0.0);
  EXPECT_EQ(w.grad[1], 0.0);
}

TEST(GradCheck, RejectsBadEps) {
  Parameter w("w", Tensor::vector({1.0}));
  Parameter* ps[] = {&w};
  auto f = [&](Tape& t) { return t.sum(t.param(w)); };
  EXPECT_THROW(gradient_check(f, ps, 1e-8), ConfigError);
  EXPECT_THROW(gradient_check(f, ps, 1e-2), ConfigError);
}

TEST(GradCheck, NonFiniteNamesParameter) {
  Parameter w("scale_w", Tensor::vector({1e-6}));
  Parameter* ps[] = {&w};
  try {
    gradient_check([&](Tape& t) { return t.sum(t.log(t.param(w))); }, ps, 1e-5);
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("scale_w"), std::string::npos) << e.what();
  }
}

// Every primitive against central differences over random seeds.
TEST(GradCheck, PrimitivesRandomSeeds) {
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.5, 2.0);
    Parameter a("a", Tensor::vector({u(rng), u(rng), u(rng)}));
    Parameter b("b", Tensor::vector({u(rng), u(rng), u(rng)}));
    Parameter m("m", Tensor::matrix(2, 3, {u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)}));
    Parameter p("p", Tensor::vector({pos(rng), pos(rng)}));
    Parameter* ps[] = {&a, &b, &m, &p};
    const auto r = gradient_check([&](Tape& t) {
      const Var av = t.param(a), bv = t.param(b), mv = t.param(m), pv = t.param(p);
      const Var ab = t.mul(t.add(av, bv), t.sub(av, bv));
      const Var mvx = t.matvec(mv, t.tanh(ab));
      const Var joined = t.concat({t.sigmoid(mvx), t.exp(t.neg(pv)), t.log(pv)});
      const Var piece = t.slice(joined, 1, 3);
      const Var sp = t.softplus(t.affine(piece, 2.0, -0.3), 5.0);
      const Var cl = t.clamp(t.scale(sp, 0.1), -10.0, 10.0);
      return t.sum(t.add(cl, t.shift(t.slice(joined, 0, 3), 0.2)));
    }, ps, 1e-5);
    ASSERT_LT(r.max_relative_error, 1e-4)
        << "seed " << seed << " worst " << r.worst_parameter << "[" << r.worst_index << "]";
  }
}

TEST(Tape, Deterministic) {
  auto run = [] {
    Parameter a("a", Tensor::vector({0.3, -0.8}));
    Tape t;
    const Var av = t.param(a);
    const Var y = t.sum(t.mul(t.sigmoid(av), t.tanh(t.scale(av, 3.1))));
    t.backward(y);
    return std::make_pair(y.value(), a.grad);
  };
  const auto r1 = run(), r2 = run();
  EXPECT_EQ(r1.first, r2.first);
  EXPECT_EQ(r1.second, r2.second);
}

TEST(Tape, SparseMatvecMatchesDense) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> w(3 * 8);
  for (double& v : w) v = u(rng);
  std::vector<double> x(8, 0.0);
  x[5] = 1.0;
  Parameter wp("w", Tensor::matrix(3, 8, w));
  Parameter* ps[] = {&wp};
  Tape t;
  const Var y = t.matvec(t.param(wp), t.constant(x));
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(y.value(r), w[r * 8 + 5]);
  const auto res = gradient_check([&](Tape& tt) {
    return tt.sum(tt.sigmoid(tt.matvec(tt.param(wp), tt.constant(x))));
  }, ps);
  EXPECT_LT(res.max_relative_error, 1e-6);
}

}  // namespace
}  // namespace heroes::diff
