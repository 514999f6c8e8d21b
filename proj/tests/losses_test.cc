#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "heroes/diff/gradient_check.h"
#include "heroes/model/losses.h"
#include "test_util.h"

namespace heroes {
namespace {

const double kLn2 = std::log(2.0);
using V = std::vector<double>;

TEST(Bce, Examples) {
  EXPECT_NEAR(bce_value(V{0.5}, std::vector<int>{1}), kLn2, 1e-12);
  EXPECT_NEAR(bce_value(V{0.5, 0.5}, std::vector<int>{0, 1}), 2 * kLn2, 1e-12);
  EXPECT_NEAR(bce_value(V{1.0, 0.0}, std::vector<int>{1, 0}), 0.0, 1e-6);
  EXPECT_NEAR(bce_value(V{0.9, 0.2}, std::vector<int>{1, 0}), 0.328504, 1e-6);
  EXPECT_THROW(bce_value(V{0.5}, std::vector<int>{1, 0}), ShapeError);
}

TEST(Survival, PdfExamples) {
  EXPECT_NEAR(pdf_loss_value(V{0.5}, 0), kLn2, 1e-12);
  EXPECT_NEAR(pdf_loss_value(V{0.2, 0.5}, 1), 0.916291, 1e-6);
  EXPECT_LT(pdf_loss_value(V{1.0 - 1e-12, 0.4}, 0), 1e-6);
  Tape t;
  EXPECT_THROW(pdf_loss(t, LayerOutcome{{t.scalar(0.5)}, std::nullopt}), std::invalid_argument);
}

TEST(Survival, OccurExamples) {
  EXPECT_NEAR(occur_loss_value(V{0.3}), 1.203973, 1e-6);
  EXPECT_NEAR(occur_loss_value(V{0.5, 0.5}), 0.287682, 1e-6);
  EXPECT_LT(occur_loss_value(V{0.1, 1.0, 0.2}), 1e-6);
  EXPECT_TRUE(std::isfinite(occur_loss_value(V{0.0, 0.0})));
}

TEST(Survival, NonOccurExamples) {
  EXPECT_NEAR(non_occur_loss_value(V{0.5, 0.5}), 2 * kLn2, 1e-12);
  EXPECT_LT(non_occur_loss_value(V{1e-9, 1e-9, 1e-9}), 1e-6);
  EXPECT_NEAR(non_occur_loss_value(V{0.1, 0.2}), 0.328504, 1e-6);
  EXPECT_TRUE(std::isfinite(non_occur_loss_value(V{1.0})));
}

TEST(Survival, Combined) {
  Tape t;
  const LayerOutcome none{{t.scalar(0.4), t.scalar(0.3)}, std::nullopt};
  EXPECT_EQ(survival_loss(t, none, 0.0).value(), 0.0);
  const LayerOutcome one{{t.scalar(0.5)}, 0};
  EXPECT_NEAR(survival_loss(t, one, 1.0).value(), 2 * kLn2, 1e-12);
  const LayerOutcome two{{t.scalar(0.2), t.scalar(0.6)}, 1};
  EXPECT_EQ(survival_loss(t, two, 0.0).value(), pdf_loss(t, two).value());
}

TEST(Survival, PartitionOracle) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 20);
  for (int rep = 0; rep < 1000; ++rep) {
    V h(static_cast<std::size_t>(len(rng)));
    for (double& x : h) x = u(rng);
    const double non = std::exp(-non_occur_loss_value(h));
    double total = non;
    for (std::size_t j = 0; j < h.size(); ++j) total += std::exp(-pdf_loss_value(h, j));
    ASSERT_NEAR(total, 1.0, 1e-10);
    ASSERT_NEAR(std::exp(-occur_loss_value(h)) + non, 1.0, 1e-10);
  }
}

TEST(Segment, SplitsAtEvents) {
  Tape t;
  std::vector<Var> h;
  for (int i = 0; i < 6; ++i) h.push_back(t.scalar(0.1 * (i + 1)));
  const auto eps = segment_episodes(h, std::vector<int>{0, 1, 1, 0, 0, 0});
  ASSERT_EQ(eps.size(), 3u);
  EXPECT_EQ(eps[0].hazards.size(), 2u);
  EXPECT_EQ(eps[0].event, 1u);
  EXPECT_EQ(eps[1].hazards.size(), 1u);
  EXPECT_EQ(eps[1].event, 0u);
  EXPECT_EQ(eps[2].hazards.size(), 3u);
  EXPECT_FALSE(eps[2].event);
  EXPECT_TRUE(segment_episodes(h, std::vector<int>{1, 0, 0, 0, 0, 1}).back().event);
}

// Hand-built 2-item session evaluated stage by stage.
void make_forward(Tape& t, SessionForward& f, const V& pc, const V& pv) {
  f.vars.resize(pc.size());
  f.steps.resize(pc.size());
  for (std::size_t i = 0; i < pc.size(); ++i) {
    f.vars[i].p_c = t.scalar(pc[i]);
    f.vars[i].p_v = t.scalar(pv[i]);
  }
}

QuerySession labels(std::vector<int> c, std::vector<int> v) {
  QuerySession s;
  for (std::size_t i = 0; i < c.size(); ++i) s.items.push_back({{}, c[i], v[i], {}, {}});
  return s;
}

TEST(Total, BiasedAndAlpha) {
  Tape t;
  SessionForward f;
  make_forward(t, f, {0.7, 0.2}, {0.4, 0.9});
  const auto s = labels({1, 0}, {1, 0});
  LossOptions o;
  o.weights.alpha = 0.0;
  const double click = -(std::log(0.7) + std::log(0.8));
  EXPECT_NEAR(total_loss(t, f, s, o).value(), click, 1e-12);
  o.weights.alpha = 2.0;
  const double conv = -(std::log(0.28) + std::log(1.0 - 0.18));
  EXPECT_NEAR(total_loss(t, f, s, o).value(), click + 2.0 * conv, 1e-12);
}

TEST(Total, BiasedPerfect) {
  Tape t;
  SessionForward f;
  make_forward(t, f, {1.0, 0.0, 1.0}, {1.0, 0.3, 0.0});
  LossOptions o;
  EXPECT_LT(total_loss(t, f, labels({1, 0, 1}, {1, 0, 0}), o).value(), 1e-6);
}

TEST(Total, UnbiasedSegmentsAndClickedSubsequence) {
  Tape t;
  SessionForward f;
  const V pc{0.3, 0.6, 0.2, 0.4}, pv{0.5, 0.25, 0.9, 0.7};
  make_forward(t, f, pc, pv);
  const auto s = labels({0, 1, 0, 1}, {0, 0, 0, 1});
  LossOptions o;
  o.mode = Mode::kUnbiasedPlain;
  o.weights = {1.5, 0.5};
  const double beta = 0.5;
  const double click =
      pdf_loss_value(V{0.3, 0.6}, 1) + beta * occur_loss_value(V{0.3, 0.6}) +
      pdf_loss_value(V{0.2, 0.4}, 1) + beta * occur_loss_value(V{0.2, 0.4});
  // conversions over the clicked items 1 and 3: hazards (0.25, 0.7), event at the second
  const double conv = pdf_loss_value(V{0.25, 0.7}, 1) + beta * occur_loss_value(V{0.25, 0.7});
  EXPECT_NEAR(total_loss(t, f, s, o).value(), click + 1.5 * conv, 1e-12);

  const auto none = labels({0, 0, 0, 0}, {0, 0, 0, 0});
  EXPECT_NEAR(total_loss(t, f, none, o).value(), beta * non_occur_loss_value(pc), 1e-12);
}

TEST(Total, LengthMismatch) {
  Tape t;
  SessionForward f;
  make_forward(t, f, {0.5}, {0.5});
  EXPECT_THROW(total_loss(t, f, labels({1, 0}, {0, 0}), {}), ShapeError);
}

TEST(Weights, Validation) {
  EXPECT_NO_THROW((LossWeights{0.0, 0.0}.validate()));
  EXPECT_THROW((LossWeights{-1.0, 1.0}.validate()), ConfigError);
  EXPECT_THROW((LossWeights{1.0, NAN}.validate()), ConfigError);
}

TEST(GradCheck, SurvivalLosses) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    diff::Parameter z("z", diff::Tensor::vector({u(rng), u(rng), u(rng), u(rng), u(rng)}));
    diff::Parameter* ps[] = {&z};
    const std::vector<int> ev{0, 1, 0, 0, rep % 2};
    const auto r = diff::gradient_check([&](Tape& t) {
      const Var h = t.sigmoid(t.param(z));
      std::vector<Var> hs;
      for (std::size_t i = 0; i < 5; ++i) hs.push_back(t.slice(h, i, 1));
      Var total = bce(t, hs, ev);
      for (const auto& e : segment_episodes(hs, ev)) total = t.add(total, survival_loss(t, e, 0.7));
      return total;
    }, ps);
    ASSERT_LT(r.max_relative_error, 1e-4);
  }
}

}  // namespace
}  // namespace heroes
