#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "heroes/diff/gradient_check.h"
#include "heroes/model/losses.h"
#include "heroes/model/network.h"
#include "test_util.h"

namespace heroes {
namespace {

using testing::random_session;
using testing::small_config;

SessionForward run(const QuerySession& s, ModelParams& p, Mode mode,
                   GateSource src = GateSource::kLabels) {
  Tape t;
  return forward_session(t, s, p, {mode, src});
}

TEST(Boundary, Strict) {
  EXPECT_EQ(boundary(0.5), 0);
  EXPECT_EQ(boundary(0.5 + 1e-9), 1);
  EXPECT_EQ(boundary(0.0), 0);
}

TEST(Forward, SingleItem) {
  auto p = ModelParams::initialize(small_config(), 1);
  const auto s = random_session(2, 1, 3);
  for (auto src : {GateSource::kLabels, GateSource::kPredicted}) {
    const auto f = run(s, p, Mode::kBiased, src);
    ASSERT_EQ(f.size(), 1u);
    ASSERT_EQ(f.gates.size(), 1u);
    const int expect = src == GateSource::kLabels ? s.items[0].click : boundary(f.steps[0].p_c);
    EXPECT_EQ(f.gates[0], expect);
  }
}

TEST(Forward, EmptySessionRejected) {
  auto p = ModelParams::initialize(small_config(), 1);
  QuerySession empty;
  Tape t;
  EXPECT_THROW(forward_session(t, empty, p, {}), DataError);
}

TEST(Forward, FeatureMismatchRejected) {
  auto p = ModelParams::initialize(small_config(), 1);
  Tape t;
  EXPECT_THROW(forward_session(t, random_session(1, 3, 5), p, {}), ShapeError);
}

TEST(Forward, NoClicksMeansCvrCopiesThroughout) {
  auto p = ModelParams::initialize(small_config(), 3);
  auto s = random_session(4, 8, 3);
  for (auto& it : s.items) it.click = it.conversion = 0;
  for (Mode m : {Mode::kBiased, Mode::kUnbiasedPlain, Mode::kUnbiasedComb}) {
    const auto f = run(s, p, m);
    for (std::size_t i = 1; i < f.size(); ++i) {
      EXPECT_EQ(f.steps[i].h_v, f.steps[0].h_v);
      EXPECT_EQ(f.steps[i].h_v_tilde, f.steps[0].h_v_tilde);
      EXPECT_EQ(f.steps[i].p_v, f.steps[0].p_v);
      EXPECT_EQ(f.gates[i], 0);
    }
  }
}

// Tracks start equal and share weights, so s~ == s at every step and the
// decay term s~ + (s - s~) e^{-delta} reduces to s: plain and comb coincide.
TEST(Forward, PlainAndCombCoincideWhenTracksAgree) {
  auto p = ModelParams::initialize(small_config(), 5);
  const auto s = random_session(6, 12, 3);
  const auto plain = run(s, p, Mode::kUnbiasedPlain);
  const auto comb = run(s, p, Mode::kUnbiasedComb);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(plain.steps[i].h_c, comb.steps[i].h_c);
    EXPECT_EQ(plain.steps[i].p_c, comb.steps[i].p_c);
    EXPECT_EQ(plain.steps[i].p_v, comb.steps[i].p_v);
    EXPECT_EQ(comb.steps[i].h_c, comb.steps[i].h_c_tilde);
  }
}

// With separate track weights the tracks diverge and decay matters.
TEST(Forward, DecayChangesBehavioralTrack) {
  auto cfg = small_config();
  cfg.share_track_params = false;
  auto p = ModelParams::initialize(cfg, 5);
  const auto s = random_session(6, 12, 3);
  const auto plain = run(s, p, Mode::kUnbiasedPlain);
  const auto comb = run(s, p, Mode::kUnbiasedComb);
  bool differs = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    differs |= plain.steps[i].p_c != comb.steps[i].p_c;
    EXPECT_EQ(plain.steps[i].p_c_tilde, comb.steps[i].p_c_tilde);
  }
  EXPECT_TRUE(differs);
}

TEST(Forward, LabelGatesAreDeterministic) {
  auto p = ModelParams::initialize(small_config(), 8);
  const auto s = random_session(9, 10, 3);
  auto copy = s;
  copy.query_id = 999;
  const auto a = run(s, p, Mode::kBiased), b = run(copy, p, Mode::kBiased);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(a.gates[i], s.items[i].click);
    EXPECT_EQ(a.steps[i].h_c, b.steps[i].h_c);
    EXPECT_EQ(a.steps[i].h_v_tilde, b.steps[i].h_v_tilde);
  }
}

TEST(Forward, InferMatchesTraining) {
  auto p = ModelParams::initialize(small_config(), 10);
  const auto s = random_session(11, 7, 3);
  Tape t1, t2;
  const ForwardOptions o{Mode::kUnbiasedComb, GateSource::kPredicted};
  const auto a = forward_session(t1, s, p, o);
  const ModelParams& cp = p;
  const auto b = infer_session(t2, s, cp, o);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(a.steps[i].p_c_tilde, b.steps[i].p_c_tilde);
    EXPECT_EQ(a.steps[i].p_v_tilde, b.steps[i].p_v_tilde);
  }
}

TEST(Forward, AblationsRun) {
  for (Ablation ab : {Ablation::kIntra, Ablation::kInter, Ablation::kUnit}) {
    auto p = ModelParams::initialize(small_config(ab), 12);
    const auto s = random_session(13, 6, 3);
    for (Mode m : {Mode::kBiased, Mode::kUnbiasedPlain, Mode::kUnbiasedComb}) {
      const auto f = run(s, p, m);
      ASSERT_EQ(f.size(), 6u);
      for (const auto& st : f.steps) {
        EXPECT_GT(st.p_c, 0.0);
        EXPECT_LT(st.p_v, 1.0);
      }
    }
  }
}

// Intra-off: an item's CTR output depends on that item alone.
TEST(Forward, IntraHasNoWithinLayerMemory) {
  auto p = ModelParams::initialize(small_config(Ablation::kIntra), 14);
  auto s = random_session(15, 5, 3);
  const auto a = run(s, p, Mode::kBiased);
  s.items[0].features = {5.0, -5.0, 5.0};
  s.items[1].click = 1 - s.items[1].click;
  const auto b = run(s, p, Mode::kBiased);
  for (std::size_t i = 2; i < s.size(); ++i) EXPECT_EQ(a.steps[i].p_c, b.steps[i].p_c);
}

TEST(Predict, BiasedProduct) {
  SessionForward f;
  f.mode = Mode::kBiased;
  f.steps.resize(3);
  f.steps[0].p_c_tilde = 0.4, f.steps[0].p_v_tilde = 0.5;
  f.steps[1].p_c_tilde = 0.7, f.steps[1].p_v_tilde = 1.0;
  f.steps[2].p_c_tilde = 0.0, f.steps[2].p_v_tilde = 0.8;
  const auto p = predict_biased(f, Track::kInherent);
  EXPECT_DOUBLE_EQ(p.click[0], 0.4);
  EXPECT_DOUBLE_EQ(p.conversion[0], 0.2);
  EXPECT_EQ(p.conversion[1], p.click[1]);
  EXPECT_EQ(p.conversion[2], 0.0);
  EXPECT_THROW(predict_unbiased(f, Track::kInherent), std::invalid_argument);
  f.mode = Mode::kUnbiasedPlain;
  EXPECT_THROW(predict_biased(f, Track::kInherent), std::invalid_argument);
}

TEST(Predict, BiasedProductOnRollout) {
  auto p = ModelParams::initialize(small_config(), 16);
  const auto s = random_session(17, 9, 3);
  const auto f = run(s, p, Mode::kBiased);
  for (Track tr : {Track::kBehavioral, Track::kInherent}) {
    const auto pr = predict(f, tr);
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_LE(pr.conversion[i], pr.click[i]);
      const double pv = tr == Track::kBehavioral ? f.steps[i].p_v : f.steps[i].p_v_tilde;
      EXPECT_EQ(pr.conversion[i], pr.click[i] * pv);
    }
  }
}

TEST(Predict, UnrollExamples) {
  double left = 0.0;
  auto u = unroll_hazards(std::vector<double>{0.5, 0.5}, &left);
  EXPECT_DOUBLE_EQ(u[0], 0.5);
  EXPECT_DOUBLE_EQ(u[1], 0.25);
  EXPECT_DOUBLE_EQ(left, 0.25);
  u = unroll_hazards(std::vector<double>{1.0, 0.3});
  EXPECT_EQ(u[0], 1.0);
  EXPECT_EQ(u[1], 0.0);
  u = unroll_hazards(std::vector<double>{0.2, 0.5, 0.5});
  EXPECT_NEAR(u[0], 0.2, 1e-15);
  EXPECT_NEAR(u[1], 0.4, 1e-15);
  EXPECT_NEAR(u[2], 0.2, 1e-15);
}

TEST(Predict, ChainNormalizationAndMonotoneTail) {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 20);
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<double> h(static_cast<std::size_t>(len(rng)));
    for (double& x : h) x = u(rng);
    double left = 0.0;
    const auto pz = unroll_hazards(h, &left);
    double total = left, tail = 1.0;
    for (double v : pz) {
      total += v;
      const double next = tail - v;
      EXPECT_LE(next, tail + 1e-15);
      tail = next;
    }
    EXPECT_NEAR(total, 1.0, 1e-10);
  }
}

TEST(Rank, Examples) {
  EXPECT_EQ(rank_scores(std::vector<double>{0.1, 0.9}), (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(rank_scores(std::vector<double>{0.4, 0.4, 0.4}), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(rank_scores(std::vector<double>{0.3, 0.3, 0.7}), (std::vector<std::size_t>{2, 0, 1}));
}

double check_mode(Mode mode, std::uint64_t seed, std::size_t length, Ablation ab = Ablation::kNone,
                  bool behavior = false) {
  auto cfg = small_config(ab);
  cfg.use_behavior_embedding = behavior;
  auto p = ModelParams::initialize(cfg, seed);
  const auto s = random_session(seed + 100, length, 3);
  const auto params = p.trainable();
  LossOptions lo;
  lo.mode = mode;
  const auto r = diff::gradient_check([&](Tape& t) {
    const auto f = forward_session(t, s, p, {mode, GateSource::kLabels});
    return total_loss(t, f, s, lo);
  }, params, 1e-5);
  if (r.max_relative_error >= 1e-4) {
    ADD_FAILURE() << "worst " << r.worst_parameter << "[" << r.worst_index << "] analytic "
                  << r.worst_analytic << " numeric " << r.worst_numeric;
  }
  return r.max_relative_error;
}

TEST(GradCheck, TwoStepCell) {
  EXPECT_LT(check_mode(Mode::kBiased, 21, 2), 1e-4);
}

TEST(GradCheck, FullRolloutAllModes) {
  for (Mode m : {Mode::kBiased, Mode::kUnbiasedPlain, Mode::kUnbiasedComb}) {
    for (std::uint64_t seed : {31u, 32u}) {
      EXPECT_LT(check_mode(m, seed, 4), 1e-4) << to_string(m) << " seed " << seed;
    }
  }
  EXPECT_LT(check_mode(Mode::kBiased, 33, 3), 1e-4);
}

TEST(GradCheck, AblationsAndBehaviorEmbedding) {
  for (Ablation ab : {Ablation::kIntra, Ablation::kInter, Ablation::kUnit}) {
    EXPECT_LT(check_mode(Mode::kUnbiasedComb, 41, 4, ab), 1e-4) << to_string(ab);
    EXPECT_LT(check_mode(Mode::kBiased, 42, 4, ab), 1e-4) << to_string(ab);
  }
  EXPECT_LT(check_mode(Mode::kUnbiasedComb, 43, 5, Ablation::kNone, true), 1e-4);
}

}  // namespace
}  // namespace heroes
