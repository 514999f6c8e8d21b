#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "heroes/data/corpus_io.h"
#include "heroes/errors.h"
#include "heroes/sim/generator.h"
#include "heroes/sim/pbm.h"

namespace heroes::sim {
namespace {

GeneratorConfig quick(std::uint64_t seed, std::size_t n = 200) {
  GeneratorConfig g;
  g.n_queries = n;
  g.seed = seed;
  g.calibrate = false;
  return g;
}

QuerySession uniform_session(std::size_t n, double rel) {
  QuerySession s;
  s.query_id = 7;
  for (std::size_t i = 0; i < n; ++i) {
    Item it;
    it.features = {0.0};
    it.true_click_rel = rel;
    it.true_conv_rel = rel;
    s.items.push_back(it);
  }
  return s;
}

bool same_corpus(const Corpus& a, const Corpus& b) {
  std::ostringstream x, y;
  write_corpus(x, a);
  write_corpus(y, b);
  return x.str() == y.str();
}

TEST(Generator, SameSeedSameCorpus) {
  EXPECT_TRUE(same_corpus(gen_sessions(quick(5)).sessions, gen_sessions(quick(5)).sessions));
  EXPECT_FALSE(same_corpus(gen_sessions(quick(5)).sessions, gen_sessions(quick(6)).sessions));
}

TEST(Generator, ShapesAndEntireSpace) {
  const GeneratorConfig g = quick(1);
  const Corpus c = gen_sessions(g).sessions;
  ASSERT_EQ(c.size(), g.n_queries);
  for (const QuerySession& s : c) {
    EXPECT_GE(s.size(), g.min_length);
    EXPECT_LE(s.size(), g.max_length);
    EXPECT_TRUE(s.has_true_relevance());
    for (const Item& it : s.items) {
      EXPECT_EQ(it.features.size(), g.features);
      EXPECT_LE(it.conversion, it.click);
      EXPECT_GE(*it.true_click_rel, 0.0);
      EXPECT_LE(*it.true_click_rel, 1.0);
      EXPECT_LE(*it.true_conv_rel, *it.true_click_rel + 1e-15);
    }
  }
}

TEST(Generator, NoContextEffectsMatchesBaseRate) {
  GeneratorConfig g = quick(11, 2000);
  g.excitation = 0.0;
  g.discouragement = 0.0;
  double expected = 0.0, var = 0.0, clicks = 0.0;
  for (const QuerySession& s : gen_sessions(g).sessions) {
    for (const Item& it : s.items) {
      const double p = *it.true_click_rel;
      expected += p;
      var += p * (1.0 - p);
      clicks += it.click;
    }
  }
  EXPECT_LT(std::abs(clicks - expected), 3.0 * std::sqrt(var));
}

TEST(Generator, ExcitationAndDiscouragementMoveClickRate) {
  auto rate = [](GeneratorConfig g) {
    double c = 0, n = 0;
    for (const QuerySession& s : gen_sessions(g).sessions) {
      for (const Item& it : s.items) {
        c += it.click;
        ++n;
      }
    }
    return c / n;
  };
  GeneratorConfig base = quick(3, 1000);
  base.excitation = base.discouragement = 0.0;
  GeneratorConfig excite = base;
  excite.excitation = 2.0;
  GeneratorConfig discourage = base;
  discourage.discouragement = 8.0;
  EXPECT_GT(rate(excite), rate(base));
  EXPECT_LT(rate(discourage), rate(base));
}

TEST(Generator, InvalidRangesRejected) {
  GeneratorConfig g = quick(1);
  g.min_length = 5;
  g.max_length = 4;
  EXPECT_THROW(gen_sessions(g), ConfigError);
  g = quick(1);
  g.n_queries = 0;
  EXPECT_THROW(gen_sessions(g), ConfigError);
  g = quick(1);
  g.distractors = g.features;
  EXPECT_THROW(gen_sessions(g), ConfigError);
}

TEST(Generator, DefaultCalibrationHitsGapTargets) {
  GeneratorConfig g;
  g.n_queries = 10000;
  g.seed = 2024;
  const GeneratedCorpus gc = gen_sessions(g);
  const GapStats gaps = measure_gaps(gc.sessions);
  EXPECT_NEAR(gaps.mean_click_gap, 12.23, 0.2 * 12.23);
  EXPECT_NEAR(gaps.mean_purchase_gap, 32.08, 0.2 * 32.08);
  EXPECT_LT(gaps.purchases, gaps.clicks);
}

TEST(Gaps, EndToEndTimeline) {
  QuerySession a = uniform_session(3, 0.5), b = uniform_session(4, 0.5);
  a.items[1].click = 1;
  b.items[0].click = 1;
  b.items[3].click = 1;
  b.items[3].conversion = 1;
  const GapStats g = measure_gaps({a, b});
  // Click positions on the joined timeline: 1, 3, 6.
  EXPECT_DOUBLE_EQ(g.mean_click_gap, 2.5);
  EXPECT_TRUE(std::isnan(g.mean_purchase_gap));
}

TEST(Pbm, ObservationExamples) {
  BiasProfile p = BiasProfile::power_law(5, 1.0, 0.0);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(pbm_observe(i, p), 1.0);
  BiasProfile two{{1.0, 0.5}, 2.0};
  EXPECT_DOUBLE_EQ(pbm_observe(0, two), 1.0);
  EXPECT_DOUBLE_EQ(pbm_observe(1, two), 0.25);
  BiasProfile one = BiasProfile::power_law(4, 1.0, 1.0);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(pbm_observe(i, one), one.rho[i]);
  EXPECT_DOUBLE_EQ(one.rho[3], 0.25);
}

TEST(Pbm, InvalidProfilesRejected) {
  EXPECT_THROW((BiasProfile{{0.9, 0.5}, 1.0}.validate()), ConfigError);
  EXPECT_THROW((BiasProfile{{1.0, 0.5, 0.6}, 1.0}.validate()), ConfigError);
  EXPECT_THROW((BiasProfile{{1.0}, -1.0}.validate()), ConfigError);
}

TEST(Pbm, SampleClicksExtremes) {
  const BiasProfile p = BiasProfile::power_law(10, 1.0, 1.0);
  for (const Item& it : sample_clicks(uniform_session(10, 0.0), p, 1).items) EXPECT_EQ(it.click, 0);
  const BiasProfile flat = BiasProfile::power_law(10, 1.0, 0.0);
  for (const Item& it : sample_clicks(uniform_session(10, 1.0), flat, 1).items) EXPECT_EQ(it.click, 1);
}

TEST(Pbm, SampleClicksNeedsRelevance) {
  QuerySession s = uniform_session(3, 0.5);
  s.items[1].true_click_rel.reset();
  EXPECT_THROW(sample_clicks(s, BiasProfile::power_law(3), 1), DataError);
}

TEST(Pbm, EmpiricalClickRatePerPosition) {
  const BiasProfile p = BiasProfile::power_law(4, 1.0, 1.0);
  const double r = 0.6;
  const std::size_t n = 100000;
  std::vector<double> clicks(4, 0.0);
  QuerySession base = uniform_session(4, r);
  for (std::size_t q = 0; q < n; ++q) {
    base.query_id = static_cast<std::int64_t>(q);
    const QuerySession s = sample_clicks(base, p, 99);
    for (std::size_t i = 0; i < 4; ++i) clicks[i] += s.items[i].click;
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const double prob = pbm_observe(i, p) * r;
    const double sigma = std::sqrt(prob * (1 - prob) / static_cast<double>(n));
    EXPECT_NEAR(clicks[i] / static_cast<double>(n), prob, 3 * sigma) << "position " << i;
  }
  for (std::size_t i = 1; i < 4; ++i) EXPECT_LT(clicks[i], clicks[i - 1]);
}

TEST(Pbm, ConversionRule) {
  QuerySession s = uniform_session(2, 0.5);
  s.items[0].click = 1;
  s.items[0].conversion = 1;
  s.items[1].click = 0;
  s.items[1].conversion = 1;
  const QuerySession once = apply_conversion_rule(s);
  EXPECT_EQ(once.conversions(), (std::vector<int>{1, 0}));
  EXPECT_EQ(apply_conversion_rule(once).conversions(), once.conversions());
  QuerySession none = uniform_session(3, 0.5);
  for (Item& it : none.items) it.conversion = 1;
  for (const Item& it : apply_conversion_rule(none).items) EXPECT_EQ(it.conversion, 0);
}

TEST(InitialRank, PermutationIsBijection) {
  const Corpus c = gen_sessions(quick(4)).sessions;
  const RankedCorpus r = initial_rank(c, 0.1, 4);
  ASSERT_EQ(r.permutations.size(), c.size());
  for (std::size_t q = 0; q < c.size(); ++q) {
    const auto& perm = r.permutations[q];
    ASSERT_EQ(perm.size(), c[q].size());
    EXPECT_EQ(std::set<std::size_t>(perm.begin(), perm.end()).size(), perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) {
      EXPECT_EQ(r.sessions[q].items[k].features, c[q].items[perm[k]].features);
    }
  }
}

TEST(InitialRank, RealizableCaseRecoversRelevanceOrder) {
  // Click labels linear in the single feature: the fit orders by relevance.
  Corpus c;
  for (int q = 0; q < 20; ++q) {
    QuerySession s;
    s.query_id = q;
    for (int i = 0; i < 6; ++i) {
      Item it;
      const double x = std::sin(q * 7.0 + i * 3.0);
      it.features = {x, 1.0};
      it.click = x > 0 ? 1 : 0;
      it.true_click_rel = 0.5 + 0.5 * x;
      it.true_conv_rel = 0.0;
      s.items.push_back(it);
    }
    c.push_back(s);
  }
  const RankedCorpus r = initial_rank(c, 1.0, 1);
  EXPECT_FALSE(r.ranker.fallback);
  for (const QuerySession& s : r.sessions) {
    for (std::size_t k = 1; k < s.size(); ++k) {
      EXPECT_GE(*s.items[k - 1].true_click_rel, *s.items[k].true_click_rel);
    }
  }
}

TEST(InitialRank, DegenerateFitFallsBack) {
  Corpus c{uniform_session(5, 0.3)};  // no clicks at all
  c[0].items[2].features = {3.0};
  const RankedCorpus r = initial_rank(c, 1.0, 1);
  EXPECT_TRUE(r.ranker.fallback);
  EXPECT_EQ(r.permutations[0][0], 2u);
  EXPECT_THROW(initial_rank(c, 0.0, 1), ConfigError);
}

TEST(Pipeline, DeterministicAndEntireSpace) {
  const Corpus c = gen_sessions(quick(8)).sessions;
  const BiasProfile p = BiasProfile::power_law(30);
  auto run = [&] { return pbm_logs(initial_rank(c, 0.05, 8).sessions, p, 8); };
  const Corpus a = run();
  EXPECT_TRUE(same_corpus(a, run()));
  for (const QuerySession& s : a) {
    for (const Item& it : s.items) EXPECT_LE(it.conversion, it.click);
  }
}

TEST(CorpusIo, RoundTripWithOptionalFieldsOmitted) {
  Corpus c = gen_sessions(quick(2, 5)).sessions;
  c[1].items[0].true_click_rel.reset();
  c[1].items[0].true_conv_rel.reset();
  std::ostringstream out;
  write_corpus(out, c);
  EXPECT_EQ(out.str().find("null"), std::string::npos);
  std::istringstream in(out.str());
  const Corpus back = read_corpus(in);
  EXPECT_TRUE(same_corpus(c, back));
  EXPECT_FALSE(back[1].items[0].true_click_rel.has_value());
  EXPECT_EQ(back[0].items[0].features, c[0].items[0].features);
}

TEST(CorpusIo, RejectsBadRecords) {
  std::istringstream bad_flag(R"({"query_id":1,"items":[{"features":[1],"click":2,"conversion":0}]})");
  EXPECT_THROW(read_corpus(bad_flag), DataError);
  std::istringstream conv_no_click(R"({"query_id":1,"items":[{"features":[1],"click":0,"conversion":1}]})");
  EXPECT_THROW(read_corpus(conv_no_click), DataError);
  std::istringstream garbage("{not json");
  EXPECT_THROW(read_corpus(garbage), DataError);
}

}  // namespace
}  // namespace heroes::sim
