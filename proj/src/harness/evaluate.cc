#include "heroes/harness/evaluate.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "heroes/errors.h"
#include "heroes/sim/random.h"

namespace heroes::harness {

std::string to_string(Against a) { return a == Against::kLabels ? "labels" : "true_relevance"; }

Against parse_against(const std::string& s) {
  if (s == "labels") return Against::kLabels;
  if (s == "true_relevance") return Against::kTrueRelevance;
  throw ConfigError("unknown evaluation target '" + s + "' (labels | true_relevance)");
}

std::vector<Predictions> predict_corpus(const RankingModel& model, const Corpus& corpus) {
  Tape tape;
  std::vector<Predictions> out;
  out.reserve(corpus.size());
  for (const QuerySession& s : corpus) out.push_back(model.predict(tape, s));
  return out;
}

namespace {

double relevance_of(const Item& it, Objective task) {
  return task == Objective::kCtr ? *it.true_click_rel : *it.true_conv_rel;
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  const double hi = v[n / 2];
  if (n % 2) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + n / 2));
}

}  // namespace

std::vector<std::vector<int>> targets(const Corpus& corpus, Objective task, Against against) {
  std::vector<std::vector<int>> out;
  out.reserve(corpus.size());
  if (against == Against::kLabels) {
    for (const QuerySession& s : corpus) {
      out.push_back(task == Objective::kCtr ? s.clicks() : s.conversions());
    }
    return out;
  }
  std::vector<double> all;
  for (const QuerySession& s : corpus) {
    if (!s.has_true_relevance()) {
      throw DataError("evaluation against true relevance: query " + std::to_string(s.query_id) +
                      " has no planted relevance");
    }
    for (const Item& it : s.items) all.push_back(relevance_of(it, task));
  }
  if (all.empty()) return out;
  const double threshold = median(all);
  for (const QuerySession& s : corpus) {
    std::vector<int> t;
    t.reserve(s.size());
    for (const Item& it : s.items) t.push_back(relevance_of(it, task) > threshold ? 1 : 0);
    out.push_back(std::move(t));
  }
  return out;
}

metrics::EvalReport report(const std::vector<Predictions>& predictions, const Corpus& corpus,
                           Against against) {
  if (predictions.size() != corpus.size()) {
    throw ShapeError("report: " + std::to_string(predictions.size()) + " predictions for " +
                     std::to_string(corpus.size()) + " sessions");
  }
  metrics::EvalReport r;
  r.queries = corpus.size();
  for (const QuerySession& s : corpus) r.items += s.size();

  for (Objective task : {Objective::kCtr, Objective::kCvr}) {
    const auto rel = targets(corpus, task, against);
    std::vector<double> scores, probs;
    std::vector<int> flat, labels;
    metrics::Accumulator ndcg;
    for (std::size_t q = 0; q < corpus.size(); ++q) {
      const Predictions& p = predictions[q];
      const auto& sc = task == Objective::kCtr ? p.click_score : p.conversion_score;
      const auto& pr = task == Objective::kCtr ? p.click : p.conversion;
      if (sc.size() != corpus[q].size() || pr.size() != corpus[q].size()) {
        throw ShapeError("report: prediction length mismatch for query " +
                         std::to_string(corpus[q].query_id));
      }
      scores.insert(scores.end(), sc.begin(), sc.end());
      probs.insert(probs.end(), pr.begin(), pr.end());
      flat.insert(flat.end(), rel[q].begin(), rel[q].end());
      const auto lab = task == Objective::kCtr ? corpus[q].clicks() : corpus[q].conversions();
      labels.insert(labels.end(), lab.begin(), lab.end());
      if (auto n = metrics::ndcg(sc, rel[q])) ndcg.add(*n);
    }
    metrics::TaskReport& t = task == Objective::kCtr ? r.ctr : r.cvr;
    t.auc = metrics::auc(scores, flat);
    if (!probs.empty()) t.logloss = metrics::logloss(probs, labels);
    if (ndcg.count()) t.ndcg = ndcg.mean();
  }
  return r;
}

metrics::EvalReport evaluate(const RankingModel& model, const Corpus& corpus, Against against) {
  if (against == Against::kTrueRelevance) {
    for (const QuerySession& s : corpus) {
      if (!s.has_true_relevance()) {
        throw DataError("evaluation against true relevance: query " + std::to_string(s.query_id) +
                        " has no planted relevance");
      }
    }
  }
  return report(predict_corpus(model, corpus), corpus, against);
}

std::vector<double> reranked_curve(const std::vector<Predictions>& predictions, Objective task) {
  std::vector<std::vector<std::size_t>> orders;
  orders.reserve(predictions.size());
  for (const Predictions& p : predictions) orders.push_back(rank(p, task));
  return metrics::avg_reranked_position(orders);
}

std::vector<double> relevance_curve(const Corpus& corpus, Objective task) {
  std::vector<std::vector<std::size_t>> orders;
  orders.reserve(corpus.size());
  for (const QuerySession& s : corpus) {
    if (!s.has_true_relevance()) {
      throw DataError("relevance curve: query " + std::to_string(s.query_id) +
                      " has no planted relevance");
    }
    std::vector<double> r;
    for (const Item& it : s.items) r.push_back(relevance_of(it, task));
    orders.push_back(rank_scores(r));
  }
  return metrics::avg_reranked_position(orders);
}

double curve_deviation(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n == 0) throw std::invalid_argument("curve_deviation: empty curve");
  metrics::Accumulator acc;
  for (std::size_t i = 0; i < n; ++i) acc.add(std::abs(a[i] - b[i]));
  return acc.mean();
}

Splits split_corpus(const Corpus& corpus, std::size_t n_train, std::size_t n_valid,
                    std::size_t n_test, std::uint64_t seed) {
  if (n_train + n_valid + n_test > corpus.size()) {
    throw ConfigError("split sizes " + std::to_string(n_train) + "+" + std::to_string(n_valid) +
                      "+" + std::to_string(n_test) + " exceed corpus of " +
                      std::to_string(corpus.size()));
  }
  std::vector<std::size_t> idx(corpus.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(sim::splitmix64(seed ^ 0x5b17));
  std::shuffle(idx.begin(), idx.end(), rng);
  Splits s;
  std::size_t k = 0;
  for (auto [dst, n] : {std::pair{&s.train, n_train}, {&s.valid, n_valid}, {&s.test, n_test}}) {
    dst->reserve(n);
    for (std::size_t i = 0; i < n; ++i) dst->push_back(corpus[idx[k++]]);
  }
  return s;
}

Splits split_corpus(const Corpus& corpus, std::uint64_t seed) {
  const std::size_t n = corpus.size();
  const std::size_t n_train = n * 6 / 10;
  const std::size_t n_valid = n * 2 / 10;
  return split_corpus(corpus, n_train, n_valid, n - n_train - n_valid, seed);
}

}  // namespace heroes::harness
