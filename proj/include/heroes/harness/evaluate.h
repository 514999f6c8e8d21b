#pragma once

#include <cstdint>
#include <vector>

#include "heroes/data/session.h"
#include "heroes/harness/model.h"
#include "heroes/metrics/metrics.h"

namespace heroes::harness {

// kLabels scores against the logged clicks/conversions.
// kTrueRelevance binarizes planted relevance at its corpus median
// (relevance > median counts as relevant); log loss stays against labels.
enum class Against { kLabels, kTrueRelevance };

std::string to_string(Against a);
Against parse_against(const std::string& s);

std::vector<Predictions> predict_corpus(const RankingModel& model, const Corpus& corpus);

// Ranking metrics from the inherent-track scores, log loss from the
// behavioral probabilities.
metrics::EvalReport report(const std::vector<Predictions>& predictions, const Corpus& corpus,
                           Against against);
metrics::EvalReport evaluate(const RankingModel& model, const Corpus& corpus, Against against);

// Per-session binary targets for one task.
std::vector<std::vector<int>> targets(const Corpus& corpus, Objective task, Against against);

// Re-ranking curve: mean new 1-based position of the item originally at each position.
std::vector<double> reranked_curve(const std::vector<Predictions>& predictions, Objective task);
// Same curve for the oracle ordering by planted relevance.
std::vector<double> relevance_curve(const Corpus& corpus, Objective task);
// Mean absolute deviation over the common prefix of two curves.
double curve_deviation(const std::vector<double>& a, const std::vector<double>& b);

struct Splits {
  Corpus train, valid, test;
};

// Seeded shuffle by query, then 6:2:2.
Splits split_corpus(const Corpus& corpus, std::uint64_t seed);
// Seeded shuffle, then explicit sizes (their sum must not exceed the corpus).
Splits split_corpus(const Corpus& corpus, std::size_t n_train, std::size_t n_valid,
                    std::size_t n_test, std::uint64_t seed);

}  // namespace heroes::harness
