#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace heroes::metrics {

inline constexpr double kLogLossEpsilon = 1e-7;

// Neumaier-compensated running sum.
class Accumulator {
 public:
  void add(double x);
  double sum() const { return sum_ + comp_; }
  std::size_t count() const { return n_; }
  double mean() const { return n_ ? sum() / static_cast<double>(n_) : 0.0; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
  std::size_t n_ = 0;
};

// Pairwise ranking accuracy with ties counted 1/2; empty when a class is missing.
std::optional<double> auc(std::span<const double> scores, std::span<const int> labels);

// NDCG over the whole list (gain 2^rel - 1, discount 1/log2(rank + 1));
// empty when no item is relevant. Tied scores keep the list order.
std::optional<double> ndcg(std::span<const double> scores, std::span<const int> relevances);

// Mean binary log loss with probabilities clamped to [eps, 1 - eps].
double logloss(std::span<const double> probabilities, std::span<const int> labels);

// For original position p (0-based), the mean over queries of the new
// 1-based position of the item that was at p. orders[q][k] is the original
// index of the item now at position k. Returned curve is 1-based in value.
std::vector<double> avg_reranked_position(const std::vector<std::vector<std::size_t>>& orders);

struct TaskReport {
  std::optional<double> auc;
  std::optional<double> logloss;
  std::optional<double> ndcg;
};

struct EvalReport {
  TaskReport ctr;
  TaskReport cvr;
  std::size_t queries = 0;
  std::size_t items = 0;
};

// {"ctr": {"auc": ..., "logloss": ..., "ndcg": ...}, "cvr": {...}, ...}; undefined values are null.
std::string to_json(const EvalReport& report);
// Rows "metric,task,value"; undefined values are left empty.
void write_csv(std::ostream& out, const EvalReport& report, bool header = true);

}  // namespace heroes::metrics
