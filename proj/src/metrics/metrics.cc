#include "heroes/metrics/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "heroes/errors.h"
#include "json.hpp"

namespace heroes::metrics {

void Accumulator::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
  ++n_;
}

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": " + std::to_string(a) + " scores vs " +
                     std::to_string(b) + " labels");
  }
}

}  // namespace

std::optional<double> auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size(), "auc");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Mann-Whitney U with midranks for ties.
  double pos_rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]]) {
        pos_rank_sum += midrank;
        ++pos;
      }
    }
    i = j;
  }
  const std::size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) return std::nullopt;
  const double np = static_cast<double>(pos), nn = static_cast<double>(neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::optional<double> ndcg(std::span<const double> scores, std::span<const int> relevances) {
  check_lengths(scores.size(), relevances.size(), "ndcg");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  auto gain = [](int rel) { return std::exp2(static_cast<double>(rel)) - 1.0; };
  double dcg = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    dcg += gain(relevances[idx[k]]) / std::log2(static_cast<double>(k) + 2.0);
  }
  std::vector<int> ideal(relevances.begin(), relevances.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t k = 0; k < ideal.size(); ++k) {
    idcg += gain(ideal[k]) / std::log2(static_cast<double>(k) + 2.0);
  }
  if (idcg <= 0.0) return std::nullopt;
  return dcg / idcg;
}

double logloss(std::span<const double> probabilities, std::span<const int> labels) {
  check_lengths(probabilities.size(), labels.size(), "logloss");
  if (probabilities.empty()) throw std::invalid_argument("logloss: empty input");
  Accumulator acc;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = std::clamp(probabilities[i], kLogLossEpsilon, 1.0 - kLogLossEpsilon);
    acc.add(labels[i] ? -std::log(p) : -std::log1p(-p));
  }
  return acc.mean();
}

std::vector<double> avg_reranked_position(const std::vector<std::vector<std::size_t>>& orders) {
  std::vector<Accumulator> acc;
  for (std::size_t q = 0; q < orders.size(); ++q) {
    const auto& order = orders[q];
    std::vector<char> seen(order.size(), 0);
    for (std::size_t k = 0; k < order.size(); ++k) {
      const std::size_t orig = order[k];
      if (orig >= order.size() || seen[orig]) {
        throw std::invalid_argument("avg_reranked_position: query " + std::to_string(q) +
                                    " order is not a permutation");
      }
      seen[orig] = 1;
      if (acc.size() <= orig) acc.resize(orig + 1);
      acc[orig].add(static_cast<double>(k + 1));
    }
  }
  std::vector<double> curve;
  curve.reserve(acc.size());
  for (const Accumulator& a : acc) curve.push_back(a.mean());
  return curve;
}

namespace {

nlohmann::json task_json(const TaskReport& t) {
  auto v = [](const std::optional<double>& x) { return x ? nlohmann::json(*x) : nlohmann::json(); };
  return {{"auc", v(t.auc)}, {"logloss", v(t.logloss)}, {"ndcg", v(t.ndcg)}};
}

}  // namespace

std::string to_json(const EvalReport& report) {
  nlohmann::json j{{"ctr", task_json(report.ctr)},
                   {"cvr", task_json(report.cvr)},
                   {"queries", report.queries},
                   {"items", report.items}};
  return j.dump();
}

void write_csv(std::ostream& out, const EvalReport& report, bool header) {
  if (header) out << "metric,task,value\n";
  auto row = [&](const char* metric, const char* task, const std::optional<double>& v) {
    out << metric << ',' << task << ',';
    if (v) {
      const auto old = out.precision(17);
      out << *v;
      out.precision(old);
    }
    out << '\n';
  };
  for (const auto& [name, t] : {std::pair{"ctr", &report.ctr}, std::pair{"cvr", &report.cvr}}) {
    row("auc", name, t->auc);
    row("logloss", name, t->logloss);
    row("ndcg", name, t->ndcg);
  }
}

}  // namespace heroes::metrics
