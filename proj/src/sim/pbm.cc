#include "heroes/sim/pbm.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <string>

#include "heroes/errors.h"
#include "heroes/sim/random.h"

namespace heroes::sim {

BiasProfile BiasProfile::power_law(std::size_t positions, double eta, double tau) {
  if (positions < 1) throw ConfigError("bias profile needs at least one position");
  if (!(eta >= 0.0)) throw ConfigError("bias exponent eta must be >= 0");
  BiasProfile p;
  p.tau = tau;
  for (std::size_t i = 1; i <= positions; ++i) p.rho.push_back(std::pow(1.0 / static_cast<double>(i), eta));
  p.validate();
  return p;
}

void BiasProfile::validate() const {
  if (rho.empty() || rho[0] != 1.0) throw ConfigError("bias profile: rho[0] must be 1");
  for (std::size_t i = 1; i < rho.size(); ++i) {
    if (!(rho[i] > 0.0 && rho[i] <= rho[i - 1])) {
      throw ConfigError("bias profile: rho must be positive and nonincreasing (position " +
                        std::to_string(i) + ")");
    }
  }
  if (!(std::isfinite(tau) && tau >= 0.0)) throw ConfigError("bias profile: tau must be >= 0");
}

double pbm_observe(std::size_t position, const BiasProfile& profile) {
  const double r = profile.rho[std::min(position, profile.rho.size() - 1)];
  return std::pow(r, profile.tau);
}

QuerySession sample_clicks(const QuerySession& session, const BiasProfile& profile,
                           std::uint64_t seed) {
  if (!session.has_true_relevance()) {
    throw DataError("sample_clicks: query " + std::to_string(session.query_id) +
                    " has no planted relevance");
  }
  std::mt19937_64 rng = query_stream(seed, session.query_id, 0xc11c);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  QuerySession out = session;
  for (std::size_t i = 0; i < out.items.size(); ++i) {
    const double p = pbm_observe(i, profile) * *out.items[i].true_click_rel;
    out.items[i].click = unit(rng) < p ? 1 : 0;
  }
  return out;
}

QuerySession apply_conversion_rule(const QuerySession& session) {
  QuerySession out = session;
  for (Item& it : out.items) {
    if (!it.click) it.conversion = 0;
  }
  return out;
}

namespace {

std::vector<std::size_t> order_by(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

QuerySession permute(const QuerySession& s, const std::vector<std::size_t>& perm) {
  QuerySession out;
  out.query_id = s.query_id;
  out.items.reserve(perm.size());
  for (std::size_t k : perm) out.items.push_back(s.items[k]);
  return out;
}

}  // namespace

double LinearRanker::score(const std::vector<double>& features) const {
  double v = 0.0;
  if (fallback) {
    for (double x : features) v += x * x;
    return v;
  }
  if (features.size() != weights.size()) {
    throw ShapeError("ranker: " + std::to_string(features.size()) + " features, fitted on " +
                     std::to_string(weights.size()));
  }
  for (std::size_t j = 0; j < weights.size(); ++j) v += weights[j] * features[j];
  return v;
}

LinearRanker fit_ranker(const Corpus& sessions, double label_fraction, std::uint64_t seed,
                        double ridge) {
  if (!(label_fraction > 0.0 && label_fraction <= 1.0)) {
    throw ConfigError("initial ranker: label_fraction must lie in (0, 1]");
  }
  if (sessions.empty() || sessions.front().items.empty()) {
    throw DataError("initial ranker: no data to fit");
  }
  const std::size_t f = sessions.front().items.front().features.size();
  const auto dim = static_cast<Eigen::Index>(f + 1);

  std::vector<std::size_t> ids(sessions.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::mt19937_64 rng(splitmix64(seed ^ 0x5eed));
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto n_fit = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(label_fraction * static_cast<double>(ids.size()))));

  // Normal equations with an intercept column.
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd row(dim);
  for (std::size_t k = 0; k < n_fit; ++k) {
    for (const Item& it : sessions[ids[k]].items) {
      if (it.features.size() != f) throw ShapeError("initial ranker: inconsistent feature sizes");
      for (std::size_t j = 0; j < f; ++j) row(static_cast<Eigen::Index>(j)) = it.features[j];
      row(dim - 1) = 1.0;
      xtx.noalias() += row * row.transpose();
      xty += row * static_cast<double>(it.click);
    }
  }
  for (Eigen::Index j = 0; j + 1 < dim; ++j) xtx(j, j) += ridge;
  const Eigen::VectorXd w = xtx.ldlt().solve(xty);
  const auto slope = w.head(dim - 1);

  LinearRanker r;
  r.fallback = !slope.allFinite() || slope.cwiseAbs().maxCoeff() < 1e-12;
  if (r.fallback) {
    std::cerr << "warning: initial ranker fit is degenerate; ordering by feature norm\n";
  } else {
    r.weights.assign(slope.data(), slope.data() + slope.size());
  }
  return r;
}

RankedCorpus apply_ranker(const LinearRanker& ranker, const Corpus& sessions) {
  RankedCorpus out;
  out.ranker = ranker;
  out.sessions.reserve(sessions.size());
  out.permutations.reserve(sessions.size());
  for (const QuerySession& s : sessions) {
    std::vector<double> scores;
    scores.reserve(s.items.size());
    for (const Item& it : s.items) scores.push_back(ranker.score(it.features));
    auto perm = order_by(scores);
    out.sessions.push_back(permute(s, perm));
    out.permutations.push_back(std::move(perm));
  }
  return out;
}

RankedCorpus initial_rank(const Corpus& sessions, double label_fraction, std::uint64_t seed,
                          double ridge) {
  return apply_ranker(fit_ranker(sessions, label_fraction, seed, ridge), sessions);
}

Corpus pbm_logs(const Corpus& ranked, const BiasProfile& profile, std::uint64_t seed) {
  profile.validate();
  Corpus out;
  out.reserve(ranked.size());
  for (const QuerySession& s : ranked) out.push_back(apply_conversion_rule(sample_clicks(s, profile, seed)));
  return out;
}

}  // namespace heroes::sim
