#pragma once

#include <cstdint>
#include <vector>

#include "heroes/data/session.h"

namespace heroes::sim {

struct BiasProfile {
  std::vector<double> rho;  // per 0-based position; rho[0] = 1, nonincreasing
  double tau = 1.0;

  // rho_i = (1/i)^eta for 1-based i.
  static BiasProfile power_law(std::size_t positions, double eta = 1.0, double tau = 1.0);
  void validate() const;
};

// rho_i^tau; positions past the profile reuse the last entry.
double pbm_observe(std::size_t position, const BiasProfile& profile);

// click_i ~ Bernoulli(rho_i^tau * r_i) with r_i the planted click relevance.
QuerySession sample_clicks(const QuerySession& session, const BiasProfile& profile,
                           std::uint64_t seed);

// v_i = 0 wherever c_i = 0.
QuerySession apply_conversion_rule(const QuerySession& session);

struct LinearRanker {
  std::vector<double> weights;  // empty on fallback
  bool fallback = false;

  double score(const std::vector<double>& features) const;
};

// Ridge least squares of click labels on features over a seeded
// label_fraction of the lists. A degenerate fit falls back to feature-norm
// scoring with a warning.
LinearRanker fit_ranker(const Corpus& sessions, double label_fraction, std::uint64_t seed,
                        double ridge = 1e-3);

struct RankedCorpus {
  Corpus sessions;
  // permutations[q][k] = original index of the item shown at position k.
  std::vector<std::vector<std::size_t>> permutations;
  LinearRanker ranker;
};

// Re-sorts every list by descending ranker score (stable).
RankedCorpus apply_ranker(const LinearRanker& ranker, const Corpus& sessions);

// fit_ranker then apply_ranker on the same lists.
RankedCorpus initial_rank(const Corpus& sessions, double label_fraction, std::uint64_t seed,
                          double ridge = 1e-3);

// PBM clicks and the conversion rule applied to already ranked lists.
Corpus pbm_logs(const Corpus& ranked, const BiasProfile& profile, std::uint64_t seed);

}  // namespace heroes::sim
