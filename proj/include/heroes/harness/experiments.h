#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "heroes/harness/evaluate.h"
#include "heroes/harness/train.h"
#include "heroes/sim/pbm.h"

namespace heroes::harness {

enum class SweepKind { kAlphaRatio, kTau, kDataFraction };

std::string to_string(SweepKind k);
SweepKind parse_sweep_kind(const std::string& s);

struct SweepSpec {
  SweepKind kind = SweepKind::kAlphaRatio;
  std::vector<double> grid;
  std::vector<std::uint64_t> seeds{0};
  std::vector<Mode> modes{Mode::kBiased};
  // PBM settings for the tau sweep (and for biased_splits).
  double eta = 1.0;
  double label_fraction = 0.01;
  Against against = Against::kTrueRelevance;
};

struct SweepRow {
  SweepKind kind = SweepKind::kAlphaRatio;
  double value = 0.0;
  std::uint64_t seed = 0;
  Mode mode = Mode::kBiased;
  metrics::EvalReport report;
};

// PBM logs for every split from one initial ranker fitted on train.
// Lists are re-ordered by that ranker; planted relevance is kept.
Splits biased_splits(const Splits& data, double eta, double tau, double label_fraction,
                     std::uint64_t seed);

// The first ceil(fraction * n) lists of a seeded shuffle (nested across fractions).
Corpus subsample(const Corpus& corpus, double fraction, std::uint64_t seed);

// One train + evaluate per (grid value, seed, mode). The grid value sets
// alpha (CVR:CTR loss-weight ratio), the PBM tau, or the training fraction.
std::vector<SweepRow> sweep(const SweepSpec& spec, const TrainConfig& base, const Splits& data);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// Columns "position,<name>..." with 1-based positions.
void write_curves_csv(std::ostream& out, const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& curves);

struct GradcheckRow {
  Mode mode = Mode::kBiased;
  double max_relative_error = 0.0;
  std::string worst;  // parameter[index] of the worst entry
  double analytic = 0.0;
  double numeric = 0.0;
  bool pass = false;
};

struct GradcheckSpec {
  std::size_t sessions = 10;
  std::size_t length = 4;
  double eps = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
};

// Random sessions with clicks at rate 0.4 and conversions on half the clicks.
Corpus random_sessions(std::size_t n, std::size_t length, std::size_t features, std::uint64_t seed);

// Full-model finite-difference check of the per-session total loss in each mode.
// The inter ablation's stop-gradient is left out so the check sees the whole graph.
std::vector<GradcheckRow> gradcheck(const TrainConfig& config, const GradcheckSpec& spec,
                                    const std::vector<Mode>& modes);

}  // namespace heroes::harness
