#include "heroes/harness/experiments.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "heroes/diff/gradient_check.h"
#include "heroes/errors.h"
#include "heroes/model/losses.h"
#include "heroes/sim/random.h"

namespace heroes::harness {

std::string to_string(SweepKind k) {
  switch (k) {
    case SweepKind::kAlphaRatio: return "alpha_ratio";
    case SweepKind::kTau: return "tau";
    case SweepKind::kDataFraction: return "data_fraction";
  }
  return "?";
}

SweepKind parse_sweep_kind(const std::string& s) {
  if (s == "alpha_ratio") return SweepKind::kAlphaRatio;
  if (s == "tau") return SweepKind::kTau;
  if (s == "data_fraction") return SweepKind::kDataFraction;
  throw ConfigError("unknown sweep kind '" + s + "' (alpha_ratio | tau | data_fraction)");
}

Splits biased_splits(const Splits& data, double eta, double tau, double label_fraction,
                     std::uint64_t seed) {
  std::size_t longest = 1;
  for (const Corpus* c : {&data.train, &data.valid, &data.test}) {
    for (const QuerySession& s : *c) longest = std::max(longest, s.size());
  }
  const sim::BiasProfile profile = sim::BiasProfile::power_law(longest, eta, tau);
  const sim::LinearRanker ranker = sim::fit_ranker(data.train, label_fraction, seed);
  auto logs = [&](const Corpus& c, std::uint64_t salt) {
    return sim::pbm_logs(sim::apply_ranker(ranker, c).sessions, profile, sim::splitmix64(seed ^ salt));
  };
  return Splits{logs(data.train, 0x7a), logs(data.valid, 0x7b), logs(data.test, 0x7c)};
}

Corpus subsample(const Corpus& corpus, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("data fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  std::vector<std::size_t> idx(corpus.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(sim::splitmix64(seed ^ 0xf4ac));
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(corpus.size())));
  Corpus out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(corpus[idx[k]]);
  return out;
}

std::vector<SweepRow> sweep(const SweepSpec& spec, const TrainConfig& base, const Splits& data) {
  if (spec.grid.empty()) throw ConfigError("sweep: empty grid");
  if (spec.seeds.empty() || spec.modes.empty()) throw ConfigError("sweep: no seeds or modes");
  std::vector<SweepRow> rows;
  for (double value : spec.grid) {
    for (std::uint64_t seed : spec.seeds) {
      Splits local;
      const Splits* use = &data;
      if (spec.kind == SweepKind::kTau) {
        local = biased_splits(data, spec.eta, value, spec.label_fraction, seed);
        use = &local;
      } else if (spec.kind == SweepKind::kDataFraction) {
        local = Splits{subsample(data.train, value, seed), data.valid, data.test};
        use = &local;
      }
      for (Mode mode : spec.modes) {
        TrainConfig c = base;
        c.seed = seed;
        c.mode = mode;
        if (spec.kind == SweepKind::kAlphaRatio) c.alpha = value;
        const TrainResult r = train(c, use->train, use->valid);
        rows.push_back({spec.kind, value, seed, mode, evaluate(r.model, use->test, spec.against)});
      }
    }
  }
  return rows;
}

namespace {

std::string num(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os.precision(17);
  os << *v;
  return os.str();
}

}  // namespace

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "kind,value,seed,mode,ctr_auc,ctr_logloss,ctr_ndcg,cvr_auc,cvr_logloss,cvr_ndcg\n";
  for (const SweepRow& r : rows) {
    out << to_string(r.kind) << ',' << num(r.value) << ',' << r.seed << ',' << to_string(r.mode);
    for (const metrics::TaskReport* t : {&r.report.ctr, &r.report.cvr}) {
      out << ',' << num(t->auc) << ',' << num(t->logloss) << ',' << num(t->ndcg);
    }
    out << '\n';
  }
}

void write_curves_csv(std::ostream& out, const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& curves) {
  if (names.size() != curves.size()) throw std::invalid_argument("write_curves_csv: name count");
  std::size_t n = 0;
  for (const auto& c : curves) n = std::max(n, c.size());
  out << "position";
  for (const auto& name : names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out << i + 1;
    for (const auto& c : curves) out << ',' << (i < c.size() ? num(c[i]) : "");
    out << '\n';
  }
}

Corpus random_sessions(std::size_t n, std::size_t length, std::size_t features,
                       std::uint64_t seed) {
  std::mt19937_64 rng(sim::splitmix64(seed ^ 0x6c));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution click(0.4), conv(0.5);
  Corpus out(n);
  for (std::size_t q = 0; q < n; ++q) {
    out[q].query_id = static_cast<std::int64_t>(q);
    for (std::size_t i = 0; i < length; ++i) {
      Item it;
      for (std::size_t f = 0; f < features; ++f) it.features.push_back(normal(rng));
      it.click = click(rng) ? 1 : 0;
      it.conversion = it.click && conv(rng) ? 1 : 0;
      out[q].items.push_back(std::move(it));
    }
  }
  return out;
}

std::vector<GradcheckRow> gradcheck(const TrainConfig& config, const GradcheckSpec& spec,
                                    const std::vector<Mode>& modes) {
  const Corpus sessions = random_sessions(spec.sessions, spec.length, config.features, spec.seed);
  std::vector<GradcheckRow> rows;
  for (Mode mode : modes) {
    TrainConfig c = config;
    c.architecture = Architecture::kHeroes;
    c.mode = mode;
    c.gate_source = GateSource::kLabels;
    RankingModel model = RankingModel::initialize(c);
    LossOptions loss = c.loss_options();
    loss.detach_click_in_cvr = false;
    const ForwardOptions fwd{mode, GateSource::kLabels, c.dt, false};

    GradcheckRow row;
    row.mode = mode;
    bool first = true;
    for (const QuerySession& s : sessions) {
      auto objective = [&](Tape& tape) {
        const SessionForward f = forward_session(tape, s, model.heroes(), fwd);
        return total_loss(tape, f, s, loss);
      };
      const auto params = model.parameters();
      const diff::GradCheckResult r = diff::gradient_check(objective, params, spec.eps);
      if (first || r.max_relative_error > row.max_relative_error) {
        row.max_relative_error = r.max_relative_error;
        row.worst = r.worst_parameter + "[" + std::to_string(r.worst_index) + "]";
        row.analytic = r.worst_analytic;
        row.numeric = r.worst_numeric;
        first = false;
      }
    }
    row.pass = row.max_relative_error < spec.tolerance;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace heroes::harness
