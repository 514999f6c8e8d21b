#include "heroes/sim/generator.h"

#include <cmath>
#include <limits>
#include <string>

#include "heroes/errors.h"
#include "heroes/sim/random.h"

namespace heroes::sim {

void GeneratorConfig::validate() const {
  if (n_queries < 1) throw ConfigError("generator: n_queries must be >= 1");
  if (min_length < 1 || min_length > max_length) {
    throw ConfigError("generator: need 1 <= min_length <= max_length, got " +
                      std::to_string(min_length) + ".." + std::to_string(max_length));
  }
  if (features < 1 || distractors >= features) {
    throw ConfigError("generator: need features >= 1 and distractors < features");
  }
  for (double v : {feature_noise, query_shift, excitation, discouragement}) {
    if (!(std::isfinite(v) && v >= 0.0)) {
      throw ConfigError("generator: noise, shift and context strengths must be finite and >= 0");
    }
  }
  if (!(excitation_decay > 0.0 && discouragement_decay > 0.0)) {
    throw ConfigError("generator: decay scales must be positive");
  }
  if (!std::isfinite(click_slope) || !std::isfinite(conv_slope)) {
    throw ConfigError("generator: slopes must be finite");
  }
  if (calibrate) {
    if (!(click_gap_target > 1.0 && purchase_gap_target > click_gap_target)) {
      throw ConfigError("generator: need 1 < click_gap_target < purchase_gap_target");
    }
    if (calibration_queries < 10) throw ConfigError("generator: calibration_queries must be >= 10");
  }
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Everything about a list that does not depend on the offsets.
struct Skeleton {
  std::int64_t query_id = 0;
  std::vector<double> z_c, z_v;
  std::vector<std::vector<double>> features;
  std::vector<double> u_click, u_conv;  // common random numbers
};

std::vector<double> projection(const GeneratorConfig& c) {
  std::mt19937_64 rng = query_stream(c.seed, -1, 0xfea7);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t signal = c.features - c.distractors;
  std::vector<double> a(c.features * 2, 0.0);
  for (std::size_t f = 0; f < signal; ++f) {
    // Alternate dominant latent so both relevances are recoverable.
    const double own = 1.0 + 0.25 * std::abs(normal(rng));
    const double mix = 0.3 * normal(rng);
    a[f * 2 + (f % 2)] = own;
    a[f * 2 + 1 - (f % 2)] = mix;
  }
  return a;
}

Skeleton make_skeleton(const GeneratorConfig& c, const std::vector<double>& a, std::int64_t qid) {
  std::mt19937_64 rng = query_stream(c.seed, qid);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> len(c.min_length, c.max_length);
  Skeleton s;
  s.query_id = qid;
  const std::size_t n = len(rng);
  std::vector<double> shift(c.features);
  for (double& v : shift) v = c.query_shift * normal(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const double zc = normal(rng), zv = normal(rng);
    std::vector<double> x(c.features);
    for (std::size_t f = 0; f < c.features; ++f) {
      x[f] = a[f * 2] * zc + a[f * 2 + 1] * zv + shift[f] + c.feature_noise * normal(rng);
    }
    s.z_c.push_back(zc);
    s.z_v.push_back(zv);
    s.features.push_back(std::move(x));
    s.u_click.push_back(unit(rng));
    s.u_conv.push_back(unit(rng));
  }
  return s;
}

// Walks the behavioral process of one list; emit(i, rc, rv, click, conversion).
template <typename Emit>
void run_process(const GeneratorConfig& c, const Skeleton& sk, double click_offset,
                 double conv_offset, Emit&& emit) {
  double excite = 0.0, discourage = 0.0;
  const double ex_keep = std::exp(-1.0 / c.excitation_decay);
  const double dis_keep = std::exp(-1.0 / c.discouragement_decay);
  for (std::size_t i = 0; i < sk.z_c.size(); ++i) {
    const double inherent = c.click_slope * sk.z_c[i] + click_offset;
    const double rc = sigmoid(inherent);
    const double rv = sigmoid(c.conv_slope * sk.z_v[i] + conv_offset);
    const double p_click = sigmoid(inherent + c.excitation * excite - c.discouragement * discourage);
    const int click = sk.u_click[i] < p_click ? 1 : 0;
    const int conv = click && sk.u_conv[i] < rv ? 1 : 0;
    emit(i, rc, rv, click, conv);
    excite = excite * ex_keep + click;
    discourage = discourage * dis_keep + conv;
  }
}

QuerySession realize(const GeneratorConfig& c, const Skeleton& sk, double click_offset,
                     double conv_offset) {
  QuerySession q;
  q.query_id = sk.query_id;
  q.items.resize(sk.z_c.size());
  run_process(c, sk, click_offset, conv_offset,
              [&](std::size_t i, double rc, double rv, int click, int conv) {
                Item& it = q.items[i];
                it.features = sk.features[i];
                it.true_click_rel = rc;
                it.true_conv_rel = rc * rv;
                it.click = click;
                it.conversion = conv;
              });
  return q;
}

// measure_gaps over the pilot without materializing sessions.
GapStats pilot_gaps(const GeneratorConfig& c, const std::vector<Skeleton>& sks, double co,
                    double vo) {
  Corpus labels_only;
  labels_only.reserve(sks.size());
  for (const Skeleton& sk : sks) {
    QuerySession q;
    q.items.resize(sk.z_c.size());
    run_process(c, sk, co, vo, [&](std::size_t i, double, double, int click, int conv) {
      q.items[i].click = click;
      q.items[i].conversion = conv;
    });
    labels_only.push_back(std::move(q));
  }
  return measure_gaps(labels_only);
}

// Offset in [lo, hi] where f crosses target; f is nonincreasing in the offset.
template <typename F>
double bisect(F gap_at, double target, double lo, double hi) {
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g = gap_at(mid);
    // Higher offset means more events and a smaller gap.
    if (!std::isfinite(g) || g > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

GapStats measure_gaps(const Corpus& corpus) {
  GapStats st;
  std::size_t t = 0;
  std::optional<std::size_t> last_click, last_purchase;
  double click_sum = 0.0, purchase_sum = 0.0;
  std::size_t click_gaps = 0, purchase_gaps = 0;
  for (const QuerySession& q : corpus) {
    for (const Item& it : q.items) {
      if (it.click) {
        ++st.clicks;
        if (last_click) {
          click_sum += static_cast<double>(t - *last_click);
          ++click_gaps;
        }
        last_click = t;
      }
      if (it.conversion) {
        ++st.purchases;
        if (last_purchase) {
          purchase_sum += static_cast<double>(t - *last_purchase);
          ++purchase_gaps;
        }
        last_purchase = t;
      }
      ++t;
    }
  }
  st.items = t;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  st.mean_click_gap = click_gaps ? click_sum / static_cast<double>(click_gaps) : nan;
  st.mean_purchase_gap = purchase_gaps ? purchase_sum / static_cast<double>(purchase_gaps) : nan;
  return st;
}

Calibration calibrate(const GeneratorConfig& config) {
  config.validate();
  const auto a = projection(config);
  // Pilot lists use their own id range so they never coincide with the corpus.
  std::vector<Skeleton> pilot;
  pilot.reserve(config.calibration_queries);
  for (std::size_t i = 0; i < config.calibration_queries; ++i) {
    pilot.push_back(make_skeleton(config, a, -2 - static_cast<std::int64_t>(i)));
  }
  Calibration cal{config.click_offset, config.conv_offset, 0.0, 0.0};
  // Conversions feed back into clicks through discouragement, so alternate.
  for (int round = 0; round < 4; ++round) {
    cal.click_offset = bisect(
        [&](double co) {
          return pilot_gaps(config, pilot, co, cal.conv_offset).mean_click_gap;
        },
        config.click_gap_target, -15.0, 8.0);
    cal.conv_offset = bisect(
        [&](double vo) {
          return pilot_gaps(config, pilot, cal.click_offset, vo).mean_purchase_gap;
        },
        config.purchase_gap_target, -15.0, 15.0);
  }
  const GapStats st = pilot_gaps(config, pilot, cal.click_offset, cal.conv_offset);
  cal.click_gap = st.mean_click_gap;
  cal.purchase_gap = st.mean_purchase_gap;
  return cal;
}

GeneratedCorpus gen_sessions(const GeneratorConfig& config) {
  config.validate();
  GeneratedCorpus out;
  if (config.calibrate) {
    out.calibration = calibrate(config);
  } else {
    out.calibration.click_offset = config.click_offset;
    out.calibration.conv_offset = config.conv_offset;
  }
  const auto a = projection(config);
  out.sessions.reserve(config.n_queries);
  for (std::size_t i = 0; i < config.n_queries; ++i) {
    out.sessions.push_back(realize(config, make_skeleton(config, a, static_cast<std::int64_t>(i)),
                                   out.calibration.click_offset, out.calibration.conv_offset));
  }
  const GapStats st = measure_gaps(out.sessions);
  if (!config.calibrate) {
    out.calibration.click_gap = st.mean_click_gap;
    out.calibration.purchase_gap = st.mean_purchase_gap;
  }
  return out;
}

}  // namespace heroes::sim
