#include "heroes/harness/train.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "heroes/harness/evaluate.h"
#include "heroes/harness/optimizer.h"
#include "heroes/sim/random.h"

namespace heroes::harness {

namespace {

nlohmann::json tensor_json(const Tensor& t) {
  return {{"shape", t.shape()}, {"data", std::vector<double>(t.values().begin(), t.values().end())}};
}

Tensor tensor_from(const nlohmann::json& j) {
  return Tensor(j.at("shape").get<std::vector<std::size_t>>(),
                j.at("data").get<std::vector<double>>());
}

std::vector<Tensor> snapshot(const RankingModel& m) {
  std::vector<Tensor> out;
  for (const Parameter* p : m.parameters()) out.push_back(p->value);
  return out;
}

void restore(RankingModel& m, const std::vector<std::string>& names, const std::vector<Tensor>& values) {
  auto params = m.parameters();
  if (params.size() != values.size()) {
    throw DataError("checkpoint holds " + std::to_string(values.size()) + " parameters, model has " +
                    std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!names.empty() && names[k] != params[k]->name) {
      throw DataError("checkpoint parameter '" + names[k] + "' where model expects '" +
                      params[k]->name + "'");
    }
    if (!values[k].same_shape(params[k]->value)) {
      throw DataError("checkpoint parameter '" + params[k]->name + "' has shape " +
                      diff::shape_string(values[k].shape()) + ", model expects " +
                      diff::shape_string(params[k]->value.shape()));
    }
    params[k]->value = values[k];
  }
}

std::string rng_text(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

std::mt19937_64 rng_from(const std::string& s) {
  std::istringstream is(s);
  std::mt19937_64 rng;
  is >> rng;
  if (!is) throw DataError("checkpoint: unreadable RNG state");
  return rng;
}

// Comparable part of a config for resuming (the epoch budget may grow).
std::string resume_key(TrainConfig c) {
  c.epochs = 0;
  return config_hash(c);
}

}  // namespace

nlohmann::json to_json(const Checkpoint& c) {
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t k = 0; k < c.params.size(); ++k) {
    nlohmann::json p = tensor_json(c.params[k]);
    p["name"] = c.param_names.at(k);
    params.push_back(std::move(p));
  }
  nlohmann::json best = nlohmann::json::array();
  for (const Tensor& t : c.early_stop.best_params) best.push_back(tensor_json(t));
  const double bs = c.early_stop.best_score;
  return {{"config", to_json(c.config)},
          {"config_hash", c.config_hash},
          {"epoch", c.epoch},
          {"stopped_early", c.stopped_early},
          {"rng_state", c.rng_state},
          {"params", params},
          {"optimizer", c.optimizer},
          {"early_stop",
           {{"best_score", std::isfinite(bs) ? nlohmann::json(bs) : nlohmann::json(nullptr)},
            {"best_epoch", c.early_stop.best_epoch},
            {"bad_epochs", c.early_stop.bad_epochs},
            {"best_params", best}}}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    Checkpoint c;
    c.config = config_from_json(j.at("config"));
    c.config_hash = j.at("config_hash").get<std::string>();
    if (c.config_hash != config_hash(c.config)) {
      throw DataError("checkpoint: config hash does not match its config");
    }
    c.epoch = j.at("epoch").get<std::size_t>();
    c.stopped_early = j.value("stopped_early", false);
    c.rng_state = j.at("rng_state").get<std::string>();
    for (const auto& p : j.at("params")) {
      c.param_names.push_back(p.at("name").get<std::string>());
      c.params.push_back(tensor_from(p));
    }
    c.optimizer = j.at("optimizer");
    const auto& e = j.at("early_stop");
    c.early_stop.best_score = e.at("best_score").is_null()
                                  ? -std::numeric_limits<double>::infinity()
                                  : e.at("best_score").get<double>();
    c.early_stop.best_epoch = e.at("best_epoch").get<std::size_t>();
    c.early_stop.bad_epochs = e.at("bad_epochs").get<std::size_t>();
    for (const auto& t : e.at("best_params")) c.early_stop.best_params.push_back(tensor_from(t));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << to_json(c).dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

RankingModel model_from_checkpoint(const Checkpoint& c) {
  RankingModel m = RankingModel::initialize(c.config);
  restore(m, c.param_names, c.params);
  return m;
}

RankingModel best_model(const Checkpoint& c) {
  RankingModel m = RankingModel::initialize(c.config);
  restore(m, c.param_names, c.early_stop.best_params.empty() ? c.params : c.early_stop.best_params);
  return m;
}

void write_log_csv(std::ostream& out, const std::vector<EpochLog>& log) {
  auto opt = [](const std::optional<double>& v) {
    std::ostringstream os;
    os.precision(17);
    if (v) os << *v;
    return os.str();
  };
  out << "epoch,train_loss,valid_ctr_auc,valid_cvr_auc\n";
  for (const EpochLog& e : log) {
    out << e.epoch << ',' << opt(e.train_loss) << ',' << opt(e.valid_ctr_auc) << ','
        << opt(e.valid_cvr_auc) << '\n';
  }
}

double mean_loss(RankingModel& model, const Corpus& corpus) {
  Tape tape;
  metrics::Accumulator acc;
  for (const QuerySession& s : corpus) {
    tape.clear();
    double v = 0.0;
    try {
      v = model.loss(tape, s).value();
    } catch (const DomainError& e) {
      throw TrainingError("loss failed on query " + std::to_string(s.query_id) + ": " + e.what());
    }
    if (!std::isfinite(v)) {
      throw TrainingError("non-finite loss on query " + std::to_string(s.query_id));
    }
    acc.add(v);
  }
  return acc.mean();
}

TrainResult train(const TrainConfig& config, const Corpus& train_set, const Corpus& valid_set,
                  const Checkpoint* resume, const TrainHooks& hooks) {
  config.validate();
  if (train_set.empty()) throw ConfigError("train: empty training corpus");

  TrainResult result;
  RankingModel model = RankingModel::initialize(config);
  Optimizer opt(config.optimizer, config.learning_rate);
  std::mt19937_64 rng(sim::splitmix64(config.seed ^ 0x7a1e));
  EarlyStopState es;
  std::size_t epoch = 0;

  if (resume) {
    if (resume_key(resume->config) != resume_key(config)) {
      throw ConfigError("train: checkpoint was written for a different config");
    }
    restore(model, resume->param_names, resume->params);
    rng = rng_from(resume->rng_state);
    opt.load_state(resume->optimizer);
    es = resume->early_stop;
    epoch = resume->epoch;
    result.stopped_early = resume->stopped_early && epoch < config.epochs;
  } else {
    result.log.push_back({0, mean_loss(model, train_set), std::nullopt, std::nullopt});
  }

  auto params = model.parameters();
  std::vector<std::string> names;
  for (const Parameter* p : params) names.push_back(p->name);

  auto make_checkpoint = [&](bool stopped) {
    Checkpoint c;
    c.config = config;
    c.config_hash = config_hash(config);
    c.epoch = epoch;
    c.rng_state = rng_text(rng);
    c.param_names = names;
    c.params = snapshot(model);
    c.optimizer = opt.state();
    c.early_stop = es;
    c.stopped_early = stopped;
    return c;
  };

  Tape tape;
  std::vector<std::size_t> order(train_set.size());
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  bool stop = result.stopped_early;

  while (!stop && epoch < config.epochs) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    metrics::Accumulator epoch_loss;

    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      for (Parameter* p : params) p->zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const QuerySession& s = train_set[order[k]];
        tape.clear();
        Var loss;
        try {
          loss = model.loss(tape, s);
        } catch (const DomainError& e) {
          throw TrainingError("loss failed on query " + std::to_string(s.query_id) + ": " + e.what());
        }
        const double v = loss.value();
        if (!std::isfinite(v)) {
          throw TrainingError("non-finite loss on query " + std::to_string(s.query_id) +
                              " in epoch " + std::to_string(epoch + 1));
        }
        epoch_loss.add(v);
        tape.backward(loss);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (Parameter* p : params) {
        for (double& g : p->grad.values()) {
          g *= inv;
          if (!std::isfinite(g)) {
            throw TrainingError("non-finite gradient for " + p->name + " in epoch " +
                                std::to_string(epoch + 1));
          }
        }
      }
      opt.step(params);
    }
    ++epoch;

    EpochLog entry{epoch, epoch_loss.mean(), std::nullopt, std::nullopt};
    if (!valid_set.empty()) {
      const metrics::EvalReport r = evaluate(model, valid_set, Against::kLabels);
      entry.valid_ctr_auc = r.ctr.auc;
      entry.valid_cvr_auc = r.cvr.auc;
      const double score = r.cvr.auc.value_or(-std::numeric_limits<double>::infinity());
      if (score > es.best_score || es.best_params.empty()) {
        es.best_score = score;
        es.best_epoch = epoch;
        es.bad_epochs = 0;
        es.best_params = snapshot(model);
      } else {
        ++es.bad_epochs;
      }
      if (config.early_stopping && es.bad_epochs >= config.patience) {
        stop = true;
        result.stopped_early = true;
      }
    }
    result.log.push_back(entry);
    if (hooks.on_epoch && !hooks.on_epoch(entry, make_checkpoint(stop))) break;
  }

  result.checkpoint = make_checkpoint(stop);
  result.model = best_model(result.checkpoint);
  return result;
}

}  // namespace heroes::harness
