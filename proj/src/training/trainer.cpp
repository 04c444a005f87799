// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/training/trainer.hpp"

#include <cmath>
#include <json.hpp>

#include "adacred/errors.hpp"
#include "adacred/numerics/ops.hpp"
#include "adacred/training/losses.hpp"

namespace adacred {

void TrainConfig::validate() const {
  if (stage != 1 && stage != 2) throw ConfigError("stage must be 1 or 2");
  if (batch == 0) throw ConfigError("batch size must be positive");
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (!(keep_spatial > 0.0 && keep_spatial <= 1.0) || !(keep_temporal > 0.0 && keep_temporal <= 1.0)) {
    throw ConfigError("keep targets must lie in (0, 1]");
  }
  if (checkpoint_interval && checkpoint_path.empty()) throw ConfigError("checkpoint interval needs a path");
}

Trainer::Trainer(AdaCredModel& model, const OfflineDataset& dataset, TrainConfig config, const Env* eval_env)
    : model_(model),
      dataset_(dataset),
      config_(std::move(config)),
      eval_env_(eval_env),
      data_rng_(splitmix64(config_.seed ^ 0xDA7AULL)),
      metrics_(model.config().layers) {
  config_.validate();
  if (dataset_.trajectories.empty()) throw SamplingError("training dataset is empty");
  optimizer_ = std::make_unique<Adam>(config_.adam, model_.trainable(config_.stage == 2));
}

MetricsRow Trainer::step() {
  const ModelConfig& mc = model_.config();
  SequenceBatch batch =
      sample_batch(dataset_, config_.batch, mc.ctx, mc.action_count, data_rng_, mc.reward_token);
  const bool stage2 = config_.stage == 2;
  Tape tape;
  Tensor loss, l_action, l_eff;
  MetricsRow row;
  {
    TapeScope scope(tape);
    ForwardOptions opts;
    opts.mode = stage2 ? MaskMode::kStochastic : MaskMode::kForceOnes;
    opts.train = true;
    ForwardResult out = model_.forward(batch, opts);
    l_action = action_loss(out.logits, batch.targets, batch.valid);
    l_eff = efficiency_loss(activation_stats(out.masks, config_.keep_spatial, config_.keep_temporal));
    loss = stage2 ? ops::add(l_action, ops::scale(l_eff, Real(config_.alpha))) : l_action;
    for (const LayerActivation& a : out.masks.stats) row.keep.push_back(a.ratio());
  }
  row.step = step_ + 1;
  row.l_action = l_action.item();
  row.l_eff = l_eff.item();
  row.l_total = stage2 ? row.l_action + config_.alpha * row.l_eff : row.l_action;
  if (!std::isfinite(loss.item())) {
    throw NumericalError("non-finite loss at step " + std::to_string(row.step) + "; last good checkpoint: " +
                         (last_checkpoint_.empty() ? "none" : last_checkpoint_));
  }
  optimizer_->zero_grad();
  backward(loss, tape);
  try {
    optimizer_->step(double(batch.valid_count()));
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " at step " + std::to_string(row.step) +
                         "; last good checkpoint: " + (last_checkpoint_.empty() ? "none" : last_checkpoint_));
  }
  ++step_;
  if (eval_env_ && config_.eval_interval && step_ % config_.eval_interval == 0) {
    EvalResult ev = evaluate(model_, *eval_env_, config_.eval);
    row.eval_mean = ev.mean;
    row.eval_std = ev.std;
  }
  metrics_.append(row);
  if (config_.checkpoint_interval && step_ % config_.checkpoint_interval == 0) save(config_.checkpoint_path);
  return row;
}

void Trainer::run(const std::function<void(const MetricsRow&)>& on_row) {
  while (step_ < config_.steps) {
    MetricsRow row = step();
    if (on_row) on_row(row);
  }
}

CheckpointData Trainer::capture() const {
  CheckpointData data;
  nlohmann::json trainer;
  trainer["stage"] = config_.stage;
  trainer["step"] = step_;
  trainer["imitation"] = dataset_.imitation;
  trainer["data_rng"] = data_rng_.serialize();
  trainer["opt_step"] = optimizer_->state().step;
  trainer["opt_tokens"] = optimizer_->state().tokens;
  std::vector<std::string> rows;
  for (const MetricsRow& r : metrics_.rows()) rows.push_back(MetricsLog::format_row(r));
  trainer["metrics"] = rows;
  nlohmann::json header;
  header["trainer"] = trainer;
  data.header = header.dump();
  capture_model(model_, data);
  const auto& params = optimizer_->params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    data.tensors.push_back({"opt/m/" + params[i].name, params[i].tensor.shape(), optimizer_->state().m[i]});
    data.tensors.push_back({"opt/v/" + params[i].name, params[i].tensor.shape(), optimizer_->state().v[i]});
  }
  return data;
}

namespace {

MetricsRow parse_row(const std::string& line) {
  MetricsRow row;
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (fields.size() < 6) throw FormatError("malformed metrics row in checkpoint", 0);
  row.step = std::stoull(fields[0]);
  row.l_total = std::stod(fields[1]);
  row.l_action = std::stod(fields[2]);
  row.l_eff = std::stod(fields[3]);
  for (std::size_t i = 4; i + 2 < fields.size(); ++i) row.keep.push_back(std::stod(fields[i]));
  if (!fields[fields.size() - 2].empty()) row.eval_mean = std::stod(fields[fields.size() - 2]);
  if (!fields.back().empty()) row.eval_std = std::stod(fields.back());
  return row;
}

}  // namespace

void Trainer::restore(const CheckpointData& data) {
  const nlohmann::json header = nlohmann::json::parse(data.header);
  if (!header.contains("trainer")) throw StateError("checkpoint carries no trainer state");
  const auto& tr = header["trainer"];
  if (tr["stage"].get<int>() != config_.stage) throw StateError("checkpoint belongs to a different training stage");
  load_parameters(model_, data);
  if (header.contains("model_rng")) model_.rng().deserialize(header["model_rng"].get<std::string>());
  OptimizerState st;
  for (const NamedParam& p : optimizer_->params()) {
    st.m.push_back(data.find("opt/m/" + p.name).values);
    st.v.push_back(data.find("opt/v/" + p.name).values);
  }
  st.step = tr["opt_step"].get<std::uint64_t>();
  st.tokens = tr["opt_tokens"].get<double>();
  optimizer_ = std::make_unique<Adam>(config_.adam, model_.trainable(config_.stage == 2));
  optimizer_->set_state(std::move(st));
  data_rng_.deserialize(tr["data_rng"].get<std::string>());
  step_ = tr["step"].get<std::size_t>();
  metrics_.clear();
  for (const auto& line : tr["metrics"]) metrics_.append(parse_row(line.get<std::string>()));
}

void Trainer::save(const std::string& path) {
  write_checkpoint(capture(), path);
  last_checkpoint_ = path;
}

}  // namespace adacred
