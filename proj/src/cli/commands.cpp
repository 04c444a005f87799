// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/cli/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "adacred/causal/identify.hpp"
#include "adacred/causal/prune_check.hpp"
#include "adacred/causal/structure.hpp"
#include "adacred/cli/svg.hpp"
#include "adacred/dataset/dataset_io.hpp"
#include "adacred/envs/gridworld.hpp"
#include "adacred/envs/latent_mdp.hpp"
#include "adacred/envs/rollout.hpp"
#include "adacred/errors.hpp"
#include "adacred/model/checkpoint.hpp"
#include "adacred/training/trainer.hpp"

namespace adacred::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"gen-data", "train", "eval", "sweep", "masks", "causal"};
  return names;
}

json eval_defaults() {
  return {{"seeds", 10},      {"episodes", 10},          {"base_seed", 1000}, {"mode", "auto"},
          {"rtg", 1.0},       {"distractors", true},     {"episode_length", 30}};
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string out_path(const json& cfg, const std::string& name) { return (fs::path(cfg["out"].get<std::string>()) / name).string(); }

std::string require_string(const json& cfg, const std::string& key) {
  const std::string v = cfg.at(key).get<std::string>();
  if (v.empty()) throw ConfigError("--" + key + " is required");
  return v;
}

std::size_t positive(const json& cfg, const std::string& key) {
  const auto v = cfg.at(key).get<std::int64_t>();
  if (v <= 0) throw ConfigError("--" + key + " must be positive");
  return std::size_t(v);
}

std::size_t non_negative(const json& cfg, const std::string& key) {
  const auto v = cfg.at(key).get<std::int64_t>();
  if (v < 0) throw ConfigError("--" + key + " must be >= 0");
  return std::size_t(v);
}

GridWorldSpec grid_spec(const json& cfg) {
  GridWorldSpec gs;
  gs.distractors = cfg.at("distractors").get<bool>();
  gs.episode_length = positive(cfg, "episode_length");
  gs.validate();
  return gs;
}

std::unique_ptr<Env> eval_env_for(const std::string& env_id, const json& cfg) {
  if (env_id != "keydoor") throw ConfigError("online evaluation is only available for the keydoor environment");
  return std::make_unique<GridWorld>(grid_spec(cfg));
}

struct CheckpointInfo {
  int stage = 1;
  bool imitation = false;
};

CheckpointInfo checkpoint_info(const CheckpointData& data) {
  CheckpointInfo info;
  const json header = json::parse(data.header);
  if (header.contains("trainer")) {
    info.stage = header["trainer"].value("stage", 1);
    info.imitation = header["trainer"].value("imitation", false);
  }
  return info;
}

MaskMode parse_mode(const std::string& mode, int stage) {
  if (mode == "auto") return stage == 1 ? MaskMode::kForceOnes : MaskMode::kDeterministic;
  if (mode == "ones") return MaskMode::kForceOnes;
  if (mode == "det") return MaskMode::kDeterministic;
  if (mode == "stoch") return MaskMode::kStochastic;
  if (mode == "none") return MaskMode::kNone;
  throw ConfigError("unknown mask mode '" + mode + "' (auto, ones, det, stoch, none)");
}

EvalConfig eval_config(const json& cfg, const CheckpointInfo& info) {
  EvalConfig ec;
  ec.seeds = positive(cfg, "seeds");
  ec.episodes = positive(cfg, "episodes");
  ec.base_seed = cfg.at("base_seed").get<std::uint64_t>();
  ec.rtg_init = cfg.at("rtg").get<double>();
  ec.zero_reward_tokens = info.imitation;
  ec.mode = parse_mode(cfg.at("mode").get<std::string>(), info.stage);
  return ec;
}

json eval_json(const EvalResult& r) {
  return {{"mean", r.mean}, {"std", r.std}, {"episodes", r.returns.size()}, {"returns", r.returns}};
}

// ---------------------------------------------------------------- gen-data

void cmd_gen_data(const json& cfg, RunManifest& m) {
  const std::string env_id = require_string(cfg, "env");
  const std::size_t episodes = positive(cfg, "episodes");
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  std::unique_ptr<Env> env;
  if (env_id == "keydoor") {
    env = std::make_unique<GridWorld>(grid_spec(cfg));
  } else if (env_id == "latent") {
    LatentMDPOptions opts;
    opts.horizon = positive(cfg, "episode_length");
    LatentMDPSpec spec = make_latent_mdp(seed, positive(cfg, "latent_d"), cfg.at("latent_density").get<double>(), opts);
    write_file(out_path(cfg, "latent_spec.json"), latent_spec_to_json(spec) + "\n");
    m.artifacts.push_back("latent_spec.json");
    env = std::make_unique<LatentMDPEnv>(std::move(spec));
  } else {
    throw ConfigError("unknown environment '" + env_id + "' (keydoor, latent)");
  }
  auto policy = make_policy(cfg.at("policy").get<std::string>(), *env);
  OfflineDataset ds;
  ds.gamma = cfg.at("gamma").get<double>();
  for (std::size_t e = 0; e < episodes; ++e) {
    ds.trajectories.push_back(rollout(*env, *policy, env->episode_length(), splitmix64(seed + e), ds.gamma));
  }
  const double behaviour_return = ds.mean_return();
  if (cfg.at("imitation").get<bool>()) ds.set_imitation();
  ds.norm = compute_normalization(ds.trajectories);
  fs::create_directories(cfg["out"].get<std::string>());
  write_dataset(ds, out_path(cfg, "dataset.adcr"), cfg.at("big_endian").get<bool>());
  m.artifacts.push_back("dataset.adcr");
  std::printf("trajectories %zu mean_return %s%s\n", ds.trajectories.size(), format_number(behaviour_return).c_str(),
              ds.imitation ? " (rewards removed)" : "");
}

// ---------------------------------------------------------------- train

RewardToken parse_reward_token(const std::string& s) {
  if (s == "rtg") return RewardToken::kReturnToGo;
  if (s == "prev") return RewardToken::kPreviousReward;
  throw ConfigError("unknown reward token '" + s + "' (rtg, prev)");
}

void cmd_train(const json& cfg, RunManifest& m) {
  const std::string data_path = require_string(cfg, "data");
  const int stage = cfg.at("stage").get<int>();
  if (stage != 1 && stage != 2) throw ConfigError("--stage must be 1 or 2");
  const std::string init = cfg.at("init").get<std::string>();
  const std::string resume = cfg.at("resume").get<std::string>();
  if (stage == 2 && init.empty() && resume.empty() && !cfg.at("cold_start").get<bool>()) {
    throw DependencyError("stage 2 needs a stage-1 checkpoint (--init) or --cold-start");
  }
  const double keep_s = cfg.at("keep_spatial").get<double>();
  const double keep_t = cfg.at("keep_temporal").get<double>();
  if (!(keep_s > 0.0 && keep_s <= 100.0) || !(keep_t > 0.0 && keep_t <= 100.0)) {
    throw ConfigError("keep percentages must lie in (0, 100]");
  }
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  OfflineDataset ds = read_dataset(data_path);
  m.inputs.push_back(data_path);
  if (ds.trajectories.empty()) throw ConfigError("dataset '" + data_path + "' is empty");
  const std::string env_id = ds.trajectories.front().meta.env_id;

  std::unique_ptr<AdaCredModel> model;
  CheckpointData resume_data;
  if (!resume.empty()) {
    resume_data = read_checkpoint(resume);
    m.inputs.push_back(resume);
    model = restore_model(resume_data);
  } else if (stage == 2 && !init.empty()) {
    model = load_model(init);
    m.inputs.push_back(init);
  } else {
    const Shape& shape = ds.trajectories.front().obs_shape;
    if (shape.size() != 3) throw ConfigError("training needs image observations [C, H, W]");
    ModelConfig mc;
    mc.ctx = positive(cfg, "ctx");
    mc.layers = positive(cfg, "layers");
    mc.channels = shape[0];
    mc.image_h = shape[1];
    mc.image_w = shape[2];
    mc.keep_spatial = keep_s / 100.0;
    mc.keep_temporal = keep_t / 100.0;
    mc.reward_token = parse_reward_token(cfg.at("reward_token").get<std::string>());
    mc.validate();
    model = std::make_unique<AdaCredModel>(mc, seed);
    model->set_normalization(ds.norm);
  }
  const ModelConfig& mc = model->config();
  if (mc.obs_shape() != ds.trajectories.front().obs_shape) {
    throw ConfigError("dataset observations " + shape_str(ds.trajectories.front().obs_shape) +
                      " do not match the model's " + shape_str(mc.obs_shape()));
  }

  TrainConfig tc;
  tc.stage = stage;
  tc.steps = positive(cfg, "steps");
  tc.batch = positive(cfg, "batch");
  tc.alpha = cfg.at("alpha").get<double>();
  tc.keep_spatial = keep_s / 100.0;
  tc.keep_temporal = keep_t / 100.0;
  tc.adam.lr = cfg.at("lr").get<double>();
  tc.adam.final_tokens = double(tc.steps * tc.batch * mc.ctx);
  tc.eval_interval = non_negative(cfg, "eval_interval");
  tc.eval = eval_config(cfg, {stage, ds.imitation});
  tc.checkpoint_interval = non_negative(cfg, "checkpoint_interval");
  tc.checkpoint_path = out_path(cfg, "checkpoint.adck");
  tc.seed = seed;
  std::unique_ptr<Env> env;
  if (tc.eval_interval) env = eval_env_for(env_id, cfg);

  fs::create_directories(cfg["out"].get<std::string>());
  Trainer trainer(*model, ds, tc, env.get());
  if (!resume.empty()) trainer.restore(resume_data);
  const std::size_t log_every = non_negative(cfg, "log_every");
  trainer.run([&](const MetricsRow& row) {
    if (log_every && row.step % log_every == 0) {
      std::fprintf(stderr, "step %zu loss %.4f action %.4f eff %.5f\n", row.step, row.l_total, row.l_action, row.l_eff);
    }
  });
  trainer.save(tc.checkpoint_path);
  trainer.metrics().write(out_path(cfg, "metrics.csv"));
  m.artifacts.push_back("checkpoint.adck");
  m.artifacts.push_back("metrics.csv");
  const auto rows = trainer.metrics().rows();
  if (!rows.empty()) {
    const MetricsRow& last = rows.back();
    std::printf("stage %d steps %zu final_loss %s", stage, trainer.current_step(), format_number(last.l_total).c_str());
    for (std::size_t i = 0; i < last.keep.size(); ++i) {
      std::printf(" keep_%s_%zu %s", i % 2 ? "temporal" : "spatial", i / 2, format_number(last.keep[i]).c_str());
    }
    std::printf("\n");
  }
}

// ---------------------------------------------------------------- eval

void cmd_eval(const json& cfg, RunManifest& m) {
  const std::string path = require_string(cfg, "checkpoint");
  const CheckpointData data = read_checkpoint(path);
  m.inputs.push_back(path);
  auto model = restore_model(data);
  const EvalConfig ec = eval_config(cfg, checkpoint_info(data));
  auto env = eval_env_for("keydoor", cfg);
  const EvalResult r = evaluate(*model, *env, ec);
  fs::create_directories(cfg["out"].get<std::string>());
  write_file(out_path(cfg, "eval.json"), eval_json(r).dump(2) + "\n");
  m.artifacts.push_back("eval.json");
  std::printf("mean_return %s std %s episodes %zu\n", format_number(r.mean).c_str(), format_number(r.std).c_str(),
              r.returns.size());
}

// ---------------------------------------------------------------- sweep

std::vector<std::pair<int, int>> parse_grid(const std::string& text) {
  std::vector<std::pair<int, int>> grid;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto colon = cell.find(':');
    if (colon == std::string::npos) throw ConfigError("grid cell '" + cell + "' is not of the form S:T");
    try {
      const int s = std::stoi(cell.substr(0, colon)), t = std::stoi(cell.substr(colon + 1));
      if (s <= 0 || s > 100 || t <= 0 || t > 100) throw ConfigError("grid percentages must lie in (0, 100]");
      grid.emplace_back(s, t);
    } catch (const std::logic_error&) {
      throw ConfigError("grid cell '" + cell + "' is not of the form S:T");
    }
  }
  if (std::find(grid.begin(), grid.end(), std::make_pair(100, 100)) == grid.end()) grid.emplace_back(100, 100);
  return grid;
}

void cmd_sweep(const json& cfg, RunManifest& m) {
  const std::string root = require_string(cfg, "root");
  const auto grid = parse_grid(cfg.at("grid").get<std::string>());
  auto env = eval_env_for("keydoor", cfg);
  std::vector<Bar> bars;
  json cells = json::array();
  std::string csv = "p_spatial,p_temporal,present,mean,std,episodes\n";
  for (const auto& [s, t] : grid) {
    const std::string rel = "s" + std::to_string(s) + "_t" + std::to_string(t) + "/checkpoint.adck";
    const std::string path = (fs::path(root) / rel).string();
    Bar bar;
    bar.label = "(" + std::to_string(s) + "," + std::to_string(t) + ")";
    json cell = {{"p_spatial", s}, {"p_temporal", t}, {"checkpoint", rel}};
    if (!fs::exists(path)) {
      bar.present = false;
      cell["present"] = false;
      csv += std::to_string(s) + "," + std::to_string(t) + ",0,,,0\n";
      std::fprintf(stderr, "cell %s: no checkpoint at %s, marked absent\n", bar.label.c_str(), path.c_str());
    } else {
      const CheckpointData data = read_checkpoint(path);
      m.inputs.push_back(path);
      auto model = restore_model(data);
      const EvalResult r = evaluate(*model, *env, eval_config(cfg, checkpoint_info(data)));
      bar.mean = r.mean;
      bar.std = r.std;
      cell["present"] = true;
      cell["result"] = eval_json(r);
      csv += std::to_string(s) + "," + std::to_string(t) + ",1," + format_number(r.mean) + "," +
             format_number(r.std) + "," + std::to_string(r.returns.size()) + "\n";
    }
    bars.push_back(bar);
    cells.push_back(cell);
  }
  fs::create_directories(cfg["out"].get<std::string>());
  write_file(out_path(cfg, "sweep.csv"), csv);
  write_file(out_path(cfg, "sweep.json"), json{{"cells", cells}}.dump(2) + "\n");
  write_file(out_path(cfg, "sweep.svg"), bar_chart_svg("mean return per (p_S, p_T) cell", bars, utc_timestamp()));
  m.artifacts.insert(m.artifacts.end(), {"sweep.csv", "sweep.json", "sweep.svg"});
  std::printf("%s", csv.c_str());
}

// ---------------------------------------------------------------- masks

void cmd_masks(const json& cfg, RunManifest& m) {
  const std::string ck = require_string(cfg, "checkpoint");
  const std::string data_path = require_string(cfg, "data");
  const CheckpointData data = read_checkpoint(ck);
  m.inputs.push_back(ck);
  OfflineDataset ds = read_dataset(data_path);
  m.inputs.push_back(data_path);
  auto model = restore_model(data);
  const ModelConfig& mc = model->config();
  const std::size_t index = non_negative(cfg, "trajectory");
  if (index >= ds.trajectories.size()) {
    throw RangeError("trajectory " + std::to_string(index) + " out of range (dataset has " +
                     std::to_string(ds.trajectories.size()) + ")");
  }
  const Trajectory& traj = ds.trajectories[index];
  const std::size_t start = non_negative(cfg, "start");
  if (start + mc.ctx > traj.length()) {
    throw RangeError("window [" + std::to_string(start) + ", " + std::to_string(start + mc.ctx) +
                     ") exceeds trajectory length " + std::to_string(traj.length()));
  }
  if (traj.obs_shape != mc.obs_shape()) throw ConfigError("dataset observations do not match the model");
  SequenceBatch batch = SequenceBatch::empty(1, mc.ctx, mc.obs_shape());
  fill_window(batch, 0, traj, start + mc.ctx - 1, mc.action_count, ds.imitation, mc.reward_token);
  ForwardOptions opts;
  opts.mode = parse_mode(cfg.at("mode").get<std::string>(), 2);
  const ForwardResult out = model->forward(batch, opts);

  const std::size_t n = mc.patches(), G = mc.group_tokens();
  MaskView view;
  view.steps = mc.ctx;
  view.height = mc.image_h;
  view.width = mc.image_w;
  view.patch = mc.patch;
  const std::size_t plane = mc.image_h * mc.image_w;
  for (std::size_t t = 0; t < mc.ctx; ++t) {
    const auto frame = traj.frame(start + t);
    view.frames.emplace_back(frame.begin(), frame.begin() + long(plane));
  }
  json spatial = json::array(), temporal = json::array();
  for (const auto& layer : out.masks.spatial) {
    std::vector<std::vector<std::uint8_t>> steps;
    json jl = json::array();
    for (std::size_t t = 0; t < mc.ctx; ++t) {
      std::vector<std::uint8_t> row;
      for (std::size_t k = 0; k < G; ++k) row.push_back(layer[t * G + k] > Real(0.5) ? 1 : 0);
      jl.push_back(row);
      steps.emplace_back(row.begin() + 2, row.begin() + 2 + long(n));
    }
    spatial.push_back(jl);
    view.spatial.push_back(std::move(steps));
  }
  for (const auto& layer : out.masks.temporal) {
    std::vector<std::uint8_t> row;
    for (Real v : layer) row.push_back(v > Real(0.5) ? 1 : 0);
    temporal.push_back(row);
    view.temporal.push_back(std::move(row));
  }
  json events = json::object();
  auto add_event = [&](int step, const char* name) {
    if (step < 0) return;
    events[name] = step;
    const long rel = long(step) - long(start);
    if (rel >= 0 && rel < long(mc.ctx)) view.events.emplace_back(std::size_t(rel), name);
  };
  add_event(traj.meta.key_step, "key");
  add_event(traj.meta.door_step, "door");
  const json doc = {{"trajectory", index},
                    {"start", start},
                    {"ctx", mc.ctx},
                    {"group_layout", "action, reward, patches in row-major order"},
                    {"temporal_layout", "interleaved g_1, h_1, g_2, h_2, ..."},
                    {"events", events},
                    {"spatial", spatial},
                    {"temporal", temporal}};
  fs::create_directories(cfg["out"].get<std::string>());
  write_file(out_path(cfg, "masks.json"), doc.dump(2) + "\n");
  write_file(out_path(cfg, "masks.svg"), mask_svg(view, utc_timestamp()));
  m.artifacts.insert(m.artifacts.end(), {"masks.json", "masks.svg"});
  std::printf("masks for trajectory %zu steps [%zu, %zu) written\n", index, start, start + mc.ctx);
}

// ---------------------------------------------------------------- causal

json masks_json(const StructuralMasks& s) {
  return {{"d", s.d},       {"c_gg", s.c_gg}, {"c_ag", s.c_ag}, {"c_rg", s.c_rg},
          {"c_go", s.c_go}, {"c_gr", s.c_gr}, {"c_ar", s.c_ar}};
}

void cmd_causal(const json& cfg, RunManifest& m) {
  bool identify = cfg.at("identify").get<bool>();
  bool prune = cfg.at("prune_check").get<bool>();
  if (!identify && !prune) identify = prune = true;
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  LatentMDPSpec spec;
  const std::string spec_path = cfg.at("spec").get<std::string>();
  if (!spec_path.empty()) {
    spec = latent_spec_from_json(read_file(spec_path));
    m.inputs.push_back(spec_path);
  } else {
    LatentMDPOptions opts;
    opts.action_count = positive(cfg, "actions");
    const std::string mode = cfg.at("latent_mode").get<std::string>();
    if (mode != "linear" && mode != "tanh") throw ConfigError("--latent-mode must be linear or tanh");
    opts.mode = mode == "tanh" ? LatentMode::kTanh : LatentMode::kLinear;
    opts.sigma_g = opts.sigma_o = opts.sigma_r = cfg.at("sigma").get<double>();
    spec = make_latent_mdp(seed, positive(cfg, "d"), cfg.at("density").get<double>(), opts);
  }
  const CompactPartition part = compact_partition(spec.masks);
  const SufficientSet minimal = minimal_sufficient_set(spec.masks);
  json report = {{"spec", json::parse(latent_spec_to_json(spec))},
                 {"compact", part.compact},
                 {"non_compact", part.non_compact},
                 {"minimal_sufficient", minimal.dims},
                 {"degenerate", minimal.degenerate}};
  if (prune) {
    const PruneReport pr = prune_invariance_check(spec, positive(cfg, "horizon"), positive(cfg, "samples"), seed);
    report["prune_check"] = {{"kept", pr.kept},
                             {"pruned", pr.pruned},
                             {"states", pr.states},
                             {"disagreements", pr.disagreements},
                             {"fraction", pr.fraction}};
    std::printf("prune_check disagreement_fraction %s over %zu states\n", format_number(pr.fraction).c_str(),
                pr.states);
  }
  if (identify) {
    const LatentRollouts rollouts =
        simulate_latents(spec, positive(cfg, "transitions"), positive(cfg, "episode_steps"), splitmix64(seed));
    IdentifyOptions io;
    io.alpha = cfg.at("alpha").get<double>();
    const IdentifyResult r = identify_structure(rollouts, spec.action_count, io);
    const EdgeScore score = edge_f1(r.masks, spec.masks);
    json tests = json::array();
    for (const EdgeTest& t : r.tests) {
      tests.push_back({{"mask", t.mask},
                       {"target", t.target},
                       {"source", t.source},
                       {"statistic", t.statistic},
                       {"p_value", t.p_value},
                       {"edge", t.edge}});
    }
    report["identify"] = {{"estimate", masks_json(r.masks)},
                          {"threshold", r.threshold},
                          {"samples", r.samples},
                          {"tests", tests},
                          {"f1", score.f1},
                          {"precision", score.precision},
                          {"recall", score.recall}};
    std::printf("identify f1 %s precision %s recall %s transitions %zu\n", format_number(score.f1).c_str(),
                format_number(score.precision).c_str(), format_number(score.recall).c_str(), r.samples);
  }
  fs::create_directories(cfg["out"].get<std::string>());
  write_file(out_path(cfg, "causal_report.json"), report.dump(2) + "\n");
  m.artifacts.push_back("causal_report.json");
}

// ---------------------------------------------------------------- plumbing

json merge_config(const std::string& command, const json& config) {
  json cfg = default_config(command);
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : config.items()) {
    if (!cfg.contains(key)) throw ConfigError("unknown option '" + key + "' for " + command);
    if (cfg[key].is_number() != value.is_number() || cfg[key].is_boolean() != value.is_boolean() ||
        cfg[key].is_string() != value.is_string()) {
      throw ConfigError("option '" + key + "' has the wrong type");
    }
    cfg[key] = value;
  }
  return cfg;
}

json parse_scalar(const json& like, const std::string& key, const std::string& text) {
  try {
    if (like.is_boolean()) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw ConfigError("option '" + key + "' expects true or false");
    }
    if (like.is_number_integer()) {
      std::size_t used = 0;
      const long long v = std::stoll(text, &used);
      if (used != text.size()) throw ConfigError("option '" + key + "' expects an integer");
      return v;
    }
    if (like.is_number()) {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw ConfigError("option '" + key + "' expects a number");
      return v;
    }
  } catch (const std::logic_error&) {
    throw ConfigError("option '" + key + "' has malformed value '" + text + "'");
  }
  std::string s = text;
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// key=value lines; '#' starts a comment; dashes and underscores are interchangeable.
void apply_config_file(json& cfg, const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '-', '_');
    if (!cfg.contains(key)) throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    cfg[key] = parse_scalar(cfg[key], key, trim(line.substr(eq + 1)));
  }
}

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

// One CLI11 option per config key, typed by the default value.
struct Binding {
  std::string key;
  std::string text;
  bool flag = false;
  CLI::Option* option = nullptr;
};

void bind_options(CLI::App& sub, const json& defaults, std::deque<Binding>& bindings) {
  for (const auto& [key, value] : defaults.items()) {
    Binding& b = bindings.emplace_back();
    b.key = key;
    const std::string name = flag_name(key);
    std::string help = "default: " + (value.is_string() ? value.get<std::string>() : value.dump());
    if (value.is_boolean()) {
      b.flag = value.get<bool>();
      const std::string negated = "!--no-" + name.substr(2);
      b.option = sub.add_flag(name + "," + negated, b.flag, help);
    } else {
      b.option = sub.add_option(name, b.text, help);
    }
  }
}

void record_manifest(RunManifest& m, const json& cfg) {
  m.config = cfg;
  m.seed = cfg.contains("seed") ? cfg["seed"].get<std::uint64_t>() : 0;
  m.input_hash = hash_inputs(m.inputs);
  m.finished = utc_timestamp();
  fs::create_directories(cfg["out"].get<std::string>());
  write_manifest(m, out_path(cfg, kManifestName));
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const CLI::ParseError*>(&e)) return kExitUsage;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
      dynamic_cast<const RangeError*>(&e) || dynamic_cast<const CapacityError*>(&e) ||
      dynamic_cast<const StatisticalPowerError*>(&e)) {
    return kExitUsage;
  }
  if (dynamic_cast<const DependencyError*>(&e)) return kExitDependency;
  if (dynamic_cast<const FormatError*>(&e)) return kExitFormat;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  return kExitFailure;
}

json default_config(const std::string& command) {
  if (command == "gen-data") {
    return {{"env", ""},          {"episodes", 500},  {"policy", "mixed"},      {"seed", 7},
            {"imitation", false}, {"gamma", 1.0},     {"episode_length", 30},   {"distractors", true},
            {"latent_d", 4},      {"latent_density", 0.5}, {"big_endian", false}, {"out", "out"}};
  }
  if (command == "train") {
    json j = {{"data", ""},          {"stage", 1},          {"ctx", 10},         {"layers", 2},
              {"steps", 2000},       {"batch", 16},         {"alpha", 10.0},     {"keep_spatial", 75.0},
              {"keep_temporal", 75.0}, {"init", ""},        {"cold_start", false}, {"resume", ""},
              {"seed", 0},           {"lr", 6e-4},          {"reward_token", "rtg"}, {"eval_interval", 0},
              {"checkpoint_interval", 0}, {"log_every", 0}, {"out", "out"}};
    j.update(eval_defaults());
    return j;
  }
  if (command == "eval") {
    json j = {{"checkpoint", ""}, {"out", "out"}};
    j.update(eval_defaults());
    return j;
  }
  if (command == "sweep") {
    json j = {{"root", ""}, {"grid", "50:50,50:100,40:80,100:50,100:100"}, {"out", "out"}};
    j.update(eval_defaults());
    return j;
  }
  if (command == "masks") {
    return {{"checkpoint", ""}, {"data", ""}, {"trajectory", 0}, {"start", 0}, {"mode", "det"}, {"out", "out"}};
  }
  if (command == "causal") {
    return {{"identify", false},  {"prune_check", false}, {"spec", ""},          {"d", 4},
            {"density", 0.5},     {"actions", 2},         {"latent_mode", "linear"}, {"sigma", 0.1},
            {"transitions", 10000}, {"episode_steps", 100}, {"alpha", 0.01},     {"horizon", 4},
            {"samples", 200},     {"seed", 0},            {"out", "out"}};
  }
  throw ConfigError("unknown command '" + command + "'");
}

RunManifest run_command(const std::string& command, const json& config) {
  const json cfg = merge_config(command, config);
  RunManifest m;
  m.command = command;
  m.started = utc_timestamp();
  if (command == "gen-data") {
    cmd_gen_data(cfg, m);
  } else if (command == "train") {
    cmd_train(cfg, m);
  } else if (command == "eval") {
    cmd_eval(cfg, m);
  } else if (command == "sweep") {
    cmd_sweep(cfg, m);
  } else if (command == "masks") {
    cmd_masks(cfg, m);
  } else if (command == "causal") {
    cmd_causal(cfg, m);
  }
  record_manifest(m, cfg);
  return m;
}

RunManifest rerun_manifest(const std::string& manifest_path, const std::string& out) {
  const RunManifest recorded = read_manifest(manifest_path);
  json cfg = recorded.config;
  if (!out.empty()) cfg["out"] = out;
  return run_command(recorded.command, cfg);
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"AdaCred: credit-assignment transformer with learned token pruning"};
  app.require_subcommand(1);
  std::map<std::string, std::deque<Binding>> bindings;
  std::map<std::string, std::string> config_files;
  std::map<std::string, CLI::App*> subs;
  const std::map<std::string, std::string> about{
      {"gen-data", "roll out a behaviour policy and write an offline dataset"},
      {"train", "stage 1 (unmasked) or stage 2 (masked) training"},
      {"eval", "evaluate a checkpoint online"},
      {"sweep", "evaluate checkpoints over a keep-ratio grid"},
      {"masks", "dump and render the masks of one trajectory window"},
      {"causal", "structure identification and pruning-invariance report"}};
  for (const std::string& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name, about.at(name));
    bind_options(*sub, default_config(name), bindings[name]);
    sub->add_option("--config", config_files[name], "key=value file applied before flags");
    subs[name] = sub;
  }
  std::string manifest_path, rerun_out;
  CLI::App* rerun = app.add_subcommand("rerun", "re-execute a run from its manifest");
  rerun->add_option("manifest", manifest_path, "manifest.json of the original run")->required();
  rerun->add_option("--out", rerun_out, "output directory (default: the recorded one)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }
  try {
    if (rerun->parsed()) {
      const RunManifest m = rerun_manifest(manifest_path, rerun_out);
      std::printf("manifest %s\n", (fs::path(m.config["out"].get<std::string>()) / kManifestName).c_str());
      return kExitOk;
    }
    for (const std::string& name : command_names()) {
      if (!subs[name]->parsed()) continue;
      json cfg = default_config(name);
      if (!config_files[name].empty()) apply_config_file(cfg, config_files[name]);
      for (const Binding& b : bindings[name]) {
        if (b.option->count() == 0) continue;
        cfg[b.key] = cfg[b.key].is_boolean() ? json(b.flag) : parse_scalar(cfg[b.key], b.key, b.text);
      }
      if (const char* env_seed = std::getenv("ADACRED_SEED"); env_seed && cfg.contains("seed")) {
        cfg["seed"] = parse_scalar(cfg["seed"], "seed", env_seed);
      }
      const RunManifest m = run_command(name, cfg);
      std::printf("manifest %s\n", (fs::path(m.config["out"].get<std::string>()) / kManifestName).c_str());
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace adacred::cli
