// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/envs/latent_mdp.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <json.hpp>

#include "adacred/errors.hpp"

namespace adacred {

namespace {

double signed_weight(Rng& rng) {
  const double mag = rng.uniform(0.3, 1.0);
  return rng.bernoulli(0.5) ? mag : -mag;
}

double spectral_radius(const std::vector<double>& w, std::size_t d) {
  Eigen::MatrixXd m(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) m(i, j) = w[i * d + j];
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  double rho = 0.0;
  for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
    rho = std::max(rho, std::abs(solver.eigenvalues()[k]));
  }
  return rho;
}

void check_binary(const std::vector<std::uint8_t>& v, std::size_t n, const char* name) {
  if (v.size() != n) throw DimensionError(std::string("mask ") + name + " has wrong size");
  for (std::uint8_t x : v) {
    if (x > 1) throw ParameterError(std::string("mask ") + name + " must be binary");
  }
}

void check_masked(const std::vector<double>& w, std::size_t n, const char* name) {
  if (w.size() != n) throw DimensionError(std::string("weights ") + name + " have wrong size");
}

}  // namespace

StructuralMasks StructuralMasks::empty(std::size_t d) {
  StructuralMasks m;
  m.d = d;
  m.c_gg.assign(d * d, 0);
  m.c_ag.assign(d, 0);
  m.c_rg.assign(d, 0);
  m.c_go.assign(d, 0);
  m.c_gr.assign(d, 0);
  return m;
}

void StructuralMasks::validate() const {
  if (d == 0) throw DimensionError("structural masks need d >= 1");
  check_binary(c_gg, d * d, "c_gg");
  check_binary(c_ag, d, "c_ag");
  check_binary(c_rg, d, "c_rg");
  check_binary(c_go, d, "c_go");
  check_binary(c_gr, d, "c_gr");
  if (c_ar > 1) throw ParameterError("mask c_ar must be binary");
}

void LatentMDPSpec::validate() const {
  if (masks.d != d) throw DimensionError("mask dimensionality differs from spec d");
  masks.validate();
  if (action_count == 0) throw ParameterError("action_count must be positive");
  if (obs_dim == 0) throw ParameterError("obs_dim must be positive");
  check_masked(w_gg, d * d, "w_gg");
  check_masked(b_ag, d * action_count, "b_ag");
  check_masked(w_rg, d, "w_rg");
  check_masked(w_o, obs_dim * d, "w_o");
  check_masked(w_r, d, "w_r");
  check_masked(u_ar, action_count, "u_ar");
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (!masks.gg(i, j) && w_gg[i * d + j] != 0.0) throw ParameterError("w_gg nonzero where c_gg is 0");
    }
    for (std::size_t a = 0; a < action_count; ++a) {
      if (!masks.c_ag[i] && b_ag[i * action_count + a] != 0.0) {
        throw ParameterError("b_ag nonzero where c_ag is 0");
      }
    }
    if (!masks.c_rg[i] && w_rg[i] != 0.0) throw ParameterError("w_rg nonzero where c_rg is 0");
    if (!masks.c_gr[i] && w_r[i] != 0.0) throw ParameterError("w_r nonzero where c_gr is 0");
    for (std::size_t k = 0; k < obs_dim; ++k) {
      if (!masks.c_go[i] && w_o[k * d + i] != 0.0) throw ParameterError("w_o nonzero where c_go is 0");
    }
  }
  for (std::size_t a = 0; a < action_count; ++a) {
    if (!masks.c_ar && u_ar[a] != 0.0) throw ParameterError("u_ar nonzero where c_ar is 0");
  }
  if (sigma_g < 0 || sigma_o < 0 || sigma_r < 0) throw ParameterError("noise scales must be >= 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("gamma must lie in [0, 1]");
}

LatentMDPSpec make_latent_mdp(std::uint64_t seed, std::size_t d, double edge_density,
                              const LatentMDPOptions& options) {
  if (d < 2) throw ParameterError("latent MDP needs d >= 2");
  if (!(edge_density > 0.0 && edge_density <= 1.0)) throw ParameterError("edge density must lie in (0, 1]");
  if (d >= 3 && edge_density >= 1.0) {
    throw ParameterError("edge density 1 leaves no room for a non-compact dimension");
  }
  if (options.action_count < 2) throw ParameterError("latent MDP needs at least 2 actions");
  Rng rng(seed);
  LatentMDPSpec spec;
  spec.d = d;
  spec.action_count = options.action_count;
  spec.obs_dim = options.obs_dim == 0 ? d : options.obs_dim;
  spec.mode = options.mode;
  spec.sigma_g = options.sigma_g;
  spec.sigma_o = options.sigma_o;
  spec.sigma_r = options.sigma_r;
  spec.gamma = options.gamma;
  spec.horizon = options.horizon;

  StructuralMasks& m = spec.masks;
  m = StructuralMasks::empty(d);
  for (auto& c : m.c_gg) c = rng.bernoulli(edge_density);
  for (auto& c : m.c_ag) c = rng.bernoulli(edge_density);
  for (auto& c : m.c_rg) c = rng.bernoulli(options.rg_density);
  for (auto& c : m.c_go) c = rng.bernoulli(edge_density);
  for (auto& c : m.c_gr) c = rng.bernoulli(edge_density);
  m.c_ar = rng.bernoulli(edge_density);

  // The last dimension is made non-compact: nothing leaves it.
  const std::size_t live = d >= 3 ? d - 1 : d;
  if (d >= 3) {
    const std::size_t nc = d - 1;
    m.c_go[nc] = 0;
    m.c_gr[nc] = 0;
    for (std::size_t i = 0; i < d; ++i) m.c_gg[i * d + nc] = 0;
  }
  bool reward_reachable = false;
  for (std::size_t i = 0; i < live; ++i) reward_reachable = reward_reachable || m.c_gr[i];
  if (!reward_reachable) m.c_gr[rng.below(live)] = 1;

  spec.w_gg.assign(d * d, 0.0);
  for (std::size_t k = 0; k < d * d; ++k) {
    if (m.c_gg[k]) spec.w_gg[k] = signed_weight(rng);
  }
  const double rho = spectral_radius(spec.w_gg, d);
  if (rho > options.max_spectral_radius) {
    for (double& w : spec.w_gg) w *= options.max_spectral_radius / rho;
  }
  // Action 0 is the reference level, so every active action edge has an
  // effect of at least 0.3 relative to it.
  spec.b_ag.assign(d * spec.action_count, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    if (!m.c_ag[i]) continue;
    for (std::size_t a = 1; a < spec.action_count; ++a) spec.b_ag[i * spec.action_count + a] = signed_weight(rng);
  }
  spec.w_rg.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    if (m.c_rg[i]) spec.w_rg[i] = signed_weight(rng);
  }
  spec.w_o.assign(spec.obs_dim * d, 0.0);
  for (std::size_t k = 0; k < spec.obs_dim; ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      if (m.c_go[i]) spec.w_o[k * d + i] = signed_weight(rng);
    }
  }
  spec.w_r.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    if (m.c_gr[i]) spec.w_r[i] = signed_weight(rng);
  }
  spec.u_ar.assign(spec.action_count, 0.0);
  if (m.c_ar) {
    for (std::size_t a = 1; a < spec.action_count; ++a) spec.u_ar[a] = signed_weight(rng);
  }
  spec.validate();
  return spec;
}

double latent_reward_mean(const LatentMDPSpec& spec, const std::vector<double>& g, std::size_t action) {
  if (action >= spec.action_count) throw RangeError("action " + std::to_string(action) + " out of range");
  double r = spec.r_bias;
  for (std::size_t j = 0; j < spec.d; ++j) {
    if (spec.masks.c_gr[j]) r += spec.w_r[j] * g[j];
  }
  if (spec.masks.c_ar) r += spec.u_ar[action];
  return r;
}

LatentStep step_latent(const LatentMDPSpec& spec, const std::vector<double>& g, std::size_t action,
                       double r_prev, Rng* rng) {
  if (g.size() != spec.d) throw DimensionError("latent state has wrong dimension");
  const std::size_t d = spec.d;
  LatentStep out;
  out.reward = latent_reward_mean(spec, g, action);
  if (rng && spec.sigma_r > 0) out.reward += spec.sigma_r * rng->normal();
  out.g_next.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double pre = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (spec.masks.gg(i, j)) pre += spec.w_gg[i * d + j] * g[j];
    }
    if (spec.masks.c_ag[i]) pre += spec.b_ag[i * spec.action_count + action];
    if (spec.masks.c_rg[i]) pre += spec.w_rg[i] * r_prev;
    double v = spec.mode == LatentMode::kTanh ? std::tanh(pre) : pre;
    if (rng && spec.sigma_g > 0) v += spec.sigma_g * rng->normal();
    out.g_next[i] = v;
  }
  out.o_next.assign(spec.obs_dim, 0.0);
  for (std::size_t k = 0; k < spec.obs_dim; ++k) {
    double v = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      if (spec.masks.c_go[i]) v += spec.w_o[k * d + i] * out.g_next[i];
    }
    if (rng && spec.sigma_o > 0) v += spec.sigma_o * rng->normal();
    out.o_next[k] = v;
  }
  return out;
}

namespace {

template <typename T>
std::vector<T> json_array(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("latent spec JSON missing '") + key + "'", 0);
  return j.at(key).get<std::vector<T>>();
}

}  // namespace

std::string latent_spec_to_json(const LatentMDPSpec& spec) {
  nlohmann::json j;
  j["d"] = spec.d;
  j["action_count"] = spec.action_count;
  j["obs_dim"] = spec.obs_dim;
  j["mode"] = spec.mode == LatentMode::kTanh ? "tanh" : "linear";
  j["masks"] = {{"c_gg", spec.masks.c_gg}, {"c_ag", spec.masks.c_ag}, {"c_rg", spec.masks.c_rg},
                {"c_go", spec.masks.c_go}, {"c_gr", spec.masks.c_gr}, {"c_ar", spec.masks.c_ar}};
  j["w_gg"] = spec.w_gg;
  j["b_ag"] = spec.b_ag;
  j["w_rg"] = spec.w_rg;
  j["w_o"] = spec.w_o;
  j["w_r"] = spec.w_r;
  j["u_ar"] = spec.u_ar;
  j["r_bias"] = spec.r_bias;
  j["sigma_g"] = spec.sigma_g;
  j["sigma_o"] = spec.sigma_o;
  j["sigma_r"] = spec.sigma_r;
  j["init_scale"] = spec.init_scale;
  j["gamma"] = spec.gamma;
  j["horizon"] = spec.horizon;
  return j.dump(2);
}

LatentMDPSpec latent_spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("latent spec JSON: ") + e.what(), e.byte);
  }
  try {
    LatentMDPSpec spec;
    spec.d = j.at("d").get<std::size_t>();
    spec.action_count = j.at("action_count").get<std::size_t>();
    spec.obs_dim = j.at("obs_dim").get<std::size_t>();
    const std::string mode = j.at("mode").get<std::string>();
    if (mode != "linear" && mode != "tanh") throw FormatError("unknown latent mode '" + mode + "'", 0);
    spec.mode = mode == "tanh" ? LatentMode::kTanh : LatentMode::kLinear;
    const auto& mj = j.at("masks");
    spec.masks.d = spec.d;
    spec.masks.c_gg = json_array<std::uint8_t>(mj, "c_gg");
    spec.masks.c_ag = json_array<std::uint8_t>(mj, "c_ag");
    spec.masks.c_rg = json_array<std::uint8_t>(mj, "c_rg");
    spec.masks.c_go = json_array<std::uint8_t>(mj, "c_go");
    spec.masks.c_gr = json_array<std::uint8_t>(mj, "c_gr");
    spec.masks.c_ar = mj.at("c_ar").get<std::uint8_t>();
    spec.w_gg = json_array<double>(j, "w_gg");
    spec.b_ag = json_array<double>(j, "b_ag");
    spec.w_rg = json_array<double>(j, "w_rg");
    spec.w_o = json_array<double>(j, "w_o");
    spec.w_r = json_array<double>(j, "w_r");
    spec.u_ar = json_array<double>(j, "u_ar");
    spec.r_bias = j.at("r_bias").get<double>();
    spec.sigma_g = j.at("sigma_g").get<double>();
    spec.sigma_o = j.at("sigma_o").get<double>();
    spec.sigma_r = j.at("sigma_r").get<double>();
    spec.init_scale = j.value("init_scale", 1.0);
    spec.gamma = j.at("gamma").get<double>();
    spec.horizon = j.at("horizon").get<std::size_t>();
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("latent spec JSON: ") + e.what(), 0);
  }
}

LatentMDPEnv::LatentMDPEnv(LatentMDPSpec spec, bool observe_latent)
    : spec_(std::move(spec)), observe_latent_(observe_latent) {
  spec_.validate();
  g_.assign(spec_.d, 0.0);
}

Shape LatentMDPEnv::observation_shape() const { return {observe_latent_ ? spec_.d : spec_.obs_dim}; }

std::vector<float> LatentMDPEnv::observe(const std::vector<double>& o) const {
  const std::vector<double>& src = observe_latent_ ? g_ : o;
  return std::vector<float>(src.begin(), src.end());
}

std::vector<float> LatentMDPEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  for (double& v : g_) v = spec_.init_scale * rng_.normal();
  r_prev_ = 0.0;
  std::vector<double> o(spec_.obs_dim, 0.0);
  for (std::size_t k = 0; k < spec_.obs_dim; ++k) {
    for (std::size_t i = 0; i < spec_.d; ++i) {
      if (spec_.masks.c_go[i]) o[k] += spec_.w_o[k * spec_.d + i] * g_[i];
    }
    if (spec_.sigma_o > 0) o[k] += spec_.sigma_o * rng_.normal();
  }
  return observe(o);
}

StepResult LatentMDPEnv::step(std::size_t action) {
  if (action >= spec_.action_count) throw RangeError("action " + std::to_string(action) + " out of range");
  LatentStep s = step_latent(spec_, g_, action, r_prev_, &rng_);
  g_ = std::move(s.g_next);
  r_prev_ = s.reward;
  StepResult out;
  out.reward = s.reward;
  out.observation = observe(s.o_next);
  return out;
}

std::size_t LatentGreedyPolicy::act(const Env& env, Rng&) {
  const auto* latent = dynamic_cast<const LatentMDPEnv*>(&env);
  if (!latent) throw ContractError("greedy latent policy needs a latent MDP environment");
  std::size_t best = 0;
  double best_r = latent_reward_mean(latent->spec(), latent->latent(), 0);
  for (std::size_t a = 1; a < latent->action_count(); ++a) {
    const double r = latent_reward_mean(latent->spec(), latent->latent(), a);
    if (r > best_r) {
      best = a;
      best_r = r;
    }
  }
  return best;
}

std::size_t LatentRollouts::transitions() const {
  std::size_t n = 0;
  for (const auto& a : actions) n += a.size();
  return n;
}

LatentRollouts simulate_latents(const LatentMDPSpec& spec, std::size_t transitions, std::size_t steps,
                                std::uint64_t seed) {
  if (steps == 0) throw ParameterError("episode length must be positive");
  spec.validate();
  Rng rng(seed);
  LatentRollouts out;
  out.d = spec.d;
  while (out.transitions() < transitions) {
    const std::size_t len = std::min(steps, transitions - out.transitions());
    std::vector<std::vector<double>> states;
    std::vector<std::size_t> actions;
    std::vector<double> rewards;
    std::vector<double> g(spec.d);
    for (double& v : g) v = spec.init_scale * rng.normal();
    states.push_back(g);
    double r_prev = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t a = rng.below(spec.action_count);
      LatentStep s = step_latent(spec, g, a, r_prev, &rng);
      actions.push_back(a);
      rewards.push_back(s.reward);
      g = std::move(s.g_next);
      r_prev = s.reward;
      states.push_back(g);
    }
    out.states.push_back(std::move(states));
    out.actions.push_back(std::move(actions));
    out.rewards.push_back(std::move(rewards));
  }
  return out;
}

}  // namespace adacred
