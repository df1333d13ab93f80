#include "emdist/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace emdist {

namespace {
constexpr double kLogSqrt2Pi = 0.9189385332046727;  // log sqrt(2 pi)
}

double Policy::log_prob(const Eigen::VectorXd& action,
                        const Eigen::VectorXd& mu) const {
  double lp = 0.0;
  for (int j = 0; j < action.size(); ++j) {
    const double sd = std::exp(log_std[j]);
    const double z = (action[j] - mu[j]) / sd;
    lp += -0.5 * z * z - log_std[j] - kLogSqrt2Pi;
  }
  return lp;
}

double Policy::entropy() const {
  double h = 0.0;
  for (int j = 0; j < log_std.size(); ++j)
    h += log_std[j] + 0.5 + kLogSqrt2Pi;
  return h;
}

PpoTrainer::PpoTrainer(const EmbodimentSpec& expert,
                       const EmbodimentSpec& learner, const EnvConfig& env_cfg,
                       std::vector<Trajectory> trajectories,
                       const PpoConfig& cfg)
    : expert_spec_(normalize(expert)),
      learner_spec_(normalize(learner)),
      env_cfg_(env_cfg),
      cfg_(cfg),
      env_(expert_spec_, learner_spec_, env_cfg),
      trajs_(std::move(trajectories)),
      rng_(derive_seed(cfg.seed, 17)),
      policy_opt_(cfg.lr_policy),
      value_opt_(cfg.lr_value) {
  cfg_.validate();
  if (trajs_.empty())
    throw std::invalid_argument("ppo: need at least one expert trajectory");

  MlpConfig pc;
  pc.input = env_.observation_dim();
  pc.hidden = cfg_.hidden;
  pc.output = env_.action_dim();
  pc.hidden_activation = HiddenActivation::kTanh;
  pc.output_activation = OutputActivation::kTanhScaled;
  pc.output_scale = 1.0;
  Rng pinit(derive_seed(cfg_.seed, 1));
  policy_.mean_net = Mlp(pc, pinit);
  policy_.mean_net.init_seed = cfg_.seed;
  policy_.log_std =
      Eigen::VectorXd::Constant(env_.action_dim(), cfg_.init_log_std);
  policy_.action_scale = env_.action_limits();

  MlpConfig vc;
  vc.input = env_.observation_dim();
  vc.hidden = cfg_.hidden;
  vc.output = 1;
  vc.hidden_activation = HiddenActivation::kTanh;
  vc.output_activation = OutputActivation::kLinear;
  Rng vinit(derive_seed(cfg_.seed, 2));
  value_.net = Mlp(vc, vinit);
}

void PpoTrainer::begin_episode() {
  const int idx = trajs_.size() > 1
                      ? rng_.uniform_int(static_cast<int>(trajs_.size()))
                      : 0;
  env_.set_trajectory(trajs_[idx]);
  env_.reset();
  episode_open_ = true;
  episode_return_ = 0.0;
  episode_distance_sum_ = 0.0;
  episode_len_ = 0;
}

RolloutBatch PpoTrainer::collect_rollouts(int steps) {
  RolloutBatch batch;
  batch.obs.resize(env_.observation_dim(), steps);
  batch.actions.resize(env_.action_dim(), steps);
  batch.log_probs.resize(steps);
  batch.rewards.resize(steps);
  batch.values.resize(steps);
  batch.dones.resize(steps);
  batch.distances.resize(steps);

  double ret_sum = 0.0, dist_sum = 0.0;
  int episodes = 0;

  for (int t = 0; t < steps; ++t) {
    if (!episode_open_) begin_episode();
    const Eigen::VectorXd obs = env_.observation();
    const Eigen::VectorXd mu = policy_.mean(obs);
    Eigen::VectorXd action(env_.action_dim());
    for (int j = 0; j < action.size(); ++j)
      action[j] = mu[j] + std::exp(policy_.log_std[j]) * rng_.normal();
    const double lp = policy_.log_prob(action, mu);
    const double v = value_.value(obs);

    const StepResult r = env_.step(action);

    batch.obs.col(t) = obs;
    batch.actions.col(t) = action;
    batch.log_probs[t] = lp;
    batch.values[t] = v;
    batch.rewards[t] = r.reward;
    batch.distances[t] = r.distance;
    batch.dones[t] = r.done ? 1.0 : 0.0;

    episode_return_ += r.reward;
    episode_distance_sum_ += r.distance;
    episode_len_ += 1;
    if (r.done) {
      ret_sum += episode_return_;
      dist_sum += episode_distance_sum_ / episode_len_;
      ++episodes;
      episode_open_ = false;
    }
  }
  batch.truncated_mid_episode = episode_open_;
  batch.bootstrap_value =
      episode_open_ ? value_.value(env_.observation()) : 0.0;
  batch.completed_episodes = episodes;
  batch.mean_episode_return = episodes > 0 ? ret_sum / episodes : 0.0;
  batch.mean_episode_distance = episodes > 0 ? dist_sum / episodes : 0.0;
  return batch;
}

void compute_gae(RolloutBatch& batch, double gamma, double lambda) {
  const int n = batch.size();
  batch.advantages.resize(n);
  Eigen::VectorXd raw(n);
  double gae = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const double not_done = 1.0 - batch.dones[t];
    const double next_value =
        batch.dones[t] > 0.5
            ? 0.0
            : (t + 1 < n ? batch.values[t + 1] : batch.bootstrap_value);
    const double delta =
        batch.rewards[t] + gamma * next_value - batch.values[t];
    gae = delta + gamma * lambda * not_done * gae;
    raw[t] = gae;
  }
  batch.returns = raw + batch.values;
  const double mean = raw.mean();
  const double var =
      (raw.array() - mean).square().sum() / std::max(1, n);
  batch.advantages = (raw.array() - mean) / std::sqrt(var + 1e-8);
}

UpdateDiagnostics PpoTrainer::ppo_update(const RolloutBatch& batch) {
  if (batch.advantages.size() != batch.size())
    throw std::invalid_argument("ppo_update: run compute_gae first");
  const int n = batch.size();
  const int act_dim = env_.action_dim();

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  UpdateDiagnostics diag;
  long clipped = 0, seen = 0;
  double kl_sum = 0.0, pg_sum = 0.0, v_sum = 0.0;

  for (int epoch = 0; epoch < cfg_.update_epochs; ++epoch) {
    rng_.shuffle(order.begin(), order.end());
    double epoch_kl = 0.0;
    long epoch_seen = 0;
    for (int start = 0; start < n; start += cfg_.minibatch_size) {
      const int b = std::min(cfg_.minibatch_size, n - start);
      Eigen::MatrixXd obs(batch.obs.rows(), b);
      for (int k = 0; k < b; ++k) obs.col(k) = batch.obs.col(order[start + k]);

      Mlp::Cache pc, vc;
      const Eigen::MatrixXd y = policy_.mean_net.forward_batch(obs, pc);
      const Eigen::MatrixXd vpred = value_.net.forward_batch(obs, vc);

      Eigen::MatrixXd d_y = Eigen::MatrixXd::Zero(act_dim, b);
      Eigen::MatrixXd d_v = Eigen::MatrixXd::Zero(1, b);
      Eigen::VectorXd d_log_std = Eigen::VectorXd::Zero(act_dim);

      for (int k = 0; k < b; ++k) {
        const int idx = order[start + k];
        const Eigen::VectorXd mu =
            policy_.action_scale.cwiseProduct(y.col(k));
        const Eigen::VectorXd act = batch.actions.col(idx);
        const double lp_new = policy_.log_prob(act, mu);
        const double logratio = lp_new - batch.log_probs[idx];
        const double ratio = std::exp(logratio);
        const double adv = batch.advantages[idx];

        const double surr1 = ratio * adv;
        const double ratio_c =
            std::clamp(ratio, 1.0 - cfg_.clip, 1.0 + cfg_.clip);
        const double surr2 = ratio_c * adv;
        const bool use_unclipped = surr1 <= surr2;
        pg_sum += -std::min(surr1, surr2);
        kl_sum += (ratio - 1.0) - logratio;
        epoch_kl += (ratio - 1.0) - logratio;
        ++epoch_seen;
        if (std::abs(ratio - 1.0) > cfg_.clip) ++clipped;
        ++seen;

        // d(-min(surr1, surr2))/d lp_new; zero when the clip is active
        const double dpg_dlp = use_unclipped ? -ratio * adv : 0.0;
        if (dpg_dlp != 0.0) {
          for (int j = 0; j < act_dim; ++j) {
            const double sd = std::exp(policy_.log_std[j]);
            const double z = (act[j] - mu[j]) / sd;
            // d lp / d mu_j = z / sd ; d mu_j / d y_j = scale_j
            d_y(j, k) += (dpg_dlp / b) * (z / sd) * policy_.action_scale[j];
            // d lp / d log_std_j = z^2 - 1
            d_log_std[j] += (dpg_dlp / b) * (z * z - 1.0);
          }
        }

        const double vdiff = vpred(0, k) - batch.returns[idx];
        v_sum += 0.5 * vdiff * vdiff;
        d_v(0, k) = cfg_.value_coef * vdiff / b;
      }
      // entropy bonus: d(-c_e H)/d log_std_j = -c_e
      d_log_std.array() -= cfg_.entropy_coef;

      const Mlp::Gradients pg = policy_.mean_net.backward_batch(pc, d_y);
      const Mlp::Gradients vg = value_.net.backward_batch(vc, d_v);

      Eigen::VectorXd pflat(policy_.mean_net.num_params() + act_dim);
      {
        int at = 0;
        for (const auto& gl : pg.layers) {
          pflat.segment(at, gl.W.size()) =
              Eigen::Map<const Eigen::VectorXd>(gl.W.data(), gl.W.size());
          at += static_cast<int>(gl.W.size());
          pflat.segment(at, gl.b.size()) = gl.b;
          at += static_cast<int>(gl.b.size());
        }
        pflat.segment(at, act_dim) = d_log_std;
      }
      Eigen::VectorXd pparams(policy_.mean_net.num_params() + act_dim);
      pparams << policy_.mean_net.get_params(), policy_.log_std;
      policy_opt_.step(pparams, pflat);
      policy_.mean_net.set_params(pparams.head(policy_.mean_net.num_params()));
      policy_.log_std = pparams.tail(act_dim);

      Eigen::VectorXd vflat(value_.net.num_params());
      {
        int at = 0;
        for (const auto& gl : vg.layers) {
          vflat.segment(at, gl.W.size()) =
              Eigen::Map<const Eigen::VectorXd>(gl.W.data(), gl.W.size());
          at += static_cast<int>(gl.W.size());
          vflat.segment(at, gl.b.size()) = gl.b;
          at += static_cast<int>(gl.b.size());
        }
      }
      Eigen::VectorXd vparams = value_.net.get_params();
      value_opt_.step(vparams, vflat);
      value_.net.set_params(vparams);

      if (!pparams.allFinite() || !vparams.allFinite())
        throw std::runtime_error("ppo_update: parameters diverged");
    }
    if (cfg_.kl_threshold > 0.0 && epoch_seen > 0 &&
        epoch_kl / epoch_seen > cfg_.kl_threshold) {
      break;
    }
  }

  diag.clip_fraction = seen > 0 ? static_cast<double>(clipped) / seen : 0.0;
  diag.approx_kl = seen > 0 ? kl_sum / seen : 0.0;
  diag.policy_loss = seen > 0 ? pg_sum / seen : 0.0;
  diag.value_loss = seen > 0 ? v_sum / seen : 0.0;
  diag.entropy = policy_.entropy();
  return diag;
}

std::vector<LearningCurveRow> PpoTrainer::train() {
  std::vector<LearningCurveRow> curve;
  long steps_done = 0;
  int update = 0;
  while (steps_done < cfg_.total_steps) {
    RolloutBatch batch = collect_rollouts(cfg_.rollout_steps);
    compute_gae(batch, cfg_.gamma, cfg_.gae_lambda);
    const UpdateDiagnostics diag = ppo_update(batch);
    steps_done += batch.size();
    ++update;
    LearningCurveRow row;
    row.update = update;
    row.steps = steps_done;
    row.mean_return = batch.mean_episode_return;
    row.mean_distance = batch.mean_episode_distance;
    row.clip_fraction = diag.clip_fraction;
    curve.push_back(row);
    // the stop target is judged on deterministic mean-action rollouts, the
    // same quantity an evaluation would report; the noisy training episodes
    // only gate when the check is worth running
    if (cfg_.target_mean_distance > 0.0 && batch.completed_episodes > 0 &&
        batch.mean_episode_distance < 1.5 * cfg_.target_mean_distance) {
      if (deterministic_mean_distance() < cfg_.target_mean_distance) break;
    }
  }
  return curve;
}

double PpoTrainer::deterministic_mean_distance() {
  ImitationEnv eval_env(expert_spec_, learner_spec_, env_cfg_);
  double total = 0.0;
  for (const auto& traj : trajs_) {
    const std::vector<double> series = evaluate_policy(policy_, eval_env, traj);
    double m = 0.0;
    for (double d : series) m += d;
    total += m / static_cast<double>(series.size());
  }
  return total / static_cast<double>(trajs_.size());
}

std::vector<double> evaluate_policy(const Policy& policy, ImitationEnv& env,
                                    const Trajectory& traj) {
  env.set_trajectory(traj);
  env.reset();
  std::vector<double> distances;
  while (true) {
    const Eigen::VectorXd action = policy.mean(env.observation());
    const StepResult r = env.step(action);
    distances.push_back(r.distance);
    if (r.done) break;
  }
  return distances;
}

using nlohmann::json;

namespace {

json distance_config_to_json(const DistanceConfig& cfg) {
  json j;
  j["weights"] = {cfg.weights.alpha_tr, cfg.weights.alpha_rot,
                  cfg.weights.alpha_v, cfg.weights.alpha_omega};
  if (cfg.corr_weights) {
    j["corr_weights"] = {cfg.corr_weights->alpha_tr,
                         cfg.corr_weights->alpha_rot, cfg.corr_weights->alpha_v,
                         cfg.corr_weights->alpha_omega};
  }
  switch (cfg.mode) {
    case CorrespondenceMode::kStatic: j["mode"] = "static"; break;
    case CorrespondenceMode::kBinaryBidirectional: j["mode"] = "binary"; break;
    case CorrespondenceMode::kSoftmin: j["mode"] = "softmin"; break;
  }
  j["softmin_xi"] = cfg.softmin_xi;
  j["reducer"] =
      cfg.reducer == DistanceReducer::kMean ? "mean" : "frobenius";
  j["coupled_weights"] = cfg.coupled_weights;
  return j;
}

DistanceConfig distance_config_from_json(const json& j) {
  DistanceConfig cfg;
  const auto& w = j.at("weights");
  cfg.weights = {w.at(0).get<double>(), w.at(1).get<double>(),
                 w.at(2).get<double>(), w.at(3).get<double>()};
  if (j.contains("corr_weights")) {
    const auto& cw = j.at("corr_weights");
    cfg.corr_weights = DistanceWeights{
        cw.at(0).get<double>(), cw.at(1).get<double>(), cw.at(2).get<double>(),
        cw.at(3).get<double>()};
  }
  const std::string mode = j.value("mode", "static");
  cfg.mode = mode == "binary" ? CorrespondenceMode::kBinaryBidirectional
             : mode == "softmin" ? CorrespondenceMode::kSoftmin
                                 : CorrespondenceMode::kStatic;
  cfg.softmin_xi = j.value("softmin_xi", -10.0);
  cfg.reducer = j.value("reducer", "mean") == std::string("frobenius")
                    ? DistanceReducer::kFrobenius
                    : DistanceReducer::kMean;
  cfg.coupled_weights = j.value("coupled_weights", false);
  return cfg;
}

}  // namespace

void save_policy_checkpoint(const std::string& path, const Policy& policy,
                            const ValueFn& value, const EmbodimentSpec& expert,
                            const EmbodimentSpec& learner,
                            const EnvConfig& env_cfg) {
  json j;
  j["format"] = "emdist-policy";
  j["version"] = 1;
  j["policy"] = json::parse(policy.mean_net.to_json_string());
  j["log_std"] = std::vector<double>(
      policy.log_std.data(), policy.log_std.data() + policy.log_std.size());
  j["action_scale"] = std::vector<double>(
      policy.action_scale.data(),
      policy.action_scale.data() + policy.action_scale.size());
  j["value"] = json::parse(value.net.to_json_string());
  j["expert_spec"] = json::parse(spec_to_json_string(expert));
  j["learner_spec"] = json::parse(spec_to_json_string(learner));
  json e;
  e["dt"] = env_cfg.dt;
  e["episode_length"] = env_cfg.episode_length;
  e["substeps"] = env_cfg.substeps;
  e["friction"] = env_cfg.friction;
  e["distance"] = distance_config_to_json(env_cfg.distance);
  j["env"] = e;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump() << "\n";
}

PolicyCheckpoint load_policy_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const json j = json::parse(buf.str());
  if (j.value("format", "") != "emdist-policy")
    throw std::runtime_error("not an emdist-policy checkpoint");
  PolicyCheckpoint ck;
  ck.policy.mean_net = Mlp::from_json_string(j.at("policy").dump());
  const auto ls = j.at("log_std").get<std::vector<double>>();
  ck.policy.log_std =
      Eigen::Map<const Eigen::VectorXd>(ls.data(), ls.size());
  const auto as = j.at("action_scale").get<std::vector<double>>();
  ck.policy.action_scale =
      Eigen::Map<const Eigen::VectorXd>(as.data(), as.size());
  ck.value.net = Mlp::from_json_string(j.at("value").dump());
  ck.expert = spec_from_json_string(j.at("expert_spec").dump());
  ck.learner = spec_from_json_string(j.at("learner_spec").dump());
  const json& e = j.at("env");
  ck.env_cfg.dt = e.at("dt").get<double>();
  ck.env_cfg.episode_length = e.at("episode_length").get<int>();
  ck.env_cfg.substeps = e.at("substeps").get<int>();
  ck.env_cfg.friction = e.at("friction").get<double>();
  ck.env_cfg.distance = distance_config_from_json(e.at("distance"));
  return ck;
}

}  // namespace emdist
