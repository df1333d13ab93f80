#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "emdist/env.hpp"
#include "emdist/mlp.hpp"
#include "emdist/optim.hpp"
#include "emdist/rng.hpp"

namespace emdist {

struct PpoConfig {
  double gamma = 0.4;
  double gae_lambda = 0.95;
  double clip = 0.2;
  int rollout_steps = 2048;
  int update_epochs = 10;
  int minibatch_size = 64;
  double lr_policy = 3e-4;
  double lr_value = 1e-3;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  double kl_threshold = 0.05;  // stop an update's epochs past this drift
  double init_log_std = -0.5;
  std::vector<int> hidden = {64, 64};
  long total_steps = 2'000'000;
  std::uint64_t seed = 0;
  // stop once the mean episode distance falls below this value (< 0: never)
  double target_mean_distance = -1.0;

  void validate() const {
    if (gamma <= 0.0 || gamma >= 1.0)
      throw std::invalid_argument("ppo: gamma must lie in (0, 1)");
    if (clip <= 0.0 || clip >= 1.0)
      throw std::invalid_argument("ppo: clip must lie in (0, 1)");
  }
};

/// Diagonal-Gaussian torque policy: tanh-squashed mean scaled to the torque
/// limits, state-independent log standard deviation.
struct Policy {
  Mlp mean_net;                 // tanh output in [-1, 1]
  Eigen::VectorXd log_std;      // per action dimension, torque units
  Eigen::VectorXd action_scale; // per-joint torque limits

  Eigen::VectorXd mean(const Eigen::VectorXd& obs) const {
    return action_scale.cwiseProduct(mean_net.forward(obs));
  }
  double log_prob(const Eigen::VectorXd& action,
                  const Eigen::VectorXd& mu) const;
  double entropy() const;
};

struct ValueFn {
  Mlp net;  // linear scalar output
  double value(const Eigen::VectorXd& obs) const {
    return net.forward(obs)[0];
  }
};

struct RolloutBatch {
  Eigen::MatrixXd obs;      // obs_dim x N
  Eigen::MatrixXd actions;  // act_dim x N
  Eigen::VectorXd log_probs;
  Eigen::VectorXd rewards;
  Eigen::VectorXd values;
  Eigen::VectorXd dones;  // 1 when the step ended its episode
  Eigen::VectorXd distances;
  double bootstrap_value = 0.0;  // V(s_N) when the batch ends mid-episode
  bool truncated_mid_episode = false;

  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;

  // episode statistics over episodes completed inside this batch
  double mean_episode_return = 0.0;
  double mean_episode_distance = 0.0;
  int completed_episodes = 0;
  int size() const { return static_cast<int>(rewards.size()); }
};

/// Generalized advantage estimation. Fills `advantages` (normalized to zero
/// mean and unit variance) and `returns` (raw advantages plus values).
void compute_gae(RolloutBatch& batch, double gamma, double lambda);

struct UpdateDiagnostics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

struct LearningCurveRow {
  int update = 0;
  long steps = 0;
  double mean_return = 0.0;
  double mean_distance = 0.0;
  double clip_fraction = 0.0;
};

class PpoTrainer {
 public:
  PpoTrainer(const EmbodimentSpec& expert, const EmbodimentSpec& learner,
             const EnvConfig& env_cfg, std::vector<Trajectory> trajectories,
             const PpoConfig& cfg);

  RolloutBatch collect_rollouts(int steps);
  UpdateDiagnostics ppo_update(const RolloutBatch& batch);

  /// Full training loop; returns the learning curve, one row per update.
  std::vector<LearningCurveRow> train();

  /// Mean per-step distance of deterministic rollouts over all training
  /// trajectories.
  double deterministic_mean_distance();

  const Policy& policy() const { return policy_; }
  const ValueFn& value_fn() const { return value_; }
  ImitationEnv& env() { return env_; }
  const PpoConfig& config() const { return cfg_; }

 private:
  void begin_episode();

  EmbodimentSpec expert_spec_, learner_spec_;
  EnvConfig env_cfg_;
  PpoConfig cfg_;
  ImitationEnv env_;
  std::vector<Trajectory> trajs_;
  Policy policy_;
  ValueFn value_;
  Rng rng_;
  Adam policy_opt_;
  Adam value_opt_;
  bool episode_open_ = false;
  double episode_return_ = 0.0;
  double episode_distance_sum_ = 0.0;
  int episode_len_ = 0;
};

/// Deterministic (mean-action) rollout of one episode; per-step distances.
std::vector<double> evaluate_policy(const Policy& policy, ImitationEnv& env,
                                    const Trajectory& traj);

/// Checkpoint bundling policy, value function, both specs and the
/// environment configuration; weight blocks reuse the MLP JSON layout.
void save_policy_checkpoint(const std::string& path, const Policy& policy,
                            const ValueFn& value,
                            const EmbodimentSpec& expert,
                            const EmbodimentSpec& learner,
                            const EnvConfig& env_cfg);

struct PolicyCheckpoint {
  Policy policy;
  ValueFn value;
  EmbodimentSpec expert;
  EmbodimentSpec learner;
  EnvConfig env_cfg;
};
PolicyCheckpoint load_policy_checkpoint(const std::string& path);

}  // namespace emdist
