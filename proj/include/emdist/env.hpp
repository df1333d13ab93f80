#pragma once

#include <Eigen/Dense>

#include <vector>

#include "emdist/distance.hpp"
#include "emdist/dynamics.hpp"
#include "emdist/embodiment.hpp"

namespace emdist {

struct EnvConfig {
  double dt = 0.1;
  int episode_length = 50;
  int substeps = 10;
  double friction = 0.05;
  DistanceConfig distance;

  static EnvConfig defaults() {
    EnvConfig c;
    c.distance.weights = {0.0, 1.0, 0.001, 0.01};
    c.distance.mode = CorrespondenceMode::kStatic;
    return c;
  }
};

struct EnvState {
  EmbodimentState expert;
  EmbodimentState learner;
  int step_index = 0;
};

struct StepResult {
  double reward = 0.0;
  double distance = 0.0;
  bool done = false;
};

/// Torque-controlled imitation MDP: the expert replays a recorded trajectory
/// open loop, the learner integrates its own dynamics, and the reward is the
/// negative embodiment distance between the two states. Only kinematic
/// quantities of the expert are observable.
class ImitationEnv {
 public:
  ImitationEnv(const EmbodimentSpec& expert, const EmbodimentSpec& learner,
               const EnvConfig& cfg);

  void set_trajectory(const Trajectory& traj);

  EnvState reset();
  StepResult step(const Eigen::VectorXd& action);

  /// sin/cos of all joint angles plus joint velocities, expert then learner
  Eigen::VectorXd observation() const;
  int observation_dim() const;
  int action_dim() const { return learner_spec_.effective_dof(); }

  const EnvState& state() const { return state_; }
  const EnvConfig& config() const { return cfg_; }
  const EmbodimentSpec& expert_spec() const { return expert_spec_; }
  const EmbodimentSpec& learner_spec() const { return learner_spec_; }
  const JointState& learner_joints() const { return learner_js_; }
  JointState expert_joints() const { return traj_.at(state_.step_index); }
  int episode_steps() const;
  bool done() const { return done_; }
  Eigen::VectorXd action_limits() const;

  double current_distance() const { return distance_now_; }

 private:
  EmbodimentState expert_state_at(int k) const;
  double distance_between() const;

  EmbodimentSpec expert_spec_;
  EmbodimentSpec learner_spec_;
  EnvConfig cfg_;
  DynamicsModel learner_model_;
  ChainGeometry expert_geo_;
  ChainGeometry learner_geo_;
  Eigen::MatrixXd static_W_;
  bool has_traj_ = false;
  Trajectory traj_;
  JointState learner_js_;
  EnvState state_;
  double distance_now_ = 0.0;
  bool done_ = true;
};

/// Mean per-step distance of an episode that applies zero torque throughout.
double zero_action_mean_distance(ImitationEnv& env);

}  // namespace emdist
