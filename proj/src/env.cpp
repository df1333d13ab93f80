#include "emdist/env.hpp"

#include <cmath>

namespace emdist {

ImitationEnv::ImitationEnv(const EmbodimentSpec& expert,
                           const EmbodimentSpec& learner, const EnvConfig& cfg)
    : expert_spec_(normalize(expert)),
      learner_spec_(normalize(learner)),
      cfg_(cfg),
      learner_model_(learner_spec_, cfg.friction) {
  if (cfg_.dt <= 0.0 || cfg_.episode_length < 1)
    throw std::invalid_argument("env config: dt > 0 and episode_length >= 1");
  expert_geo_ = chain_geometry(expert_spec_);
  learner_geo_ = chain_geometry(learner_spec_);
  if (cfg_.distance.mode == CorrespondenceMode::kStatic)
    static_W_ = static_correspondence(expert_spec_, learner_spec_).W;
  learner_js_ = zero_joint_state(learner_spec_);
}

void ImitationEnv::set_trajectory(const Trajectory& traj) {
  if (traj.steps() < 1)
    throw std::invalid_argument("set_trajectory: empty trajectory");
  if (traj.dof() != expert_spec_.num_links())
    throw std::invalid_argument("set_trajectory: trajectory dof mismatch");
  traj_ = traj;
  has_traj_ = true;
  done_ = true;  // require reset before stepping
}

int ImitationEnv::episode_steps() const {
  return std::min(cfg_.episode_length, has_traj_ ? traj_.steps() : 0);
}

EmbodimentState ImitationEnv::expert_state_at(int k) const {
  const JointState js = traj_.at(k);
  return chain_twists(expert_geo_, Eigen::VectorXd(js.q),
                      Eigen::VectorXd(js.qdot));
}

double ImitationEnv::distance_between() const {
  const Eigen::MatrixXd* wptr =
      cfg_.distance.mode == CorrespondenceMode::kStatic ? &static_W_ : nullptr;
  return embodiment_distance(state_.expert, state_.learner, cfg_.distance,
                             wptr);
}

EnvState ImitationEnv::reset() {
  if (!has_traj_)
    throw std::logic_error("reset: no expert trajectory loaded");
  learner_js_ = zero_joint_state(learner_spec_);
  state_.expert = expert_state_at(0);
  state_.learner =
      chain_twists(learner_geo_, Eigen::VectorXd(learner_js_.q),
                   Eigen::VectorXd(learner_js_.qdot));
  state_.step_index = 0;
  distance_now_ = distance_between();
  done_ = false;
  return state_;
}

StepResult ImitationEnv::step(const Eigen::VectorXd& action) {
  if (done_)
    throw std::logic_error("step: episode finished, call reset first");
  if (action.size() != action_dim())
    throw std::invalid_argument("step: action dimension mismatch");
  if (!action.allFinite())
    throw std::invalid_argument("step: non-finite action");

  // expand to the full joint vector; locked joints receive no torque
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(learner_spec_.num_links());
  const std::vector<int> free = learner_spec_.unlocked_joints();
  for (std::size_t k = 0; k < free.size(); ++k)
    tau[free[k] - 1] = action[static_cast<int>(k)];

  learner_js_ =
      step_dynamics(learner_model_, learner_js_, tau, cfg_.dt, cfg_.substeps);
  state_.step_index += 1;
  state_.expert = expert_state_at(state_.step_index);
  state_.learner =
      chain_twists(learner_geo_, Eigen::VectorXd(learner_js_.q),
                   Eigen::VectorXd(learner_js_.qdot));
  distance_now_ = distance_between();

  StepResult res;
  res.distance = distance_now_;
  res.reward = -distance_now_;
  res.done = state_.step_index >= episode_steps();
  done_ = res.done;
  return res;
}

Eigen::VectorXd ImitationEnv::observation() const {
  const JointState ej = has_traj_ && state_.step_index <= traj_.steps()
                            ? traj_.at(state_.step_index)
                            : zero_joint_state(expert_spec_);
  const int ne = expert_spec_.num_links();
  const int nl = learner_spec_.num_links();
  Eigen::VectorXd obs(3 * ne + 3 * nl);
  int at = 0;
  for (int i = 0; i < ne; ++i) obs[at++] = std::sin(ej.q[i]);
  for (int i = 0; i < ne; ++i) obs[at++] = std::cos(ej.q[i]);
  for (int i = 0; i < ne; ++i) obs[at++] = ej.qdot[i];
  for (int i = 0; i < nl; ++i) obs[at++] = std::sin(learner_js_.q[i]);
  for (int i = 0; i < nl; ++i) obs[at++] = std::cos(learner_js_.q[i]);
  for (int i = 0; i < nl; ++i) obs[at++] = learner_js_.qdot[i];
  return obs;
}

int ImitationEnv::observation_dim() const {
  return 3 * expert_spec_.num_links() + 3 * learner_spec_.num_links();
}

Eigen::VectorXd ImitationEnv::action_limits() const {
  const std::vector<int> free = learner_spec_.unlocked_joints();
  Eigen::VectorXd lim(static_cast<int>(free.size()));
  for (std::size_t k = 0; k < free.size(); ++k)
    lim[static_cast<int>(k)] = learner_spec_.links[free[k] - 1].torque_limit;
  return lim;
}

double zero_action_mean_distance(ImitationEnv& env) {
  env.reset();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(env.action_dim());
  double sum = 0.0;
  int steps = 0;
  while (true) {
    const StepResult r = env.step(zero);
    sum += r.distance;
    ++steps;
    if (r.done) break;
  }
  return steps > 0 ? sum / steps : 0.0;
}

}  // namespace emdist
