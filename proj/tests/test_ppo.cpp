#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>

#include "emdist/ppo.hpp"
#include "emdist/rng.hpp"

using namespace emdist;

namespace {

std::vector<Trajectory> record_set(const EmbodimentSpec& spec, int n,
                                   std::uint64_t seed,
                                   double friction = 0.05) {
  const DynamicsModel model(spec, friction);
  Rng rng(seed);
  std::vector<Trajectory> out;
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd goal =
        rng.uniform_vec(model.dof(), -M_PI / 2, M_PI / 2);
    out.push_back(record_expert(model, goal, {}, 5.0, 0.1).traj);
  }
  return out;
}

PpoTrainer make_trainer(const EmbodimentSpec& spec, int n_traj,
                        std::uint64_t seed, PpoConfig cfg = {}) {
  cfg.seed = seed;
  return PpoTrainer(spec, spec, EnvConfig::defaults(),
                    record_set(spec, n_traj, 7), cfg);
}

}  // namespace

TEST_SUITE("ppo") {

TEST_CASE("gae: lambda 0 reduces to the one-step TD advantage") {
  RolloutBatch b;
  const int n = 6;
  b.rewards = Eigen::VectorXd::LinSpaced(n, -1.0, -0.5);
  b.values = Eigen::VectorXd::LinSpaced(n, 0.2, 0.5);
  b.dones = Eigen::VectorXd::Zero(n);
  b.dones[n - 1] = 1.0;
  b.obs.resize(1, n);
  b.actions.resize(1, n);
  b.log_probs = Eigen::VectorXd::Zero(n);
  b.distances = Eigen::VectorXd::Zero(n);

  const double gamma = 0.4;
  RolloutBatch l0 = b;
  compute_gae(l0, gamma, 0.0);
  for (int t = 0; t < n; ++t) {
    const double next_v = (t + 1 < n && b.dones[t] < 0.5) ? b.values[t + 1] : 0.0;
    const double want = b.rewards[t] + gamma * next_v - b.values[t];
    // advantages are normalized afterwards; compare through returns instead
    CHECK(l0.returns[t] == doctest::Approx(want + b.values[t]).epsilon(1e-12));
  }

  RolloutBatch g0 = b;
  compute_gae(g0, 1e-12, 0.95);  // gamma -> 0: advantage = r - V
  for (int t = 0; t < n; ++t)
    CHECK(g0.returns[t] == doctest::Approx(b.rewards[t]).epsilon(1e-9));
}

TEST_CASE("gae: constant rewards with the fixed-point value give zero advantage") {
  RolloutBatch b;
  const int n = 40;
  const double r = -0.3, gamma = 0.4;
  // no terminal inside the batch; bootstrap with the same fixed point
  b.rewards = Eigen::VectorXd::Constant(n, r);
  b.values = Eigen::VectorXd::Constant(n, r / (1.0 - gamma));
  b.dones = Eigen::VectorXd::Zero(n);
  b.bootstrap_value = r / (1.0 - gamma);
  b.obs.resize(1, n);
  b.actions.resize(1, n);
  b.log_probs = Eigen::VectorXd::Zero(n);
  b.distances = Eigen::VectorXd::Zero(n);
  compute_gae(b, gamma, 0.95);
  for (int t = 0; t < n; ++t)
    CHECK(std::abs(b.returns[t] - b.values[t]) < 1e-12);
}

TEST_CASE("gae: advantages are normalized per update") {
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  PpoTrainer tr = make_trainer(c2, 1, 3);
  RolloutBatch batch = tr.collect_rollouts(256);
  compute_gae(batch, 0.4, 0.95);
  CHECK(std::abs(batch.advantages.mean()) < 1e-6);
  const double var = (batch.advantages.array() - batch.advantages.mean())
                         .square()
                         .mean();
  CHECK(std::abs(var - 1.0) < 1e-6);
}

TEST_CASE("rollouts: deterministic per seed, rewards match distances") {
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  PpoTrainer a = make_trainer(c2, 1, 11);
  PpoTrainer b = make_trainer(c2, 1, 11);
  const RolloutBatch ba = a.collect_rollouts(128);
  const RolloutBatch bb = b.collect_rollouts(128);
  CHECK(ba.obs == bb.obs);
  CHECK(ba.actions == bb.actions);
  CHECK(ba.rewards == bb.rewards);
  CHECK((ba.rewards + ba.distances).cwiseAbs().maxCoeff() == 0.0);

  PpoTrainer c = make_trainer(c2, 1, 12);
  const RolloutBatch bc = c.collect_rollouts(128);
  CHECK(ba.actions != bc.actions);
}

TEST_CASE("rollouts: single trajectory always replays it") {
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  const auto trajs = record_set(c2, 1, 7);
  PpoConfig cfg;
  cfg.seed = 5;
  PpoTrainer tr(c2, c2, EnvConfig::defaults(), trajs, cfg);
  const RolloutBatch b = tr.collect_rollouts(150);
  // the expert posture after each reset must match the single trajectory:
  // check via the observation at episode starts (sin q of expert joint 1)
  for (int t = 1; t < b.size(); ++t) {
    if (b.dones[t - 1] > 0.5) {
      CHECK(b.obs(0, t) == 0.0);  // expert back at zero pose
    }
  }
}

TEST_CASE("rollouts: multiple trajectories all get sampled") {
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  const auto trajs = record_set(c2, 4, 7);
  PpoConfig cfg;
  cfg.seed = 6;
  PpoTrainer tr(c2, c2, EnvConfig::defaults(), trajs, cfg);
  // episode ends every 50 steps; the first observation after each reset
  // reflects the sampled trajectory's first target; count distinct episodes
  // via distances at step 5 of each episode
  const RolloutBatch b = tr.collect_rollouts(50 * 12);
  std::set<double> ep_marks;
  int step_in_ep = 0;
  for (int t = 0; t < b.size(); ++t) {
    if (step_in_ep == 5) ep_marks.insert(b.distances[t]);
    ++step_in_ep;
    if (b.dones[t] > 0.5) step_in_ep = 0;
  }
  CHECK(ep_marks.size() >= 3);  // more than one distinct trajectory seen
}

TEST_CASE("ppo surrogate with unchanged policy equals the mean advantage") {
  // with ratio = 1 the clipped objective is exactly the advantage; the
  // policy loss reported on the first epoch of an update with zero learning
  // rate must equal -mean(A) = 0 after normalization
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  PpoConfig cfg;
  cfg.lr_policy = 0.0;
  cfg.lr_value = 0.0;
  cfg.update_epochs = 1;
  cfg.minibatch_size = 64;
  PpoTrainer tr = make_trainer(c2, 1, 21, cfg);
  RolloutBatch batch = tr.collect_rollouts(256);
  compute_gae(batch, cfg.gamma, cfg.gae_lambda);
  const UpdateDiagnostics diag = tr.ppo_update(batch);
  // normalized advantages have zero mean, so the surrogate loss vanishes
  CHECK(std::abs(diag.policy_loss) < 1e-9);
  CHECK(diag.clip_fraction == 0.0);
  CHECK(std::abs(diag.approx_kl) < 1e-12);
}

TEST_CASE("clip arithmetic") {
  // direct check of the clipped-surrogate branch values
  const double eps = 0.2;
  auto clipped_obj = [&](double ratio, double adv) {
    const double s1 = ratio * adv;
    const double s2 = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
    return std::min(s1, s2);
  };
  CHECK(clipped_obj(1.5, 2.0) == doctest::Approx(1.2 * 2.0));
  CHECK(clipped_obj(1.5, -2.0) == doctest::Approx(1.5 * -2.0));
  CHECK(clipped_obj(0.5, 2.0) == doctest::Approx(0.5 * 2.0));
  CHECK(clipped_obj(1.0, 2.0) == doctest::Approx(2.0));
}

TEST_CASE("learning rate zero leaves parameters unchanged, diagnostics flow") {
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  PpoConfig cfg;
  cfg.lr_policy = 0.0;
  cfg.lr_value = 0.0;
  cfg.update_epochs = 2;
  PpoTrainer tr = make_trainer(c2, 1, 31, cfg);
  const Eigen::VectorXd p0 = tr.policy().mean_net.get_params();
  const Eigen::VectorXd v0 = tr.value_fn().net.get_params();
  RolloutBatch batch = tr.collect_rollouts(128);
  compute_gae(batch, cfg.gamma, cfg.gae_lambda);
  const UpdateDiagnostics diag = tr.ppo_update(batch);
  CHECK(tr.policy().mean_net.get_params() == p0);
  CHECK(tr.value_fn().net.get_params() == v0);
  CHECK(diag.value_loss >= 0.0);
  CHECK(diag.clip_fraction >= 0.0);
  CHECK(diag.clip_fraction <= 1.0);
}

TEST_CASE("evaluate: zero policy equals the frozen-learner distance series") {
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  const auto trajs = record_set(c2, 1, 9);
  PpoConfig cfg;
  cfg.seed = 3;
  PpoTrainer tr(c2, c2, EnvConfig::defaults(), trajs, cfg);

  Policy zero = tr.policy();
  for (auto& l : zero.mean_net.layers()) {
    l.W.setZero();
    l.b.setZero();
  }
  ImitationEnv env(c2, c2, EnvConfig::defaults());
  const auto series = evaluate_policy(zero, env, trajs[0]);
  REQUIRE(series.size() == 50);

  ImitationEnv ref_env(c2, c2, EnvConfig::defaults());
  ref_env.set_trajectory(trajs[0]);
  ref_env.reset();
  const Eigen::VectorXd zero_a = Eigen::VectorXd::Zero(2);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const StepResult r = ref_env.step(zero_a);
    CHECK(series[k] == r.distance);
  }
}

TEST_CASE("config validation") {
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  PpoConfig bad_gamma;
  bad_gamma.gamma = 1.0;
  CHECK_THROWS_AS(PpoTrainer(c2, c2, EnvConfig::defaults(),
                             record_set(c2, 1, 7), bad_gamma),
                  std::invalid_argument);
  PpoConfig bad_clip;
  bad_clip.clip = 0.0;
  CHECK_THROWS_AS(PpoTrainer(c2, c2, EnvConfig::defaults(),
                             record_set(c2, 1, 7), bad_clip),
                  std::invalid_argument);
  PpoConfig ok;
  CHECK_THROWS_AS(PpoTrainer(c2, c2, EnvConfig::defaults(), {}, ok),
                  std::invalid_argument);
}

TEST_CASE("policy checkpoint round trip") {
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  PpoTrainer tr = make_trainer(c2, 1, 41);
  const char* tmp = "/tmp/emdist_policy_ck.json";
  save_policy_checkpoint(tmp, tr.policy(), tr.value_fn(), c2, c2,
                         EnvConfig::defaults());
  const PolicyCheckpoint ck = load_policy_checkpoint(tmp);
  CHECK(ck.policy.mean_net.get_params() ==
        tr.policy().mean_net.get_params());
  CHECK(ck.policy.log_std == tr.policy().log_std);
  CHECK(ck.value.net.get_params() == tr.value_fn().net.get_params());
  CHECK(ck.expert.num_links() == 2);
  CHECK(ck.env_cfg.distance.weights.alpha_rot == 1.0);
  CHECK(ck.env_cfg.distance.weights.alpha_v == 0.001);
  std::remove(tmp);
}

TEST_CASE("short training run improves the return") {
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  PpoConfig cfg;
  cfg.rollout_steps = 512;
  cfg.total_steps = 512 * 12;
  cfg.seed = 8;
  PpoTrainer tr = make_trainer(c2, 1, 8, cfg);
  const auto curve = tr.train();
  REQUIRE(curve.size() == 12);
  // average of the last three updates beats the first update
  const double early = curve[0].mean_distance;
  const double late = (curve[9].mean_distance + curve[10].mean_distance +
                       curve[11].mean_distance) /
                      3.0;
  CHECK(late < early);
}

TEST_CASE("training is bit-reproducible per seed") {
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  auto run = [&]() {
    PpoConfig cfg;
    cfg.rollout_steps = 256;
    cfg.total_steps = 512;
    cfg.seed = 13;
    PpoTrainer tr = make_trainer(c2, 1, 13, cfg);
    const auto curve = tr.train();
    return std::make_pair(tr.policy().mean_net.get_params(), curve);
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.first == b.first);
  REQUIRE(a.second.size() == b.second.size());
  for (std::size_t i = 0; i < a.second.size(); ++i) {
    CHECK(a.second[i].mean_return == b.second[i].mean_return);
    CHECK(a.second[i].mean_distance == b.second[i].mean_distance);
  }
}

}  // TEST_SUITE
