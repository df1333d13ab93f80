#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "emdist/pose_imitation.hpp"
#include "emdist/rng.hpp"

using namespace emdist;

namespace {

DistanceConfig rotation_only_static() {
  DistanceConfig cfg;
  cfg.weights = {0.0, 1.0, 0.0, 0.0};
  cfg.mode = CorrespondenceMode::kStatic;
  return cfg;
}

}  // namespace

TEST_SUITE("pose_imitation") {

TEST_CASE("solve_pose: init at the optimum converges immediately") {
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  Eigen::VectorXd q(2);
  q << 1.1, -0.6;
  const SolveResult res =
      solve_pose(c2, c2, q, rotation_only_static(), {}, &q);
  CHECK(res.converged);
  CHECK(res.iterations == 0);
  CHECK(res.distance < 1e-12);
}

TEST_CASE("solve_pose: random inits reach the single minimum") {
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  Eigen::VectorXd q(2);
  q << 1.5, -1.5;
  int good = 0;
  const int trials = 25;
  for (int s = 0; s < trials; ++s) {
    SolveOptions opt;
    opt.seed = 1000 + s;
    opt.max_iters = 400;
    const SolveResult res = solve_pose(c2, c2, q, rotation_only_static(), opt);
    if (res.distance < 1e-3) ++good;
  }
  CHECK(good >= trials * 9 / 10);
}

TEST_CASE("solve_pose: descent is monotone") {
  const EmbodimentSpec expert = planar_chain({0.4, 0.3, 0.3});
  const EmbodimentSpec learner = planar_chain({0.5, 0.5});
  Eigen::VectorXd q(3);
  q << 1.0, -0.5, 0.8;
  // instrument by running the solver twice with shrinking budgets
  double last = 1e100;
  for (int iters : {1, 3, 10, 40, 160}) {
    SolveOptions opt;
    opt.seed = 7;
    opt.max_iters = iters;
    const SolveResult res =
        solve_pose(expert, learner, q, rotation_only_static(), opt);
    CHECK(res.distance <= last + 1e-15);
    last = res.distance;
  }
}

TEST_CASE("solve_pose: state-dependent weighting admits secondary minima") {
  // with the translation-heavy weights and the bidirectional assignment the
  // landscape has several basins; different inits settle in different ones
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  Eigen::VectorXd q(2);
  q << 1.5, -1.5;
  DistanceConfig cfg;
  cfg.weights = {1.5, 1.0, 0.0, 0.0};
  cfg.mode = CorrespondenceMode::kBinaryBidirectional;
  std::set<long> basins;
  for (int s = 0; s < 24; ++s) {
    SolveOptions opt;
    opt.seed = 40 + s;
    opt.max_iters = 500;
    const SolveResult res = solve_pose(c2, c2, q, cfg, opt);
    basins.insert(std::lround(res.distance * 1e3));
  }
  CHECK(basins.size() >= 2);
}

TEST_CASE("solve_pose: locked learner joints stay at zero") {
  const EmbodimentSpec expert = planar_chain({0.5, 0.5});
  const EmbodimentSpec learner = lock_joints(planar_chain({0.5, 0.5}), {2});
  Eigen::VectorXd q(2);
  q << 0.9, 0.7;
  SolveOptions opt;
  opt.seed = 3;
  const SolveResult res =
      solve_pose(expert, learner, q, rotation_only_static(), opt);
  CHECK(res.q[1] == 0.0);
  CHECK(res.q.size() == 2);
}

TEST_CASE("generate_dataset: reproducible, in-range, seed-sensitive") {
  const EmbodimentSpec c3 = planar_chain({0.4, 0.3, 0.3});
  const Eigen::MatrixXd a = generate_dataset(c3, 1024, 9);
  const Eigen::MatrixXd b = generate_dataset(c3, 1024, 9);
  const Eigen::MatrixXd c = generate_dataset(c3, 1024, 10);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a.rows() == 3);
  CHECK(a.cols() == 1024);
  CHECK((a.array().abs() <= M_PI).all());

  const Eigen::MatrixXd one = generate_dataset(c3, 1, 4);
  CHECK(one.cols() == 1);
  CHECK_THROWS_AS(generate_dataset(c3, 0, 4), std::invalid_argument);

  // locked joints sample as zero
  const EmbodimentSpec locked = lock_joints(c3, {2});
  const Eigen::MatrixXd d = generate_dataset(locked, 16, 9);
  CHECK((d.row(1).array() == 0.0).all());
}

TEST_CASE("train_pose_map: zero epochs returns the initialized network") {
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  TrainConfig tc;
  tc.dataset_size = 32;
  tc.minibatches = 4;
  tc.epochs = 0;
  tc.seed = 5;
  const TrainResult r = train_pose_map(c2, c2, rotation_only_static(), tc);
  CHECK(r.train_curve.empty());
  Rng ref_rng(derive_seed(5, 0));
  MlpConfig mc;
  mc.input = 2;
  mc.hidden = tc.hidden;
  mc.output = 2;
  const Mlp ref(mc, ref_rng);
  CHECK(r.net.get_params() == ref.get_params());
}

TEST_CASE("train_pose_map: learning rate zero changes nothing") {
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  TrainConfig tc;
  tc.dataset_size = 16;
  tc.minibatches = 4;
  tc.epochs = 1;
  tc.learning_rate = 0.0;
  tc.backtracks = 0;
  tc.seed = 6;
  const TrainResult r = train_pose_map(c2, c2, rotation_only_static(), tc);
  TrainConfig tc0 = tc;
  tc0.epochs = 0;
  const TrainResult r0 = train_pose_map(c2, c2, rotation_only_static(), tc0);
  CHECK(r.net.get_params() == r0.net.get_params());
}

TEST_CASE("train_pose_map: identical pair trains well below baseline") {
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  TrainConfig tc;
  tc.dataset_size = 256;
  tc.minibatches = 8;
  tc.epochs = 40;
  tc.seed = 1;
  const TrainResult r = train_pose_map(c2, c2, rotation_only_static(), tc);
  REQUIRE(!r.val_curve.empty());
  CHECK(r.val_curve.back() < 0.10 * r.baseline_val_distance);
}

TEST_CASE("train_pose_map is bit-reproducible per seed") {
  const EmbodimentSpec expert = planar_chain({0.4, 0.3, 0.3});
  const EmbodimentSpec learner = planar_chain({0.5, 0.5});
  TrainConfig tc;
  tc.dataset_size = 32;
  tc.minibatches = 4;
  tc.epochs = 2;
  tc.seed = 12;
  const TrainResult a = train_pose_map(expert, learner, rotation_only_static(), tc);
  const TrainResult b = train_pose_map(expert, learner, rotation_only_static(), tc);
  CHECK(a.net.get_params() == b.net.get_params());
  REQUIRE(a.train_curve.size() == b.train_curve.size());
  for (std::size_t i = 0; i < a.train_curve.size(); ++i)
    CHECK(a.train_curve[i] == b.train_curve[i]);
}

TEST_CASE("evaluate_pose_map: stats and error paths") {
  const EmbodimentSpec c2 = planar_chain({0.5, 0.5});
  TrainConfig tc;
  tc.dataset_size = 16;
  tc.minibatches = 4;
  tc.epochs = 0;
  tc.seed = 2;
  const TrainResult r = train_pose_map(c2, c2, rotation_only_static(), tc);

  const Eigen::MatrixXd test = generate_dataset(c2, 64, 1234);
  const EvalStats stats =
      evaluate_pose_map(r.net, c2, c2, rotation_only_static(), test);
  CHECK(stats.per_sample.size() == 64);
  CHECK(stats.mean_distance > 0.0);
  CHECK(stats.max_distance >= stats.mean_distance);

  // untrained network sits at the random-pose baseline, Monte-Carlo check
  Rng rng(99);
  double base = 0.0;
  const int n_mc = 1000;
  const EmbodimentSpec unit = normalize(c2);
  for (int k = 0; k < n_mc; ++k) {
    const JointState je{rng.uniform_vec(2, -M_PI, M_PI),
                        Eigen::VectorXd::Zero(2)};
    const JointState jl{rng.uniform_vec(2, -M_PI, M_PI),
                        Eigen::VectorXd::Zero(2)};
    base += embodiment_distance(unit, unit, je, jl, rotation_only_static());
  }
  base /= n_mc;
  CHECK(stats.mean_distance == doctest::Approx(base).epsilon(0.25));

  CHECK_THROWS_AS(
      evaluate_pose_map(r.net, c2, c2, rotation_only_static(),
                        Eigen::MatrixXd(2, 0)),
      std::invalid_argument);
}

TEST_CASE("inject_locked") {
  const EmbodimentSpec locked = lock_joints(planar_chain({0.2, 0.3, 0.5}), {2});
  Eigen::VectorXd u(2);
  u << 0.4, -0.9;
  const Eigen::VectorXd full = inject_locked(locked, u);
  CHECK(full.size() == 3);
  CHECK(full[0] == 0.4);
  CHECK(full[1] == 0.0);
  CHECK(full[2] == -0.9);
  CHECK_THROWS_AS(inject_locked(locked, Eigen::VectorXd::Zero(3)),
                  std::invalid_argument);
}

}  // TEST_SUITE
