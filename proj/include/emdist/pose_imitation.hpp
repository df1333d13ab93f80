#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "emdist/distance.hpp"
#include "emdist/embodiment.hpp"
#include "emdist/mlp.hpp"

namespace emdist {

struct SolveOptions {
  int max_iters = 300;
  double step = 1.0;
  double grad_tol = 1e-9;
  double min_step = 1e-12;
  std::uint64_t seed = 0;  // used when no initial guess is given
};

struct SolveResult {
  Eigen::VectorXd q;  // full learner joint vector, locked joints at zero
  double distance = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Gradient descent on the learner angles with backtracking halving; the
/// distance never increases across accepted iterations. Starts from `init`
/// when given, otherwise from a seeded uniform pose.
SolveResult solve_pose(const EmbodimentSpec& expert,
                       const EmbodimentSpec& learner,
                       const Eigen::VectorXd& q_expert,
                       const DistanceConfig& cfg,
                       const SolveOptions& opt = {},
                       const Eigen::VectorXd* init = nullptr);

/// N i.i.d. uniform joint samples in [-pi, pi], one sample per column.
/// Locked joints come out as zero.
Eigen::MatrixXd generate_dataset(const EmbodimentSpec& spec, int n,
                                 std::uint64_t seed);

struct TrainConfig {
  int dataset_size = 1024;
  int minibatches = 32;
  int epochs = 120;
  double learning_rate = 0.2;
  double validation_fraction = 0.125;
  int backtracks = 4;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {32, 32, 32};
  double lrelu_slope = 0.01;

  void validate() const {
    if (dataset_size < 1 || minibatches < 1 || dataset_size < minibatches)
      throw std::invalid_argument(
          "train config: need dataset_size >= minibatches >= 1");
    if (epochs < 0) throw std::invalid_argument("train config: epochs < 0");
  }
};

struct TrainResult {
  Mlp net;
  std::vector<double> train_curve;  // mean minibatch loss per epoch
  std::vector<double> val_curve;    // mean validation distance per epoch
  double baseline_val_distance = 0.0;  // untrained network on validation set
};

/// Trains the expert-to-learner joint map by minibatch SGD on the embodiment
/// distance. The network outputs only unlocked learner joints; locked ones
/// are injected as zero before kinematics.
TrainResult train_pose_map(const EmbodimentSpec& expert,
                           const EmbodimentSpec& learner,
                           const DistanceConfig& cfg, const TrainConfig& tc);

struct EvalStats {
  double mean_distance = 0.0;
  double max_distance = 0.0;
  Eigen::VectorXd per_sample;
};

/// Mean/max embodiment distance of the mapped poses over a test set
/// (columns = expert joint vectors).
EvalStats evaluate_pose_map(const Mlp& net, const EmbodimentSpec& expert,
                            const EmbodimentSpec& learner,
                            const DistanceConfig& cfg,
                            const Eigen::MatrixXd& test_set);

/// Expands unlocked-joint values to the full joint vector, zeros elsewhere.
Eigen::VectorXd inject_locked(const EmbodimentSpec& spec,
                              const Eigen::VectorXd& unlocked_values);

}  // namespace emdist
