#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "emdist/autodiff.hpp"
#include "emdist/distance.hpp"
#include "emdist/embodiment.hpp"

namespace emdist {

struct DistanceGradient {
  Eigen::VectorXd grad;  // d distance / d learner angle, full joint vector
  double value = 0.0;
};

/// Gradient of the embodiment distance with respect to the learner's joint
/// angles. Usable with static or softmin correspondence; in binary mode the
/// assignment is held constant at its current value (subgradient through the
/// active pairs). Throws on non-finite results instead of zeroing them.
DistanceGradient grad_distance(const EmbodimentSpec& expert,
                               const EmbodimentSpec& learner,
                               const JointState& expert_state,
                               const JointState& learner_state,
                               const DistanceConfig& cfg);

/// Same, with everything precomputed for inner-loop use: expert state fixed,
/// specs already normalized, static correspondence resolved.
DistanceGradient grad_distance_prepared(const EmbodimentState& expert_state,
                                        const ChainGeometry& learner_geo,
                                        const Eigen::VectorXd& q_learner,
                                        const Eigen::VectorXd& qdot_learner,
                                        const DistanceConfig& cfg,
                                        const Eigen::MatrixXd* static_W);

struct MlpGradient {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;
  double loss = 0.0;
};

class Mlp;

/// Loss callback for grad_mlp: receives the tape and the network outputs for
/// the whole batch (one column per sample) and returns the scalar loss.
using TapeLoss =
    std::function<Var(Tape&, const Eigen::Matrix<Var, Eigen::Dynamic,
                                                 Eigen::Dynamic>&)>;

/// Reverse-mode gradient of an arbitrary scalar loss of the network outputs
/// with respect to all network parameters. Aborts with diagnostics when the
/// loss or any gradient entry is non-finite.
MlpGradient grad_mlp(const Mlp& net, const Eigen::MatrixXd& batch_inputs,
                     const TapeLoss& loss);

}  // namespace emdist
