#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "emdist/embodiment.hpp"

namespace emdist {

/// Rigid-body model of a chain: uniform-rod links (optionally thickened to a
/// cylinder so spatial chains keep a positive-definite mass matrix), viscous
/// joint friction, no gravity.
struct DynamicsModel {
  EmbodimentSpec spec;  // normalized
  double friction = 0.05;        // N*m*s/rad, viscous
  double rod_radius_ratio = 0.0; // cylinder radius as a fraction of length;
                                 // negative = pick automatically

  ChainGeometry geo;
  std::vector<Frame> home_rel;            // frame i-1 -> frame i at zero pose
  std::vector<Vector6d> axis_local;       // joint axis in link coordinates
  std::vector<Matrix6d> spatial_inertia;  // in link-frame coordinates

  /// The automatic radius is 0 for planar (all-z-axis) chains, where the
  /// ideal thin rod already yields a positive-definite mass matrix, and 0.02
  /// for spatial chains, where a zero axial moment would make it singular.
  explicit DynamicsModel(const EmbodimentSpec& s, double friction_coeff = 0.05,
                         double radius_ratio = -1.0);

  int dof() const { return spec.num_links(); }
};

/// Joint torques that realize the given accelerations (gravity off, friction
/// excluded); recursive Newton-Euler over body twists.
Eigen::VectorXd inverse_dynamics(const DynamicsModel& model,
                                 const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qdot,
                                 const Eigen::VectorXd& qddot);

Eigen::MatrixXd mass_matrix(const DynamicsModel& model,
                            const Eigen::VectorXd& q);

double kinetic_energy(const DynamicsModel& model, const Eigen::VectorXd& q,
                      const Eigen::VectorXd& qdot);

/// Accelerations produced by the given torques, including friction; locked
/// joints are held at zero.
Eigen::VectorXd forward_dynamics(const DynamicsModel& model,
                                 const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qdot,
                                 const Eigen::VectorXd& tau);

/// Advances the state by dt with fixed-substep RK4. Torques are clamped to
/// the per-joint limits and held constant over the substeps; angles wrap
/// into [-pi, pi]. Throws if the state leaves the finite range.
JointState step_dynamics(const DynamicsModel& model, const JointState& js,
                         const Eigen::VectorXd& tau, double dt, int substeps);

/// Joint trajectory sampled on a uniform time grid; row k is the state at
/// time k * dt.
struct Trajectory {
  double dt = 0.1;
  std::string spec_name;
  Eigen::MatrixXd q;     // (steps + 1) x dof
  Eigen::MatrixXd qdot;  // (steps + 1) x dof

  int steps() const { return static_cast<int>(q.rows()) - 1; }
  int dof() const { return static_cast<int>(q.cols()); }
  double duration() const { return steps() * dt; }
  JointState at(int k) const {
    return {q.row(k).transpose(), qdot.row(k).transpose()};
  }
};

void save_trajectory(const Trajectory& traj, const std::string& path);
Trajectory load_trajectory(const std::string& path);

/// Per-joint PID gains on the commanded acceleration; the controller applies
/// them through the mass matrix, so kp and kd shape every joint identically
/// (critical damping at kd = 2 sqrt(kp)).
struct PidGains {
  double kp = 3.0;
  double ki = 0.0;
  double kd = 3.5;
};

struct RecordedExpert {
  Trajectory traj;
  Eigen::MatrixXd tau;  // steps x dof, the torque held over each interval
  bool settled = false;
  double final_error = 0.0;
};

/// Records a trajectory by driving each joint toward its goal with a PID
/// error law decoupled through the mass matrix, starting from the zero pose.
/// The controller runs at the trajectory rate (torque held constant across
/// substeps), so replaying the returned torques reproduces the trajectory
/// exactly.
RecordedExpert record_expert(const DynamicsModel& model,
                             const Eigen::VectorXd& goal_q,
                             const PidGains& gains, double duration, double dt,
                             int substeps = 10);

}  // namespace emdist
