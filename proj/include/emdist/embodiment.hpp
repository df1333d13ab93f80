#pragma once

#include <Eigen/Dense>

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "emdist/se3.hpp"

namespace emdist {

/// One link of a serial chain. The frame sits at arc length `frame_offset`
/// from the link's own joint, with its x-axis along the link.
struct LinkSpec {
  double length = 1.0;
  double frame_offset = 0.5;
  Eigen::Vector3d joint_axis = Eigen::Vector3d::UnitZ();
  double mass = 1.0;
  double torque_limit = 5.0;
};

/// Serial kinematic chain with revolute joints. Joint indices are 1-based
/// throughout; `locked` joints are pinned to angle zero.
struct EmbodimentSpec {
  std::string name;
  std::vector<LinkSpec> links;
  std::set<int> locked;

  int num_links() const { return static_cast<int>(links.size()); }
  int effective_dof() const {
    return num_links() - static_cast<int>(locked.size());
  }
  bool is_locked(int joint) const { return locked.count(joint) > 0; }
  double total_length() const {
    double sum = 0.0;
    for (const auto& l : links) sum += l.length;
    return sum;
  }
  bool is_normalized(double tol = 1e-9) const {
    return std::abs(total_length() - 1.0) <= tol;
  }
  std::vector<int> unlocked_joints() const {
    std::vector<int> out;
    for (int i = 1; i <= num_links(); ++i)
      if (!is_locked(i)) out.push_back(i);
    return out;
  }
  void validate() const;
};

/// Rescales all lengths and offsets by the chain length, so the returned
/// chain has total length 1. A chain already within rounding of unit length
/// is returned unchanged, which makes the operation exactly idempotent.
EmbodimentSpec normalize(const EmbodimentSpec& spec);

EmbodimentSpec lock_joints(const EmbodimentSpec& spec,
                           const std::set<int>& which);

/// Planar chain: all joint axes +z, frames at mid-link. Lengths need not be
/// normalized.
EmbodimentSpec planar_chain(const std::vector<double>& lengths,
                            const std::string& name = "planar");

/// 7-link chain with alternating z/y joint axes and equal link lengths; the
/// stock lockable demo arm for spatial experiments.
EmbodimentSpec demo_arm_7dof();

// JSON spec files: {name, links:[{length, offset, axis:[x,y,z], mass,
// torque_limit}], locked:[...]}. Field names are fixed.
EmbodimentSpec spec_from_json_string(const std::string& text);
std::string spec_to_json_string(const EmbodimentSpec& spec);
EmbodimentSpec load_spec(const std::string& path);
void save_spec(const EmbodimentSpec& spec, const std::string& path);

inline double wrap_angle(double a) {
  const double w = std::remainder(a, 2.0 * M_PI);
  return w;
}

struct JointState {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
};

/// Wraps angles into [-pi, pi] and validates dimensions and locked joints
/// (which must come in as exactly zero angle and velocity).
JointState make_joint_state(const EmbodimentSpec& spec, Eigen::VectorXd q,
                            Eigen::VectorXd qdot);

inline JointState zero_joint_state(const EmbodimentSpec& spec) {
  return {Eigen::VectorXd::Zero(spec.num_links()),
          Eigen::VectorXd::Zero(spec.num_links())};
}

template <typename S>
struct LinkStateT {
  FrameT<S> frame;
  TwistT<S> twist;
};

template <typename S>
struct EmbodimentStateT {
  std::vector<LinkStateT<S>> links;
  bool normalized = true;
  int size() const { return static_cast<int>(links.size()); }
};
using EmbodimentState = EmbodimentStateT<double>;

template <typename S>
struct CandidatePointStateT {
  std::vector<Vec3<S>> x;
  std::vector<Vec3<S>> v;
};
using CandidatePointState = CandidatePointStateT<double>;

/// Constant kinematic data of a chain: home screws in base coordinates, home
/// frames, and each joint's axis expressed in its own link frame.
struct ChainGeometry {
  std::vector<Screw> screws;       // joint axes at the zero configuration
  std::vector<Frame> home;         // link frames at the zero configuration
  std::vector<Twist> axis_local;   // joint axis in link-frame coordinates
  int dof() const { return static_cast<int>(screws.size()); }
};

inline ChainGeometry chain_geometry(const EmbodimentSpec& spec) {
  ChainGeometry geo;
  geo.screws.reserve(spec.links.size());
  geo.home.reserve(spec.links.size());
  double along = 0.0;  // joint i sits at the tip of link i-1
  for (const auto& link : spec.links) {
    Screw s;
    s.axis_dir = link.joint_axis.normalized();
    s.axis_point = Eigen::Vector3d(along, 0.0, 0.0);
    geo.screws.push_back(s);
    Frame home;
    home.p = Eigen::Vector3d(along + link.frame_offset, 0.0, 0.0);
    geo.home.push_back(home);
    Twist axis{s.axis_dir, -s.axis_dir.cross(s.axis_point)};
    geo.axis_local.push_back(adjoint(inverse(home), axis));
    along += link.length;
  }
  return geo;
}

/// Product-of-exponentials forward kinematics: frame i is the composition of
/// the first i joint rotations applied to that link's home frame. Twists are
/// left zero.
template <typename S>
EmbodimentStateT<S> forward_kinematics(const ChainGeometry& geo,
                                       const VecX<S>& q) {
  if (q.size() != geo.dof())
    throw std::invalid_argument("forward_kinematics: joint count mismatch");
  EmbodimentStateT<S> state;
  state.links.resize(geo.dof());
  FrameT<S> running;  // identity
  for (int i = 0; i < geo.dof(); ++i) {
    running = compose(running, screw_exp<S>(geo.screws[i], q[i]));
    state.links[i].frame = compose(running, frame_cast<S>(geo.home[i]));
  }
  return state;
}

/// Frames plus body twists, built by the standard recursion
/// V_i = Ad_{C_i^-1}(V_{i-1}) + A_i qdot_i with C_i the relative frame.
template <typename S>
EmbodimentStateT<S> chain_twists(const ChainGeometry& geo, const VecX<S>& q,
                                 const VecX<S>& qdot) {
  if (qdot.size() != geo.dof())
    throw std::invalid_argument("chain_twists: velocity count mismatch");
  EmbodimentStateT<S> state = forward_kinematics(geo, q);
  TwistT<S> prev;
  FrameT<S> prev_frame;
  for (int i = 0; i < geo.dof(); ++i) {
    const FrameT<S> rel =
        compose(inverse(prev_frame), state.links[i].frame);
    TwistT<S> vi = adjoint(inverse(rel), prev);
    const TwistT<S> axis = twist_cast<S>(geo.axis_local[i]);
    vi.omega += axis.omega * qdot[i];
    vi.v += axis.v * qdot[i];
    state.links[i].twist = vi;
    prev = vi;
    prev_frame = state.links[i].frame;
  }
  return state;
}

template <typename S>
EmbodimentStateT<S> forward_kinematics(const EmbodimentSpec& spec,
                                       const VecX<S>& q) {
  return forward_kinematics(chain_geometry(spec), q);
}

template <typename S>
EmbodimentStateT<S> chain_twists(const EmbodimentSpec& spec, const VecX<S>& q,
                                 const VecX<S>& qdot) {
  return chain_twists(chain_geometry(spec), q, qdot);
}

/// Normalizes the spec, then computes frames and twists at the given state.
inline EmbodimentState embodiment_state(const EmbodimentSpec& spec,
                                        const JointState& js) {
  const EmbodimentSpec unit = normalize(spec);
  if (js.q.size() != unit.num_links() || js.qdot.size() != unit.num_links())
    throw std::invalid_argument("embodiment_state: joint count mismatch");
  EmbodimentState s = chain_twists(chain_geometry(unit),
                                   Eigen::VectorXd(js.q),
                                   Eigen::VectorXd(js.qdot));
  s.normalized = true;
  return s;
}

/// Frame origins and their base-frame velocities; the rotation-free view of
/// an embodiment.
template <typename S>
CandidatePointStateT<S> candidate_points(const EmbodimentStateT<S>& state) {
  if (state.links.empty())
    throw std::invalid_argument("candidate_points: empty embodiment");
  CandidatePointStateT<S> out;
  out.x.reserve(state.links.size());
  out.v.reserve(state.links.size());
  for (const auto& link : state.links) {
    auto [omega_s, p_dot] = spatial_velocity(link.frame, link.twist);
    (void)omega_s;
    out.x.push_back(link.frame.p);
    out.v.push_back(p_dot);
  }
  return out;
}

}  // namespace emdist
