#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <utility>

namespace emdist {

template <typename S> using Vec3 = Eigen::Matrix<S, 3, 1>;
template <typename S> using Mat3 = Eigen::Matrix<S, 3, 3>;
template <typename S> using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S> using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Pose of a frame relative to the base frame: rotation plus origin.
template <typename S>
struct FrameT {
  Mat3<S> R = Mat3<S>::Identity();
  Vec3<S> p = Vec3<S>::Zero();
};
using Frame = FrameT<double>;

/// Body velocity of a frame, angular part first.
template <typename S>
struct TwistT {
  Vec3<S> omega = Vec3<S>::Zero();
  Vec3<S> v = Vec3<S>::Zero();
};
using Twist = TwistT<double>;

/// Revolute joint axis: unit direction and a point the axis passes through,
/// both in base-frame coordinates at the zero configuration.
struct Screw {
  Eigen::Vector3d axis_dir = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d axis_point = Eigen::Vector3d::Zero();
};

template <typename S>
Mat3<S> skew(const Vec3<S>& w) {
  Mat3<S> m;
  m << S(0), -w[2], w[1],
       w[2], S(0), -w[0],
      -w[1], w[0], S(0);
  return m;
}

template <typename S>
FrameT<S> frame_cast(const Frame& f) {
  return {f.R.template cast<S>(), f.p.template cast<S>()};
}

template <typename S>
TwistT<S> twist_cast(const Twist& t) {
  return {t.omega.template cast<S>(), t.v.template cast<S>()};
}

template <typename S>
FrameT<S> compose(const FrameT<S>& a, const FrameT<S>& b) {
  return {a.R * b.R, a.p + a.R * b.p};
}

template <typename S>
FrameT<S> inverse(const FrameT<S>& f) {
  Mat3<S> rt = f.R.transpose();
  return {rt, -(rt * f.p)};
}

/// Closed-form exponential of a revolute screw: rotation by theta about the
/// screw axis. theta = 0 yields the identity frame.
template <typename S>
FrameT<S> screw_exp(const Screw& s, const S& theta) {
  using std::sin;
  using std::cos;
  const Mat3<S> nh = skew<S>(s.axis_dir.cast<S>().eval());
  const S st = sin(theta);
  const S ct = cos(theta);
  FrameT<S> out;
  out.R = Mat3<S>::Identity() + st * nh + (S(1) - ct) * (nh * nh);
  // rotation about an axis through axis_point: x -> R (x - c) + c
  out.p = (Mat3<S>::Identity() - out.R) * s.axis_point.cast<S>();
  return out;
}

/// Twist transport: Ad_T(V) = [R w, p x R w + R v].
template <typename S>
TwistT<S> adjoint(const FrameT<S>& t, const TwistT<S>& v) {
  Vec3<S> rw = t.R * v.omega;
  return {rw, t.p.cross(rw) + t.R * v.v};
}

/// Base-frame angular velocity and origin velocity of a frame moving with the
/// given body twist.
template <typename S>
std::pair<Vec3<S>, Vec3<S>> spatial_velocity(const FrameT<S>& t,
                                             const TwistT<S>& body) {
  return {t.R * body.omega, t.R * body.v};
}

inline Vector6d twist_to_vec(const Twist& t) {
  Vector6d v;
  v << t.omega, t.v;
  return v;
}

inline Twist vec_to_twist(const Vector6d& v) {
  return {v.head<3>(), v.tail<3>()};
}

/// 6x6 matrix form of the adjoint map, acting on stacked (omega, v) twists.
inline Matrix6d adjoint_matrix(const Frame& t) {
  Matrix6d m = Matrix6d::Zero();
  m.topLeftCorner<3, 3>() = t.R;
  m.bottomLeftCorner<3, 3>() = skew<double>(t.p) * t.R;
  m.bottomRightCorner<3, 3>() = t.R;
  return m;
}

/// 6x6 matrix of the Lie bracket ad_V, acting on stacked twists.
inline Matrix6d ad_matrix(const Vector6d& v) {
  Matrix6d m = Matrix6d::Zero();
  const Mat3<double> w = skew<double>(Eigen::Vector3d(v.head<3>()));
  m.topLeftCorner<3, 3>() = w;
  m.bottomLeftCorner<3, 3>() = skew<double>(Eigen::Vector3d(v.tail<3>()));
  m.bottomRightCorner<3, 3>() = w;
  return m;
}

/// Exponential of a general unit-rotation twist (|omega| = 1) scaled by theta.
inline Frame twist_exp(const Vector6d& axis, double theta) {
  const Eigen::Vector3d w = axis.head<3>();
  const Eigen::Vector3d v = axis.tail<3>();
  const Mat3<double> wh = skew<double>(w);
  const double st = std::sin(theta);
  const double ct = std::cos(theta);
  Frame out;
  out.R = Mat3<double>::Identity() + st * wh + (1.0 - ct) * (wh * wh);
  out.p = (Mat3<double>::Identity() * theta + (1.0 - ct) * wh +
           (theta - st) * (wh * wh)) *
          v;
  return out;
}

}  // namespace emdist
