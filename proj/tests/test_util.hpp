#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>

#include "emdist/embodiment.hpp"
#include "emdist/rng.hpp"
#include "emdist/se3.hpp"

namespace emdist_test {

using Eigen::Matrix4d;

inline Matrix4d frame_to_mat4(const emdist::Frame& f) {
  Matrix4d m = Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = f.R;
  m.topRightCorner<3, 1>() = f.p;
  return m;
}

inline emdist::Frame mat4_to_frame(const Matrix4d& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

// 4x4 matrix of the screw generator [S] = [[n], -n x q; 0, 0]
inline Matrix4d screw_generator(const emdist::Screw& s) {
  Matrix4d g = Matrix4d::Zero();
  g.topLeftCorner<3, 3>() = emdist::skew<double>(s.axis_dir);
  g.topRightCorner<3, 1>() = -s.axis_dir.cross(s.axis_point);
  return g;
}

// Series matrix exponential with scaling and squaring; the reference for the
// closed-form screw exponential.
inline Matrix4d expm4(Matrix4d a) {
  int squarings = 0;
  while (a.cwiseAbs().maxCoeff() > 0.25) {
    a *= 0.5;
    ++squarings;
  }
  Matrix4d result = Matrix4d::Identity();
  Matrix4d term = Matrix4d::Identity();
  for (int k = 1; k <= 24; ++k) {
    term = (term * a) / static_cast<double>(k);
    result += term;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

// central finite differences of a scalar function
inline Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Eigen::VectorXd hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    g[i] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

inline Eigen::VectorXd random_angles(emdist::Rng& rng, int n,
                                     double range = M_PI) {
  return rng.uniform_vec(n, -range, range);
}

// body twist of a frame trajectory by central differences: vee(T^-1 dT/dt)
inline emdist::Twist fd_body_twist(
    const std::function<emdist::Frame(double)>& traj, double t,
    double h = 1e-6) {
  const emdist::Frame fp = traj(t + h);
  const emdist::Frame fm = traj(t - h);
  const emdist::Frame f0 = traj(t);
  const Eigen::Matrix3d rdot = (fp.R - fm.R) / (2.0 * h);
  const Eigen::Vector3d pdot = (fp.p - fm.p) / (2.0 * h);
  const Eigen::Matrix3d wb = f0.R.transpose() * rdot;
  emdist::Twist v;
  v.omega = Eigen::Vector3d(wb(2, 1), wb(0, 2), wb(1, 0));
  v.v = f0.R.transpose() * pdot;
  return v;
}

}  // namespace emdist_test
