#include "emdist/dynamics.hpp"

#include <cmath>

#include "emdist/io.hpp"

namespace emdist {

DynamicsModel::DynamicsModel(const EmbodimentSpec& s, double friction_coeff,
                             double radius_ratio)
    : spec(normalize(s)), friction(friction_coeff),
      rod_radius_ratio(radius_ratio) {
  if (friction < 0.0)
    throw std::invalid_argument("dynamics: friction must be nonnegative");
  if (rod_radius_ratio < 0.0) {
    bool planar = true;
    for (const auto& link : spec.links) {
      if (std::abs(std::abs(link.joint_axis.normalized().z()) - 1.0) > 1e-12)
        planar = false;
    }
    rod_radius_ratio = planar ? 0.0 : 0.02;
  }
  geo = chain_geometry(spec);
  const int n = spec.num_links();
  home_rel.resize(n);
  axis_local.resize(n);
  spatial_inertia.resize(n);
  for (int i = 0; i < n; ++i) {
    const Frame prev = (i == 0) ? Frame{} : geo.home[i - 1];
    home_rel[i] = compose(inverse(prev), geo.home[i]);
    axis_local[i] = twist_to_vec(geo.axis_local[i]);

    const LinkSpec& link = spec.links[i];
    const double m = link.mass;
    const double l = link.length;
    const double rho = rod_radius_ratio * l;
    // solid cylinder along x, inertia about its COM
    const double i_axial = 0.5 * m * rho * rho;
    const double i_perp = m * (l * l / 12.0 + rho * rho / 4.0);
    Matrix6d g_com = Matrix6d::Zero();
    g_com.diagonal() << i_axial, i_perp, i_perp, m, m, m;
    // transport to the link frame: COM sits at l/2 along x, frame at offset
    Frame to_com;  // maps link-frame coordinates into COM coordinates
    to_com.p = Eigen::Vector3d(0.5 * l - link.frame_offset, 0.0, 0.0);
    const Matrix6d ad = adjoint_matrix(inverse(to_com));
    spatial_inertia[i] = ad.transpose() * g_com * ad;
  }
}

namespace {

// relative frame i-1 -> i at angle q_i
Frame relative_frame(const DynamicsModel& model, int i, double qi) {
  return compose(model.home_rel[i], twist_exp(model.axis_local[i], qi));
}

}  // namespace

Eigen::VectorXd inverse_dynamics(const DynamicsModel& model,
                                 const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qdot,
                                 const Eigen::VectorXd& qddot) {
  const int n = model.dof();
  if (q.size() != n || qdot.size() != n || qddot.size() != n)
    throw std::invalid_argument("inverse_dynamics: dimension mismatch");

  std::vector<Matrix6d> ad_rel_inv(n);  // Ad of (frame i-1 -> i)^-1
  std::vector<Vector6d> v(n), a(n);
  Vector6d v_prev = Vector6d::Zero();
  Vector6d a_prev = Vector6d::Zero();  // gravity off
  for (int i = 0; i < n; ++i) {
    const Frame rel = relative_frame(model, i, q[i]);
    ad_rel_inv[i] = adjoint_matrix(inverse(rel));
    const Vector6d& s = model.axis_local[i];
    v[i] = ad_rel_inv[i] * v_prev + s * qdot[i];
    a[i] = ad_rel_inv[i] * a_prev + ad_matrix(v[i]) * s * qdot[i] +
           s * qddot[i];
    v_prev = v[i];
    a_prev = a[i];
  }

  Eigen::VectorXd tau(n);
  Vector6d f_next = Vector6d::Zero();
  for (int i = n - 1; i >= 0; --i) {
    const Matrix6d& g = model.spatial_inertia[i];
    Vector6d f = g * a[i] - ad_matrix(v[i]).transpose() * (g * v[i]);
    if (i + 1 < n) f += ad_rel_inv[i + 1].transpose() * f_next;
    tau[i] = f.dot(model.axis_local[i]);
    f_next = f;
  }
  return tau;
}

Eigen::MatrixXd mass_matrix(const DynamicsModel& model,
                            const Eigen::VectorXd& q) {
  const int n = model.dof();
  Eigen::MatrixXd m(n, n);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[j] = 1.0;
    m.col(j) = inverse_dynamics(model, q, zero, e);
  }
  // symmetrize away the last bits of round-off
  return 0.5 * (m + m.transpose());
}

double kinetic_energy(const DynamicsModel& model, const Eigen::VectorXd& q,
                      const Eigen::VectorXd& qdot) {
  return 0.5 * qdot.dot(mass_matrix(model, q) * qdot);
}

Eigen::VectorXd forward_dynamics(const DynamicsModel& model,
                                 const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qdot,
                                 const Eigen::VectorXd& tau) {
  const int n = model.dof();
  const Eigen::VectorXd bias =
      inverse_dynamics(model, q, qdot, Eigen::VectorXd::Zero(n));
  const Eigen::MatrixXd m = mass_matrix(model, q);
  const Eigen::VectorXd rhs = tau - bias - model.friction * qdot;

  const std::vector<int> free = model.spec.unlocked_joints();
  const int nf = static_cast<int>(free.size());
  Eigen::VectorXd qddot = Eigen::VectorXd::Zero(n);
  if (nf == 0) return qddot;
  Eigen::MatrixXd mf(nf, nf);
  Eigen::VectorXd rf(nf);
  for (int r = 0; r < nf; ++r) {
    rf[r] = rhs[free[r] - 1];
    for (int c = 0; c < nf; ++c) mf(r, c) = m(free[r] - 1, free[c] - 1);
  }
  const Eigen::VectorXd af = mf.ldlt().solve(rf);
  for (int r = 0; r < nf; ++r) qddot[free[r] - 1] = af[r];
  return qddot;
}

JointState step_dynamics(const DynamicsModel& model, const JointState& js,
                         const Eigen::VectorXd& tau, double dt, int substeps) {
  const int n = model.dof();
  if (js.q.size() != n || js.qdot.size() != n || tau.size() != n)
    throw std::invalid_argument("step_dynamics: dimension mismatch");
  if (dt <= 0.0 || substeps < 1)
    throw std::invalid_argument("step_dynamics: bad time step");

  Eigen::VectorXd tau_c = tau;
  for (int i = 0; i < n; ++i) {
    const double lim = model.spec.links[i].torque_limit;
    tau_c[i] = std::clamp(tau_c[i], -lim, lim);
    if (model.spec.is_locked(i + 1)) tau_c[i] = 0.0;
  }

  Eigen::VectorXd q = js.q;
  Eigen::VectorXd qd = js.qdot;
  const double h = dt / substeps;
  for (int s = 0; s < substeps; ++s) {
    // classic RK4 on (q, qdot); wrap only after the full substep
    const Eigen::VectorXd k1v = forward_dynamics(model, q, qd, tau_c);
    const Eigen::VectorXd k1q = qd;
    const Eigen::VectorXd k2v =
        forward_dynamics(model, q + 0.5 * h * k1q, qd + 0.5 * h * k1v, tau_c);
    const Eigen::VectorXd k2q = qd + 0.5 * h * k1v;
    const Eigen::VectorXd k3v =
        forward_dynamics(model, q + 0.5 * h * k2q, qd + 0.5 * h * k2v, tau_c);
    const Eigen::VectorXd k3q = qd + 0.5 * h * k2v;
    const Eigen::VectorXd k4v =
        forward_dynamics(model, q + h * k3q, qd + h * k3v, tau_c);
    const Eigen::VectorXd k4q = qd + h * k3v;
    q += (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    qd += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    for (int i = 0; i < n; ++i) {
      q[i] = wrap_angle(q[i]);
      if (model.spec.is_locked(i + 1)) {
        q[i] = 0.0;
        qd[i] = 0.0;
      }
    }
  }
  if (!q.allFinite() || !qd.allFinite())
    throw std::runtime_error("step_dynamics: state diverged to non-finite");
  return {q, qd};
}

RecordedExpert record_expert(const DynamicsModel& model,
                             const Eigen::VectorXd& goal_q,
                             const PidGains& gains, double duration, double dt,
                             int substeps) {
  const int n = model.dof();
  if (goal_q.size() != n)
    throw std::invalid_argument("record_expert: goal dimension mismatch");
  const int steps = static_cast<int>(std::lround(duration / dt));
  if (steps < 1) throw std::invalid_argument("record_expert: empty horizon");

  RecordedExpert rec;
  rec.traj.dt = dt;
  rec.traj.spec_name = model.spec.name;
  rec.traj.q.setZero(steps + 1, n);
  rec.traj.qdot.setZero(steps + 1, n);
  rec.tau.setZero(steps, n);

  JointState js = zero_joint_state(model.spec);
  Eigen::VectorXd integral = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < steps; ++k) {
    // per-joint PID error law, decoupled through the mass matrix (computed
    // torque); inertial coupling otherwise destabilizes light distal links
    // at the trajectory control rate
    Eigen::VectorXd accel_cmd = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (model.spec.is_locked(i + 1)) continue;
      const double e = wrap_angle(goal_q[i] - js.q[i]);
      integral[i] += e * dt;
      accel_cmd[i] =
          gains.kp * e + gains.ki * integral[i] - gains.kd * js.qdot[i];
    }
    Eigen::VectorXd tau =
        mass_matrix(model, js.q) * accel_cmd +
        inverse_dynamics(model, js.q, js.qdot, Eigen::VectorXd::Zero(n)) +
        model.friction * js.qdot;
    for (int i = 0; i < n; ++i) {
      const double lim = model.spec.links[i].torque_limit;
      tau[i] = std::clamp(tau[i], -lim, lim);
      if (model.spec.is_locked(i + 1)) tau[i] = 0.0;
    }
    rec.tau.row(k) = tau.transpose();
    js = step_dynamics(model, js, tau, dt, substeps);
    rec.traj.q.row(k + 1) = js.q.transpose();
    rec.traj.qdot.row(k + 1) = js.qdot.transpose();
  }
  double err = 0.0;
  for (int i = 0; i < n; ++i) {
    if (model.spec.is_locked(i + 1)) continue;
    err = std::max(err, std::abs(wrap_angle(goal_q[i] - js.q[i])));
  }
  rec.final_error = err;
  rec.settled = err < 0.1;
  return rec;
}

void save_trajectory(const Trajectory& traj, const std::string& path) {
  CsvTable t;
  const int n = traj.dof();
  t.header.push_back("t");
  for (int i = 1; i <= n; ++i) t.header.push_back("q" + std::to_string(i));
  for (int i = 1; i <= n; ++i) t.header.push_back("qd" + std::to_string(i));
  for (int k = 0; k < traj.q.rows(); ++k) {
    std::vector<double> row;
    row.push_back(k * traj.dt);
    for (int i = 0; i < n; ++i) row.push_back(traj.q(k, i));
    for (int i = 0; i < n; ++i) row.push_back(traj.qdot(k, i));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

Trajectory load_trajectory(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.header.empty() || t.header[0] != "t" || t.header.size() % 2 == 0)
    throw std::runtime_error("trajectory csv: unexpected header in " + path);
  const int n = static_cast<int>((t.header.size() - 1) / 2);
  const int rows = static_cast<int>(t.rows.size());
  if (rows < 2) throw std::runtime_error("trajectory csv: too short: " + path);
  Trajectory traj;
  traj.q.resize(rows, n);
  traj.qdot.resize(rows, n);
  for (int k = 0; k < rows; ++k) {
    if (static_cast<int>(t.rows[k].size()) != 2 * n + 1)
      throw std::runtime_error("trajectory csv: ragged row in " + path);
    for (int i = 0; i < n; ++i) {
      traj.q(k, i) = t.rows[k][1 + i];
      traj.qdot(k, i) = t.rows[k][1 + n + i];
    }
  }
  traj.dt = t.rows[1][0] - t.rows[0][0];
  return traj;
}

}  // namespace emdist
