#include "emdist/distance.hpp"

#include <algorithm>
#include <cmath>

namespace emdist {

CorrespondenceMatrix binary_correspondence(const Eigen::MatrixXd& D) {
  if (!D.allFinite())
    throw std::invalid_argument("binary_correspondence: non-finite distances");
  const int n = static_cast<int>(D.rows());
  const int m = static_cast<int>(D.cols());
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, m);
  for (int i = 0; i < n; ++i) {
    int best = 0;
    for (int j = 1; j < m; ++j)
      if (D(i, j) < D(i, best)) best = j;  // strict: ties keep lowest index
    W(i, best) += 1.0;
  }
  for (int j = 0; j < m; ++j) {
    int best = 0;
    for (int i = 1; i < n; ++i)
      if (D(i, j) < D(best, j)) best = i;
    W(best, j) += 1.0;
  }
  return {W, CorrespondenceMode::kBinaryBidirectional};
}

CorrespondenceMatrix softmin_correspondence(const Eigen::MatrixXd& D,
                                            double xi) {
  return {softmin_weights<double>(D, xi), CorrespondenceMode::kSoftmin};
}

CorrespondenceMatrix static_correspondence(const EmbodimentSpec& a,
                                           const EmbodimentSpec& b) {
  const EmbodimentSpec ua = normalize(a);
  const EmbodimentSpec ub = normalize(b);
  const int n = ua.num_links();
  const int m = ub.num_links();
  std::vector<double> ea(n + 1, 0.0), eb(m + 1, 0.0);
  for (int i = 0; i < n; ++i) ea[i + 1] = ea[i] + ua.links[i].length;
  for (int j = 0; j < m; ++j) eb[j + 1] = eb[j] + ub.links[j].length;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double overlap = std::max(
          0.0, std::min(ea[i + 1], eb[j + 1]) - std::max(ea[i], eb[j]));
      W(i, j) = overlap / ua.links[i].length;
    }
  }
  return {W, CorrespondenceMode::kStatic};
}

double embodiment_distance(const EmbodimentSpec& spec_a,
                           const EmbodimentSpec& spec_b, const JointState& a,
                           const JointState& b, const DistanceConfig& cfg) {
  const EmbodimentState sa = embodiment_state(spec_a, a);
  const EmbodimentState sb = embodiment_state(spec_b, b);
  if (cfg.mode == CorrespondenceMode::kStatic) {
    const CorrespondenceMatrix W = static_correspondence(spec_a, spec_b);
    return embodiment_distance(sa, sb, cfg, &W.W);
  }
  return embodiment_distance(sa, sb, cfg);
}

std::vector<PairBreakdown> distance_breakdown(const EmbodimentState& a,
                                              const EmbodimentState& b,
                                              const DistanceConfig& cfg,
                                              const Eigen::MatrixXd* static_W) {
  const int n = a.size();
  const int m = b.size();
  Eigen::MatrixXd W;
  switch (cfg.mode) {
    case CorrespondenceMode::kStatic:
      if (static_W == nullptr)
        throw std::invalid_argument(
            "distance_breakdown: static mode needs a correspondence matrix");
      W = *static_W;
      break;
    case CorrespondenceMode::kBinaryBidirectional:
      W = binary_correspondence(
              mutual_distance_matrix(a, b, cfg.correspondence_weights()))
              .W;
      break;
    case CorrespondenceMode::kSoftmin:
      W = softmin_weights<double>(
          mutual_distance_matrix(a, b, cfg.correspondence_weights()),
          cfg.softmin_xi);
      break;
  }
  std::vector<PairBreakdown> rows;
  rows.reserve(n * m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      PairBreakdown r;
      r.i = i + 1;
      r.j = j + 1;
      r.d_tr = (a.links[i].frame.p - b.links[j].frame.p).norm();
      r.d_rot = (M_PI / 2.0) *
                (1.0 - a.links[i].frame.R.col(0).dot(b.links[j].frame.R.col(0)));
      auto [wa, va] = spatial_velocity(a.links[i].frame, a.links[i].twist);
      auto [wb, vb] = spatial_velocity(b.links[j].frame, b.links[j].twist);
      r.d_v = (va - vb).norm();
      r.d_omega = (wa - wb).norm();
      r.w = W(i, j);
      const double d = cfg.weights.alpha_tr * r.d_tr +
                       cfg.weights.alpha_rot * r.d_rot +
                       cfg.weights.alpha_v * r.d_v +
                       cfg.weights.alpha_omega * r.d_omega;
      r.weighted = r.w * d;
      rows.push_back(r);
    }
  }
  return rows;
}

Eigen::MatrixXd distance_grid(const EmbodimentSpec& expert,
                              const EmbodimentSpec& learner,
                              const Eigen::VectorXd& q_expert,
                              const DistanceConfig& cfg, int grid_n) {
  if (grid_n < 2) throw std::invalid_argument("distance_grid: grid too small");
  const EmbodimentSpec ue = normalize(expert);
  const EmbodimentSpec ul = normalize(learner);
  if (ul.num_links() != 2)
    throw std::invalid_argument("distance_grid: learner must have 2 links");
  const ChainGeometry geo_l = chain_geometry(ul);
  const Eigen::VectorXd zero_l = Eigen::VectorXd::Zero(2);

  const EmbodimentState se = chain_twists(
      chain_geometry(ue), q_expert,
      Eigen::VectorXd(Eigen::VectorXd::Zero(ue.num_links())));

  Eigen::MatrixXd Wstat;
  const Eigen::MatrixXd* wptr = nullptr;
  if (cfg.mode == CorrespondenceMode::kStatic) {
    Wstat = static_correspondence(ue, ul).W;
    wptr = &Wstat;
  }

  Eigen::MatrixXd grid(grid_n, grid_n);
  Eigen::VectorXd q(2);
  for (int i = 0; i < grid_n; ++i) {
    q[0] = -M_PI + 2.0 * M_PI * i / grid_n;
    for (int j = 0; j < grid_n; ++j) {
      q[1] = -M_PI + 2.0 * M_PI * j / grid_n;
      const EmbodimentState sl = chain_twists(geo_l, q, zero_l);
      grid(i, j) = embodiment_distance(se, sl, cfg, wptr);
    }
  }
  return grid;
}

int count_local_minima_periodic(const Eigen::MatrixXd& grid) {
  const int n = static_cast<int>(grid.rows());
  const int m = static_cast<int>(grid.cols());
  int count = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double v = grid(i, j);
      bool is_min = true;
      for (int di = -1; di <= 1 && is_min; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const int ii = (i + di + n) % n;
          const int jj = (j + dj + m) % m;
          if (grid(ii, jj) <= v) {
            is_min = false;
            break;
          }
        }
      }
      if (is_min) ++count;
    }
  }
  return count;
}

std::pair<int, int> grid_argmin(const Eigen::MatrixXd& grid) {
  Eigen::Index i = 0, j = 0;
  grid.minCoeff(&i, &j);
  return {static_cast<int>(i), static_cast<int>(j)};
}

}  // namespace emdist
