#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <vector>

#include "emdist/autodiff.hpp"
#include "emdist/embodiment.hpp"
#include "emdist/se3.hpp"

namespace emdist {

/// Term weights for the frame/state distance. All comparisons assume both
/// embodiments were normalized to unit chain length first.
struct DistanceWeights {
  double alpha_tr = 1.0;
  double alpha_rot = 1.0;
  double alpha_v = 0.0;
  double alpha_omega = 0.0;

  void validate() const {
    if (alpha_tr < 0 || alpha_rot < 0 || alpha_v < 0 || alpha_omega < 0)
      throw std::invalid_argument("distance weights must be nonnegative");
    if (alpha_tr == 0 && alpha_rot == 0 && alpha_v == 0 && alpha_omega == 0)
      throw std::invalid_argument("distance weights must not all be zero");
  }
};

/// Coupled weight pair with alpha_tr = d_tr and the rotational weight chosen
/// so both terms share the value range [0, 2].
inline DistanceWeights distance_dependent_weights(double d_tr) {
  if (d_tr < 0.0 || d_tr > 2.0)
    throw std::invalid_argument(
        "distance_dependent_weights: d_tr outside [0, 2]");
  DistanceWeights w;
  w.alpha_tr = d_tr;
  w.alpha_rot = (2.0 / M_PI) * (2.0 - d_tr);
  w.alpha_v = 0.0;
  w.alpha_omega = 0.0;
  return w;
}

enum class CorrespondenceMode { kBinaryBidirectional, kSoftmin, kStatic };
enum class DistanceReducer { kMean, kFrobenius };

struct CorrespondenceMatrix {
  Eigen::MatrixXd W;
  CorrespondenceMode mode = CorrespondenceMode::kStatic;
};

/// Weighted distance between two frames: Euclidean origin distance plus the
/// shifted-cosine angle between the link x-axes. The cosine form keeps the
/// rotational term free of the arccos derivative singularity.
template <typename S>
S frame_distance(const FrameT<S>& a, const FrameT<S>& b,
                 const DistanceWeights& w) {
  S d(0.0);
  if (w.alpha_tr != 0.0) {
    d += S(w.alpha_tr) * (a.p - b.p).norm();
  }
  if (w.alpha_rot != 0.0) {
    const S cos_beta = a.R.col(0).dot(b.R.col(0));
    d += S(w.alpha_rot) * (S(M_PI / 2.0) * (S(1.0) - cos_beta));
  }
  return d;
}

/// Rotational distance in its raw arccos form. Kept for reference and test
/// comparisons only; never used inside differentiated code.
inline double rotation_angle(const Frame& a, const Frame& b) {
  const double c = a.R.col(0).dot(b.R.col(0));
  return std::acos(std::clamp(c, -1.0, 1.0));
}

/// Frame distance augmented with base-frame linear and angular velocity
/// differences.
template <typename S>
S state_distance(const LinkStateT<S>& a, const LinkStateT<S>& b,
                 const DistanceWeights& w) {
  S d = frame_distance(a.frame, b.frame, w);
  if (w.alpha_v != 0.0 || w.alpha_omega != 0.0) {
    auto [wa, pa_dot] = spatial_velocity(a.frame, a.twist);
    auto [wb, pb_dot] = spatial_velocity(b.frame, b.twist);
    if (w.alpha_v != 0.0) d += S(w.alpha_v) * (pa_dot - pb_dot).norm();
    if (w.alpha_omega != 0.0) d += S(w.alpha_omega) * (wa - wb).norm();
  }
  return d;
}

/// Variant with per-pair translation-coupled weights: alpha_tr = d_tr and
/// alpha_rot = (2/pi)(2 - d_tr) evaluated from that pair's own d_tr.
template <typename S>
S state_distance_coupled(const LinkStateT<S>& a, const LinkStateT<S>& b,
                         const DistanceWeights& w) {
  const S d_tr = (a.frame.p - b.frame.p).norm();
  const S cos_beta = a.frame.R.col(0).dot(b.frame.R.col(0));
  const S d_rot = S(M_PI / 2.0) * (S(1.0) - cos_beta);
  S d = d_tr * d_tr + S(2.0 / M_PI) * (S(2.0) - d_tr) * d_rot;
  if (w.alpha_v != 0.0 || w.alpha_omega != 0.0) {
    auto [wa, pa_dot] = spatial_velocity(a.frame, a.twist);
    auto [wb, pb_dot] = spatial_velocity(b.frame, b.twist);
    if (w.alpha_v != 0.0) d += S(w.alpha_v) * (pa_dot - pb_dot).norm();
    if (w.alpha_omega != 0.0) d += S(w.alpha_omega) * (wa - wb).norm();
  }
  return d;
}

/// All pairwise state distances between the links of two embodiments.
template <typename S>
MatX<S> mutual_distance_matrix(const EmbodimentStateT<S>& a,
                               const EmbodimentStateT<S>& b,
                               const DistanceWeights& w,
                               bool coupled_weights = false) {
  if (a.links.empty() || b.links.empty())
    throw std::invalid_argument("mutual_distance_matrix: empty embodiment");
  MatX<S> d(a.size(), b.size());
  for (int i = 0; i < a.size(); ++i) {
    for (int j = 0; j < b.size(); ++j) {
      d(i, j) = coupled_weights
                    ? state_distance_coupled(a.links[i], b.links[j], w)
                    : state_distance(a.links[i], b.links[j], w);
    }
  }
  return d;
}

/// Row-argmin indicator plus column-argmin indicator; entries in {0, 1, 2}.
/// Ties break toward the lowest index.
CorrespondenceMatrix binary_correspondence(const Eigen::MatrixXd& D);

/// Differentiable soft assignment: softmax over rows plus softmax over
/// columns of xi * D, xi < 0 so minima get the large weights.
template <typename S>
MatX<S> softmin_weights(const MatX<S>& D, double xi) {
  if (xi >= 0.0)
    throw std::invalid_argument("softmin requires xi < 0");
  const int n = static_cast<int>(D.rows());
  const int m = static_cast<int>(D.cols());
  MatX<S> W(n, m);
  W.setZero();
  using std::exp;
  for (int i = 0; i < n; ++i) {
    // shift by the row extreme of xi*D (a constant) for stable exponentials
    double shift = value_of(D(i, 0)) * xi;
    for (int j = 1; j < m; ++j) shift = std::max(shift, value_of(D(i, j)) * xi);
    S denom(0.0);
    std::vector<S> e(m);
    for (int j = 0; j < m; ++j) {
      e[j] = exp(S(xi) * D(i, j) - S(shift));
      denom += e[j];
    }
    for (int j = 0; j < m; ++j) W(i, j) += e[j] / denom;
  }
  for (int j = 0; j < m; ++j) {
    double shift = value_of(D(0, j)) * xi;
    for (int i = 1; i < n; ++i) shift = std::max(shift, value_of(D(i, j)) * xi);
    S denom(0.0);
    std::vector<S> e(n);
    for (int i = 0; i < n; ++i) {
      e[i] = exp(S(xi) * D(i, j) - S(shift));
      denom += e[i];
    }
    for (int i = 0; i < n; ++i) W(i, j) += e[i] / denom;
  }
  return W;
}

CorrespondenceMatrix softmin_correspondence(const Eigen::MatrixXd& D,
                                            double xi);

/// State-independent correspondence from normalized arc-length overlap: link
/// i of `a` corresponds to link j of `b` by the fraction of its span that
/// overlaps j's span along the unit chain. Rows sum to 1.
CorrespondenceMatrix static_correspondence(const EmbodimentSpec& a,
                                           const EmbodimentSpec& b);

/// How the scalar embodiment distance is assembled from the mutual distance
/// matrix. The correspondence matrix may be built from its own weight set;
/// by default it shares `weights`.
struct DistanceConfig {
  DistanceWeights weights;
  std::optional<DistanceWeights> corr_weights;
  CorrespondenceMode mode = CorrespondenceMode::kStatic;
  double softmin_xi = -10.0;
  DistanceReducer reducer = DistanceReducer::kMean;
  bool coupled_weights = false;  // per-pair translation-coupled weighting

  const DistanceWeights& correspondence_weights() const {
    return corr_weights ? *corr_weights : weights;
  }
};

namespace detail {

template <typename S>
Eigen::MatrixXd matrix_values(const MatX<S>& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(i, j) = value_of(m(i, j));
  return out;
}

}  // namespace detail

/// Scalar distance between two embodiment states: the mean (or Frobenius
/// norm) of the correspondence-weighted mutual distance matrix. For the
/// static mode the caller passes the precomputed matrix; for the binary mode
/// the assignment is treated as a constant of the current state.
template <typename S>
S embodiment_distance(const EmbodimentStateT<S>& a,
                      const EmbodimentStateT<S>& b, const DistanceConfig& cfg,
                      const Eigen::MatrixXd* static_W = nullptr) {
  const MatX<S> D =
      mutual_distance_matrix(a, b, cfg.weights, cfg.coupled_weights);
  const int n = static_cast<int>(D.rows());
  const int m = static_cast<int>(D.cols());

  S accum(0.0);
  S frob(0.0);
  auto reduce_const_w = [&](const Eigen::MatrixXd& W) {
    if (W.rows() != n || W.cols() != m)
      throw std::invalid_argument(
          "embodiment_distance: correspondence matrix shape mismatch");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        if (W(i, j) == 0.0) continue;
        const S wd = S(W(i, j)) * D(i, j);
        accum += wd;
        if (cfg.reducer == DistanceReducer::kFrobenius) frob += wd * wd;
      }
  };

  switch (cfg.mode) {
    case CorrespondenceMode::kStatic: {
      if (static_W == nullptr)
        throw std::invalid_argument(
            "embodiment_distance: static mode needs a correspondence matrix");
      reduce_const_w(*static_W);
      break;
    }
    case CorrespondenceMode::kBinaryBidirectional: {
      const MatX<S> Dc =
          mutual_distance_matrix(a, b, cfg.correspondence_weights());
      reduce_const_w(binary_correspondence(detail::matrix_values(Dc)).W);
      break;
    }
    case CorrespondenceMode::kSoftmin: {
      const MatX<S> Dc =
          mutual_distance_matrix(a, b, cfg.correspondence_weights());
      const MatX<S> W = softmin_weights(Dc, cfg.softmin_xi);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
          const S wd = W(i, j) * D(i, j);
          accum += wd;
          if (cfg.reducer == DistanceReducer::kFrobenius) frob += wd * wd;
        }
      break;
    }
  }

  if (cfg.reducer == DistanceReducer::kFrobenius) {
    using std::sqrt;
    return sqrt(frob);
  }
  return accum / S(static_cast<double>(n) * static_cast<double>(m));
}

/// Convenience entry point on joint states: normalizes both specs, derives
/// states, resolves the static correspondence internally.
double embodiment_distance(const EmbodimentSpec& spec_a,
                           const EmbodimentSpec& spec_b, const JointState& a,
                           const JointState& b, const DistanceConfig& cfg);

/// Per-pair term breakdown of one distance evaluation, for CSV export.
struct PairBreakdown {
  int i = 0;  // 1-based link indices
  int j = 0;
  double d_tr = 0, d_rot = 0, d_v = 0, d_omega = 0;
  double w = 0;
  double weighted = 0;
};
std::vector<PairBreakdown> distance_breakdown(
    const EmbodimentState& a, const EmbodimentState& b,
    const DistanceConfig& cfg, const Eigen::MatrixXd* static_W = nullptr);

/// Distance over a grid of the learner's first two joint angles in
/// [-pi, pi), expert held fixed. grid(i, j) is the distance at
/// q1 = -pi + 2 pi i / N, q2 = -pi + 2 pi j / N.
Eigen::MatrixXd distance_grid(const EmbodimentSpec& expert,
                              const EmbodimentSpec& learner,
                              const Eigen::VectorXd& q_expert,
                              const DistanceConfig& cfg, int grid_n);

/// Count of strict local minima under the periodic 8-neighborhood.
int count_local_minima_periodic(const Eigen::MatrixXd& grid);

std::pair<int, int> grid_argmin(const Eigen::MatrixXd& grid);

}  // namespace emdist
