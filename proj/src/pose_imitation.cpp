#include "emdist/pose_imitation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "emdist/gradients.hpp"
#include "emdist/rng.hpp"

namespace emdist {

Eigen::VectorXd inject_locked(const EmbodimentSpec& spec,
                              const Eigen::VectorXd& unlocked_values) {
  const std::vector<int> free = spec.unlocked_joints();
  if (unlocked_values.size() != static_cast<int>(free.size()))
    throw std::invalid_argument("inject_locked: dimension mismatch");
  Eigen::VectorXd q = Eigen::VectorXd::Zero(spec.num_links());
  for (std::size_t k = 0; k < free.size(); ++k)
    q[free[k] - 1] = unlocked_values[static_cast<int>(k)];
  return q;
}

namespace {

Eigen::VectorXd extract_unlocked(const EmbodimentSpec& spec,
                                 const Eigen::VectorXd& q_full) {
  const std::vector<int> free = spec.unlocked_joints();
  Eigen::VectorXd out(static_cast<int>(free.size()));
  for (std::size_t k = 0; k < free.size(); ++k)
    out[static_cast<int>(k)] = q_full[free[k] - 1];
  return out;
}

struct PreparedPair {
  EmbodimentSpec expert, learner;
  ChainGeometry expert_geo, learner_geo;
  Eigen::MatrixXd static_W;
  const Eigen::MatrixXd* wptr = nullptr;

  PreparedPair(const EmbodimentSpec& e, const EmbodimentSpec& l,
               const DistanceConfig& cfg)
      : expert(normalize(e)), learner(normalize(l)) {
    expert_geo = chain_geometry(expert);
    learner_geo = chain_geometry(learner);
    if (cfg.mode == CorrespondenceMode::kStatic) {
      static_W = static_correspondence(expert, learner).W;
      wptr = &static_W;
    }
  }

  EmbodimentState expert_state(const Eigen::VectorXd& q) const {
    return chain_twists(expert_geo, q,
                        Eigen::VectorXd(Eigen::VectorXd::Zero(q.size())));
  }

  double distance(const EmbodimentState& se, const Eigen::VectorXd& ql,
                  const DistanceConfig& cfg) const {
    const EmbodimentState sl = chain_twists(
        learner_geo, ql, Eigen::VectorXd(Eigen::VectorXd::Zero(ql.size())));
    return embodiment_distance(se, sl, cfg, wptr);
  }
};

}  // namespace

SolveResult solve_pose(const EmbodimentSpec& expert,
                       const EmbodimentSpec& learner,
                       const Eigen::VectorXd& q_expert,
                       const DistanceConfig& cfg, const SolveOptions& opt,
                       const Eigen::VectorXd* init) {
  const PreparedPair pair(expert, learner, cfg);
  const int n_l = pair.learner.num_links();
  const std::vector<int> free = pair.learner.unlocked_joints();

  Eigen::VectorXd q;
  if (init != nullptr) {
    if (init->size() != n_l)
      throw std::invalid_argument("solve_pose: init dimension mismatch");
    q = *init;
  } else {
    Rng rng(opt.seed);
    q = Eigen::VectorXd::Zero(n_l);
    for (int j : free) q[j - 1] = rng.uniform(-M_PI, M_PI);
  }
  for (int j : pair.learner.locked) q[j - 1] = 0.0;

  const EmbodimentState se = pair.expert_state(q_expert);
  const Eigen::VectorXd zero_qd = Eigen::VectorXd::Zero(n_l);

  SolveResult res;
  res.q = q;
  res.distance = pair.distance(se, q, cfg);
  res.converged = false;

  // distance is bounded below by zero, so a vanishing value is already
  // globally optimal (and the translation term is not differentiable there)
  if (res.distance < 1e-14) {
    res.converged = true;
    return res;
  }

  double step = opt.step;
  for (int it = 0; it < opt.max_iters; ++it) {
    const DistanceGradient g = grad_distance_prepared(
        se, pair.learner_geo, q, zero_qd, cfg, pair.wptr);
    double gnorm = 0.0;
    for (int j : free) gnorm = std::max(gnorm, std::abs(g.grad[j - 1]));
    if (gnorm < opt.grad_tol) {
      res.converged = true;
      break;
    }

    bool accepted = false;
    while (step >= opt.min_step) {
      Eigen::VectorXd trial = q;
      for (int j : free)
        trial[j - 1] = wrap_angle(q[j - 1] - step * g.grad[j - 1]);
      const double d_trial = pair.distance(se, trial, cfg);
      if (d_trial < res.distance) {
        q = trial;
        res.distance = d_trial;
        res.q = q;
        res.iterations = it + 1;
        accepted = true;
        // gentle growth so a shrunken step can recover
        step = std::min(step * 1.5, opt.step);
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.converged = true;  // no descent direction at this resolution
      break;
    }
    if (res.distance < 1e-14) {
      res.converged = true;
      break;
    }
  }
  return res;
}

Eigen::MatrixXd generate_dataset(const EmbodimentSpec& spec, int n,
                                 std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_dataset: n must be >= 1");
  Rng rng(seed);
  const int dof = spec.num_links();
  Eigen::MatrixXd data = Eigen::MatrixXd::Zero(dof, n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < dof; ++r) {
      const double v = rng.uniform(-M_PI, M_PI);
      if (!spec.is_locked(r + 1)) data(r, c) = v;
    }
  }
  return data;
}

namespace {

// dLoss/d(q_hat unlocked) for the mean distance over a minibatch, one column
// per sample; also returns the mean distance itself.
double batch_distance_grads(const PreparedPair& pair,
                            const std::vector<EmbodimentState>& expert_states,
                            const std::vector<int>& sample_idx,
                            const Eigen::MatrixXd& q_hat_unlocked,
                            const DistanceConfig& cfg, Eigen::MatrixXd* dq) {
  const std::vector<int> free = pair.learner.unlocked_joints();
  const int b = static_cast<int>(sample_idx.size());
  const Eigen::VectorXd zero_qd =
      Eigen::VectorXd::Zero(pair.learner.num_links());
  double mean = 0.0;
  if (dq != nullptr) dq->setZero(q_hat_unlocked.rows(), b);
  for (int k = 0; k < b; ++k) {
    const Eigen::VectorXd q_full =
        inject_locked(pair.learner, q_hat_unlocked.col(k));
    const DistanceGradient g = grad_distance_prepared(
        expert_states[sample_idx[k]], pair.learner_geo, q_full, zero_qd, cfg,
        pair.wptr);
    mean += g.value;
    if (dq != nullptr) {
      for (std::size_t r = 0; r < free.size(); ++r)
        (*dq)(static_cast<int>(r), k) = g.grad[free[r] - 1] / b;
    }
  }
  return mean / b;
}

double batch_distance(const PreparedPair& pair,
                      const std::vector<EmbodimentState>& expert_states,
                      const std::vector<int>& sample_idx,
                      const Eigen::MatrixXd& q_hat_unlocked,
                      const DistanceConfig& cfg) {
  const int b = static_cast<int>(sample_idx.size());
  const Eigen::VectorXd zero_qd =
      Eigen::VectorXd::Zero(pair.learner.num_links());
  double mean = 0.0;
  for (int k = 0; k < b; ++k) {
    const Eigen::VectorXd q_full =
        inject_locked(pair.learner, q_hat_unlocked.col(k));
    mean += pair.distance(expert_states[sample_idx[k]], q_full, cfg);
  }
  return mean / b;
}

}  // namespace

TrainResult train_pose_map(const EmbodimentSpec& expert,
                           const EmbodimentSpec& learner,
                           const DistanceConfig& cfg, const TrainConfig& tc) {
  tc.validate();
  const PreparedPair pair(expert, learner, cfg);

  MlpConfig mc;
  mc.input = pair.expert.num_links();
  mc.hidden = tc.hidden;
  mc.output = pair.learner.effective_dof();
  mc.lrelu_slope = tc.lrelu_slope;
  mc.output_activation = OutputActivation::kTanhScaled;
  mc.output_scale = M_PI;

  Rng init_rng(derive_seed(tc.seed, 0));
  TrainResult result;
  result.net = Mlp(mc, init_rng);
  result.net.init_seed = tc.seed;

  const Eigen::MatrixXd train_set =
      generate_dataset(pair.expert, tc.dataset_size, derive_seed(tc.seed, 1));
  const int n_val = std::max(
      1, static_cast<int>(std::lround(tc.dataset_size * tc.validation_fraction)));
  const Eigen::MatrixXd val_set =
      generate_dataset(pair.expert, n_val, derive_seed(tc.seed, 2));

  std::vector<EmbodimentState> train_states, val_states;
  train_states.reserve(tc.dataset_size);
  for (int c = 0; c < train_set.cols(); ++c)
    train_states.push_back(pair.expert_state(train_set.col(c)));
  val_states.reserve(n_val);
  for (int c = 0; c < val_set.cols(); ++c)
    val_states.push_back(pair.expert_state(val_set.col(c)));

  std::vector<int> val_idx(n_val);
  std::iota(val_idx.begin(), val_idx.end(), 0);
  auto val_distance = [&](const Mlp& net) {
    const Eigen::MatrixXd q_hat = net.forward_batch(val_set);
    return batch_distance(pair, val_states, val_idx, q_hat, cfg);
  };
  result.baseline_val_distance = val_distance(result.net);

  Rng shuffle_rng(derive_seed(tc.seed, 3));
  std::vector<int> order(tc.dataset_size);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    int batches_done = 0;
    for (int m = 0; m < tc.minibatches; ++m) {
      const int lo = static_cast<int>(
          static_cast<long>(m) * tc.dataset_size / tc.minibatches);
      const int hi = static_cast<int>(
          static_cast<long>(m + 1) * tc.dataset_size / tc.minibatches);
      if (hi <= lo) continue;
      std::vector<int> idx(order.begin() + lo, order.begin() + hi);
      Eigen::MatrixXd X(pair.expert.num_links(), hi - lo);
      for (int k = 0; k < hi - lo; ++k) X.col(k) = train_set.col(idx[k]);

      Mlp::Cache cache;
      const Eigen::MatrixXd q_hat = result.net.forward_batch(X, cache);
      Eigen::MatrixXd dq;
      const double loss0 =
          batch_distance_grads(pair, train_states, idx, q_hat, cfg, &dq);
      epoch_loss += loss0;
      ++batches_done;

      const Mlp::Gradients g = result.net.backward_batch(cache, dq);
      Eigen::VectorXd grad_flat(result.net.num_params());
      {
        int at = 0;
        for (const auto& gl : g.layers) {
          grad_flat.segment(at, gl.W.size()) =
              Eigen::Map<const Eigen::VectorXd>(gl.W.data(), gl.W.size());
          at += static_cast<int>(gl.W.size());
          grad_flat.segment(at, gl.b.size()) = gl.b;
          at += static_cast<int>(gl.b.size());
        }
      }

      const Eigen::VectorXd params0 = result.net.get_params();
      double step = tc.learning_rate;
      double best_loss = loss0;
      Eigen::VectorXd best_params = params0;
      for (int t = 0; t <= tc.backtracks; ++t) {
        result.net.set_params(params0 - step * grad_flat);
        const Eigen::MatrixXd q_try = result.net.forward_batch(X);
        const double try_loss =
            batch_distance(pair, train_states, idx, q_try, cfg);
        if (try_loss < best_loss) {
          best_loss = try_loss;
          best_params = result.net.get_params();
          break;
        }
        step *= 0.5;
      }
      result.net.set_params(best_params);
    }
    result.train_curve.push_back(batches_done > 0 ? epoch_loss / batches_done
                                                  : 0.0);
    result.val_curve.push_back(val_distance(result.net));
    if (!std::isfinite(result.train_curve.back()))
      throw std::runtime_error("train_pose_map: training diverged");
  }
  return result;
}

EvalStats evaluate_pose_map(const Mlp& net, const EmbodimentSpec& expert,
                            const EmbodimentSpec& learner,
                            const DistanceConfig& cfg,
                            const Eigen::MatrixXd& test_set) {
  if (test_set.cols() == 0)
    throw std::invalid_argument("evaluate_pose_map: empty test set");
  const PreparedPair pair(expert, learner, cfg);
  if (test_set.rows() != pair.expert.num_links())
    throw std::invalid_argument("evaluate_pose_map: sample dimension mismatch");
  EvalStats stats;
  stats.per_sample.resize(test_set.cols());
  const Eigen::MatrixXd q_hat = net.forward_batch(test_set);
  for (int c = 0; c < test_set.cols(); ++c) {
    const EmbodimentState se = pair.expert_state(test_set.col(c));
    const Eigen::VectorXd q_full = inject_locked(pair.learner, q_hat.col(c));
    stats.per_sample[c] = pair.distance(se, q_full, cfg);
  }
  stats.mean_distance = stats.per_sample.mean();
  stats.max_distance = stats.per_sample.maxCoeff();
  return stats;
}

}  // namespace emdist
