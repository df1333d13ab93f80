#include "emdist/gradients.hpp"

#include <cmath>
#include <sstream>

#include "emdist/mlp.hpp"

namespace emdist {

namespace {

EmbodimentStateT<Var> lift_state(const EmbodimentState& s) {
  EmbodimentStateT<Var> out;
  out.normalized = s.normalized;
  out.links.reserve(s.links.size());
  for (const auto& l : s.links) {
    LinkStateT<Var> lv;
    lv.frame = frame_cast<Var>(l.frame);
    lv.twist = twist_cast<Var>(l.twist);
    out.links.push_back(std::move(lv));
  }
  return out;
}

}  // namespace

DistanceGradient grad_distance_prepared(const EmbodimentState& expert_state,
                                        const ChainGeometry& learner_geo,
                                        const Eigen::VectorXd& q_learner,
                                        const Eigen::VectorXd& qdot_learner,
                                        const DistanceConfig& cfg,
                                        const Eigen::MatrixXd* static_W) {
  Tape tape;
  tape.reserve(512 + 512 * learner_geo.dof());
  const VecX<Var> q = make_inputs(tape, q_learner);
  std::vector<Var> q_vars(q.data(), q.data() + q.size());
  const VecX<Var> qd = qdot_learner.cast<Var>();

  const EmbodimentStateT<Var> learner = chain_twists(learner_geo, q, qd);
  const EmbodimentStateT<Var> expert = lift_state(expert_state);
  const Var d = embodiment_distance(expert, learner, cfg, static_W);

  DistanceGradient out;
  out.value = d.value();
  out.grad = input_gradient(tape, d, q_vars);
  if (!std::isfinite(out.value) || !out.grad.allFinite()) {
    std::ostringstream msg;
    msg << "grad_distance: singular configuration (value=" << out.value
        << ", q=" << q_learner.transpose() << ")";
    throw std::domain_error(msg.str());
  }
  return out;
}

DistanceGradient grad_distance(const EmbodimentSpec& expert,
                               const EmbodimentSpec& learner,
                               const JointState& expert_state,
                               const JointState& learner_state,
                               const DistanceConfig& cfg) {
  const EmbodimentSpec ue = normalize(expert);
  const EmbodimentSpec ul = normalize(learner);
  const EmbodimentState se = embodiment_state(ue, expert_state);

  Eigen::MatrixXd Wstat;
  const Eigen::MatrixXd* wptr = nullptr;
  if (cfg.mode == CorrespondenceMode::kStatic) {
    Wstat = static_correspondence(ue, ul).W;
    wptr = &Wstat;
  }
  return grad_distance_prepared(se, chain_geometry(ul), learner_state.q,
                                learner_state.qdot, cfg, wptr);
}

MlpGradient grad_mlp(const Mlp& net, const Eigen::MatrixXd& batch_inputs,
                     const TapeLoss& loss) {
  Tape tape;
  tape.reserve(1 << 16);
  const MlpParamsT<Var> params = mlp_inputs(tape, net);
  const MatX<Var> X = batch_inputs.cast<Var>();
  const MatX<Var> Y = mlp_forward(params, net.config(), X);
  const Var L = loss(tape, Y);
  if (!std::isfinite(L.value()))
    throw std::domain_error("grad_mlp: non-finite loss");

  MlpGradient out;
  out.loss = L.value();
  if (!L.tracked()) {
    // loss independent of parameters; all gradients are zero
    for (const auto& l : net.layers()) {
      out.dW.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
      out.db.push_back(Eigen::VectorXd::Zero(l.b.size()));
    }
    return out;
  }
  const std::vector<double> adj = tape.gradient(L.index());
  for (std::size_t l = 0; l < params.W.size(); ++l) {
    Eigen::MatrixXd dW(params.W[l].rows(), params.W[l].cols());
    for (int r = 0; r < dW.rows(); ++r)
      for (int c = 0; c < dW.cols(); ++c)
        dW(r, c) = adj[params.W[l](r, c).index()];
    Eigen::VectorXd db(params.b[l].size());
    for (int r = 0; r < db.size(); ++r) db[r] = adj[params.b[l][r].index()];
    if (!dW.allFinite() || !db.allFinite()) {
      std::ostringstream msg;
      msg << "grad_mlp: non-finite gradient in layer " << l;
      throw std::domain_error(msg.str());
    }
    out.dW.push_back(std::move(dW));
    out.db.push_back(std::move(db));
  }
  return out;
}

}  // namespace emdist
