#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "emdist/distance.hpp"
#include "emdist/dynamics.hpp"
#include "emdist/embodiment.hpp"
#include "emdist/env.hpp"
#include "emdist/io.hpp"
#include "emdist/pose_imitation.hpp"
#include "emdist/ppo.hpp"
#include "emdist/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace emdist;

namespace {

constexpr int kExitBadInput = 2;

// Spec arguments accept a JSON file path or a builtin descriptor:
//   planar:0.5,0.5          planar chain with the given link lengths
//   demo7                   7-link z/y alternating demo arm
// either may carry ",lock=3+6+7" style suffix? keep it simple: a separate
// --lock flag handles locking.
EmbodimentSpec resolve_spec(const std::string& arg) {
  if (arg.rfind("planar:", 0) == 0) {
    std::vector<double> lengths;
    std::stringstream ss(arg.substr(7));
    std::string tok;
    while (std::getline(ss, tok, ',')) lengths.push_back(std::stod(tok));
    return planar_chain(lengths);
  }
  if (arg == "demo7") return demo_arm_7dof();
  return load_spec(arg);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<long>(v.size()));
}

CorrespondenceMode parse_mode(const std::string& m) {
  if (m == "static") return CorrespondenceMode::kStatic;
  if (m == "binary") return CorrespondenceMode::kBinaryBidirectional;
  if (m == "softmin") return CorrespondenceMode::kSoftmin;
  throw CLI::ValidationError("--corr must be static, binary or softmin");
}

struct CommonFlags {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string manifest_path;
  std::string weights = "1,1,0,0";
  std::string corr_weights;
  std::string corr = "static";
  double xi = -10.0;

  DistanceConfig distance_config() const {
    DistanceConfig cfg;
    const auto w = parse_list(weights);
    if (w.size() != 4)
      throw CLI::ValidationError("--weights needs 4 comma-separated values");
    cfg.weights = {w[0], w[1], w[2], w[3]};
    cfg.weights.validate();
    if (!corr_weights.empty()) {
      const auto cw = parse_list(corr_weights);
      if (cw.size() != 4)
        throw CLI::ValidationError("--corr-weights needs 4 values");
      cfg.corr_weights = DistanceWeights{cw[0], cw[1], cw[2], cw[3]};
    }
    cfg.mode = parse_mode(corr);
    cfg.softmin_xi = xi;
    return cfg;
  }
};

void add_common(CLI::App* cmd, CommonFlags& fl, bool with_distance = true) {
  cmd->add_option("--seed", fl.seed, "master random seed");
  cmd->add_option("--out-dir", fl.out_dir, "output directory");
  cmd->add_option("--manifest", fl.manifest_path,
                  "manifest path (default <out-dir>/manifest.json)");
  if (with_distance) {
    cmd->add_option("--weights", fl.weights,
                    "distance weights a_tr,a_rot,a_v,a_omega");
    cmd->add_option("--corr-weights", fl.corr_weights,
                    "separate weights for the correspondence matrix");
    cmd->add_option("--corr", fl.corr, "correspondence: static|binary|softmin");
    cmd->add_option("--xi", fl.xi, "softmin sharpness (negative)");
  }
}

std::string out_path(const CommonFlags& fl, const std::string& name) {
  fs::create_directories(fl.out_dir);
  return (fs::path(fl.out_dir) / name).string();
}

struct ManifestScope {
  RunManifest m;
  std::string path;
  std::chrono::steady_clock::time_point t0 =
      std::chrono::steady_clock::now();

  ManifestScope(const std::string& command, const CommonFlags& fl) {
    m.command = command;
    m.seeds["master"] = fl.seed;
    path = fl.manifest_path.empty() ? (fs::path(fl.out_dir) / "manifest.json").string()
                                    : fl.manifest_path;
    fs::create_directories(fs::path(path).parent_path().empty()
                               ? "."
                               : fs::path(path).parent_path().string());
  }
  void finish() {
    m.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    m.write(path);
  }
};

json config_snapshot(const DistanceConfig& cfg) {
  json j;
  j["weights"] = {cfg.weights.alpha_tr, cfg.weights.alpha_rot,
                  cfg.weights.alpha_v, cfg.weights.alpha_omega};
  if (cfg.corr_weights)
    j["corr_weights"] = {cfg.corr_weights->alpha_tr, cfg.corr_weights->alpha_rot,
                         cfg.corr_weights->alpha_v,
                         cfg.corr_weights->alpha_omega};
  j["mode"] = cfg.mode == CorrespondenceMode::kStatic ? "static"
              : cfg.mode == CorrespondenceMode::kBinaryBidirectional
                  ? "binary"
                  : "softmin";
  j["softmin_xi"] = cfg.softmin_xi;
  return j;
}

void write_scan_csv(const std::string& path, const Eigen::MatrixXd& grid) {
  CsvTable t;
  t.header = {"q1", "q2", "distance"};
  const int n = static_cast<int>(grid.rows());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      t.rows.push_back({-M_PI + 2 * M_PI * i / n, -M_PI + 2 * M_PI * j / n,
                        grid(i, j)});
    }
  }
  write_csv(path, t);
}

// ---------------------------------------------------------------- commands

int cmd_distance(const CommonFlags& fl, const std::string& expert_arg,
                 const std::string& learner_arg,
                 const std::vector<double>& q, const std::vector<double>& qhat,
                 const std::vector<double>& qdot,
                 const std::vector<double>& qhatdot, const std::string& csv) {
  const EmbodimentSpec expert = resolve_spec(expert_arg);
  const EmbodimentSpec learner = resolve_spec(learner_arg);
  const DistanceConfig cfg = fl.distance_config();

  Eigen::VectorXd qe = to_vec(q), ql = to_vec(qhat);
  Eigen::VectorXd qde = qdot.empty()
                            ? Eigen::VectorXd::Zero(expert.num_links())
                            : to_vec(qdot);
  Eigen::VectorXd qdl = qhatdot.empty()
                            ? Eigen::VectorXd::Zero(learner.num_links())
                            : to_vec(qhatdot);
  const JointState je = make_joint_state(expert, qe, qde);
  const JointState jl = make_joint_state(learner, ql, qdl);
  const double d = embodiment_distance(expert, learner, je, jl, cfg);

  ManifestScope ms("distance", fl);
  ms.m.config_json = config_snapshot(cfg).dump();
  if (!csv.empty()) {
    const EmbodimentState se = embodiment_state(expert, je);
    const EmbodimentState sl = embodiment_state(learner, jl);
    Eigen::MatrixXd wstat;
    const Eigen::MatrixXd* wptr = nullptr;
    if (cfg.mode == CorrespondenceMode::kStatic) {
      wstat = static_correspondence(expert, learner).W;
      wptr = &wstat;
    }
    CsvTable t;
    t.header = {"i", "j", "d_tr", "d_rot", "d_v", "d_omega", "w", "weighted"};
    for (const auto& r : distance_breakdown(se, sl, cfg, wptr)) {
      t.rows.push_back({static_cast<double>(r.i), static_cast<double>(r.j),
                        r.d_tr, r.d_rot, r.d_v, r.d_omega, r.w, r.weighted});
    }
    const std::string p = out_path(fl, csv);
    write_csv(p, t);
    ms.m.outputs.push_back(p);
  }
  json result;
  result["distance"] = d;
  std::cout << result.dump(2) << "\n";
  ms.finish();
  return 0;
}

int cmd_scan(const CommonFlags& fl, const std::string& expert_arg,
             const std::string& learner_arg, const std::vector<double>& q,
             int grid_n, const std::string& out_name) {
  const EmbodimentSpec expert = resolve_spec(expert_arg);
  const EmbodimentSpec learner = resolve_spec(learner_arg);
  const DistanceConfig cfg = fl.distance_config();
  const Eigen::MatrixXd grid =
      distance_grid(expert, learner, to_vec(q), cfg, grid_n);

  ManifestScope ms("scan", fl);
  ms.m.config_json = config_snapshot(cfg).dump();
  const std::string p = out_path(fl, out_name);
  write_scan_csv(p, grid);
  ms.m.outputs.push_back(p);

  json result;
  result["grid"] = grid_n;
  result["local_minima"] = count_local_minima_periodic(grid);
  auto [i, j] = grid_argmin(grid);
  result["argmin_q1"] = -M_PI + 2 * M_PI * i / grid_n;
  result["argmin_q2"] = -M_PI + 2 * M_PI * j / grid_n;
  result["min_distance"] = grid(i, j);
  std::cout << result.dump(2) << "\n";
  ms.finish();
  return 0;
}

int cmd_pose_imitate(const CommonFlags& fl, const std::string& expert_arg,
                     const std::string& learner_arg,
                     const std::vector<double>& q, int scan_n, int max_iters,
                     double step) {
  const EmbodimentSpec expert = resolve_spec(expert_arg);
  const EmbodimentSpec learner = resolve_spec(learner_arg);
  const DistanceConfig cfg = fl.distance_config();

  SolveOptions opt;
  opt.seed = fl.seed;
  opt.max_iters = max_iters;
  opt.step = step;
  const SolveResult res = solve_pose(expert, learner, to_vec(q), cfg, opt);

  ManifestScope ms("pose-imitate", fl);
  ms.m.config_json = config_snapshot(cfg).dump();

  json result;
  result["distance"] = res.distance;
  result["iterations"] = res.iterations;
  result["converged"] = res.converged;
  result["q_learner"] = std::vector<double>(res.q.data(),
                                            res.q.data() + res.q.size());
  const std::string rp = out_path(fl, "pose_result.json");
  write_text_file(rp, result.dump(2) + "\n");
  ms.m.outputs.push_back(rp);
  std::cout << result.dump(2) << "\n";

  if (scan_n > 0) {
    const Eigen::MatrixXd grid =
        distance_grid(expert, learner, to_vec(q), cfg, scan_n);
    const std::string sp = out_path(fl, "scan.csv");
    write_scan_csv(sp, grid);
    ms.m.outputs.push_back(sp);
  }
  ms.finish();
  return 0;
}

int cmd_train_map(const CommonFlags& fl, const std::string& expert_arg,
                  const std::string& learner_arg, TrainConfig tc) {
  const EmbodimentSpec expert = resolve_spec(expert_arg);
  const EmbodimentSpec learner = resolve_spec(learner_arg);
  const DistanceConfig cfg = fl.distance_config();
  tc.seed = fl.seed;

  const TrainResult r = train_pose_map(expert, learner, cfg, tc);

  ManifestScope ms("train-map", fl);
  json snap = config_snapshot(cfg);
  snap["dataset_size"] = tc.dataset_size;
  snap["minibatches"] = tc.minibatches;
  snap["epochs"] = tc.epochs;
  snap["learning_rate"] = tc.learning_rate;
  snap["validation_fraction"] = tc.validation_fraction;
  ms.m.config_json = snap.dump();

  const std::string model_path = out_path(fl, "pose_map.json");
  r.net.save(model_path);
  ms.m.outputs.push_back(model_path);

  CsvTable curve;
  curve.header = {"epoch", "train_dist", "val_dist"};
  for (std::size_t e = 0; e < r.train_curve.size(); ++e)
    curve.rows.push_back({static_cast<double>(e + 1), r.train_curve[e],
                          r.val_curve[e]});
  const std::string curve_path = out_path(fl, "train_curve.csv");
  write_csv(curve_path, curve);
  ms.m.outputs.push_back(curve_path);

  SvgSeries tr_s, va_s;
  tr_s.label = "train";
  va_s.label = "validation";
  va_s.color = "#d62728";
  for (std::size_t e = 0; e < r.train_curve.size(); ++e) {
    tr_s.x.push_back(static_cast<double>(e + 1));
    tr_s.y.push_back(r.train_curve[e]);
    va_s.x.push_back(static_cast<double>(e + 1));
    va_s.y.push_back(r.val_curve[e]);
  }
  const std::string svg_path = out_path(fl, "train_curve.svg");
  write_line_svg(svg_path, "pose map training distance", {tr_s, va_s});
  ms.m.outputs.push_back(svg_path);

  json result;
  result["baseline_val_distance"] = r.baseline_val_distance;
  result["final_val_distance"] =
      r.val_curve.empty() ? r.baseline_val_distance : r.val_curve.back();
  result["model"] = model_path;
  std::cout << result.dump(2) << "\n";
  ms.finish();
  return 0;
}

int cmd_eval_map(const CommonFlags& fl, const std::string& expert_arg,
                 const std::string& learner_arg, const std::string& model_path,
                 int n_test, std::uint64_t test_seed) {
  const EmbodimentSpec expert = resolve_spec(expert_arg);
  const EmbodimentSpec learner = resolve_spec(learner_arg);
  const DistanceConfig cfg = fl.distance_config();
  const Mlp net = Mlp::load(model_path);

  if (test_seed == derive_seed(net.init_seed, 1) ||
      test_seed == net.init_seed) {
    std::cerr << "warning: test seed matches the model's training seed; "
                 "evaluation would leak training data\n";
  }
  const Eigen::MatrixXd test = generate_dataset(expert, n_test, test_seed);
  const EvalStats stats = evaluate_pose_map(net, expert, learner, cfg, test);

  ManifestScope ms("eval-map", fl);
  ms.m.inputs.push_back(model_path);
  ms.m.config_json = config_snapshot(cfg).dump();
  CsvTable t;
  t.header = {"i", "distance"};
  for (int i = 0; i < stats.per_sample.size(); ++i)
    t.rows.push_back({static_cast<double>(i), stats.per_sample[i]});
  const std::string p = out_path(fl, "eval_map.csv");
  write_csv(p, t);
  ms.m.outputs.push_back(p);

  json result;
  result["mean_distance"] = stats.mean_distance;
  result["max_distance"] = stats.max_distance;
  result["samples"] = n_test;
  std::cout << result.dump(2) << "\n";
  ms.finish();
  return 0;
}

int cmd_record_expert(const CommonFlags& fl, const std::string& spec_arg,
                      int n, double duration, double dt, double kp, double ki,
                      double kd, double friction, double goal_range) {
  const EmbodimentSpec spec = resolve_spec(spec_arg);
  const DynamicsModel model(normalize(spec), friction);
  PidGains gains{kp, ki, kd};

  ManifestScope ms("record-expert", fl);
  json snap;
  snap["n"] = n;
  snap["duration"] = duration;
  snap["dt"] = dt;
  snap["gains"] = {kp, ki, kd};
  snap["friction"] = friction;
  snap["goal_range"] = goal_range;
  ms.m.config_json = snap.dump();

  Rng rng(fl.seed);
  int unsettled = 0;
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd goal =
        rng.uniform_vec(model.dof(), -goal_range, goal_range);
    const RecordedExpert rec =
        record_expert(model, goal, gains, duration, dt);
    if (!rec.settled) ++unsettled;
    char name[64];
    std::snprintf(name, sizeof(name), "traj_%03d.csv", k);
    const std::string p = out_path(fl, name);
    save_trajectory(rec.traj, p);
    ms.m.outputs.push_back(p);
  }
  json result;
  result["trajectories"] = n;
  result["unsettled"] = unsettled;
  std::cout << result.dump(2) << "\n";
  ms.finish();
  return 0;
}

std::vector<Trajectory> load_trajectory_dir(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  std::vector<Trajectory> out;
  for (const auto& f : files) out.push_back(load_trajectory(f));
  if (out.empty())
    throw std::runtime_error("no trajectory csv files in " + dir);
  return out;
}

int cmd_train_rl(const CommonFlags& fl, const std::string& expert_arg,
                 const std::string& learner_arg, const std::string& traj_dir,
                 PpoConfig cfg, double friction) {
  const EmbodimentSpec expert = resolve_spec(expert_arg);
  const EmbodimentSpec learner = resolve_spec(learner_arg);
  EnvConfig env_cfg = EnvConfig::defaults();
  env_cfg.friction = friction;
  env_cfg.distance = fl.distance_config();
  cfg.seed = fl.seed;

  const std::vector<Trajectory> trajs = load_trajectory_dir(traj_dir);
  PpoTrainer trainer(expert, learner, env_cfg, trajs, cfg);
  const auto curve = trainer.train();

  ManifestScope ms("train-rl", fl);
  json snap = config_snapshot(env_cfg.distance);
  snap["gamma"] = cfg.gamma;
  snap["clip"] = cfg.clip;
  snap["gae_lambda"] = cfg.gae_lambda;
  snap["rollout_steps"] = cfg.rollout_steps;
  snap["total_steps"] = cfg.total_steps;
  snap["lr_policy"] = cfg.lr_policy;
  snap["lr_value"] = cfg.lr_value;
  snap["trajectories"] = trajs.size();
  ms.m.config_json = snap.dump();
  ms.m.inputs.push_back(traj_dir);

  const std::string ck = out_path(fl, "policy.json");
  save_policy_checkpoint(ck, trainer.policy(), trainer.value_fn(), expert,
                         learner, env_cfg);
  ms.m.outputs.push_back(ck);

  CsvTable t;
  t.header = {"update", "steps", "mean_return", "mean_distance", "clip_frac"};
  SvgSeries dist_s;
  dist_s.label = "mean episode distance";
  for (const auto& row : curve) {
    t.rows.push_back({static_cast<double>(row.update),
                      static_cast<double>(row.steps), row.mean_return,
                      row.mean_distance, row.clip_fraction});
    dist_s.x.push_back(static_cast<double>(row.steps));
    dist_s.y.push_back(row.mean_distance);
  }
  const std::string cp = out_path(fl, "rl_curve.csv");
  write_csv(cp, t);
  ms.m.outputs.push_back(cp);
  const std::string sp = out_path(fl, "rl_curve.svg");
  write_line_svg(sp, "mean episode distance per update", {dist_s});
  ms.m.outputs.push_back(sp);

  json result;
  result["updates"] = curve.size();
  result["steps"] = curve.empty() ? 0 : curve.back().steps;
  result["final_mean_distance"] =
      curve.empty() ? -1.0 : curve.back().mean_distance;
  result["policy"] = ck;
  std::cout << result.dump(2) << "\n";
  ms.finish();
  return 0;
}

int cmd_eval_rl(const CommonFlags& fl, const std::string& policy_path,
                const std::string& traj_path) {
  const PolicyCheckpoint ck = load_policy_checkpoint(policy_path);
  const Trajectory traj = load_trajectory(traj_path);
  ImitationEnv env(ck.expert, ck.learner, ck.env_cfg);
  const std::vector<double> series = evaluate_policy(ck.policy, env, traj);

  ManifestScope ms("eval-rl", fl);
  ms.m.inputs = {policy_path, traj_path};
  CsvTable t, log;
  t.header = {"step", "distance"};
  log.header = {"step", "reward", "distance"};
  double mean = 0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    t.rows.push_back({static_cast<double>(k + 1), series[k]});
    log.rows.push_back({static_cast<double>(k + 1), -series[k], series[k]});
    mean += series[k];
  }
  mean /= series.empty() ? 1 : series.size();
  const std::string p = out_path(fl, "eval_rl.csv");
  write_csv(p, t);
  ms.m.outputs.push_back(p);
  const std::string lp = out_path(fl, "episode_log.csv");
  write_csv(lp, log);
  ms.m.outputs.push_back(lp);

  json result;
  result["steps"] = series.size();
  result["mean_distance"] = mean;
  std::cout << result.dump(2) << "\n";
  ms.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"embodiment distance toolkit: pose and motion imitation "
               "between dissimilar kinematic chains"};
  app.require_subcommand(1);

  // distance
  CommonFlags fl_dist;
  std::string d_expert, d_learner, d_csv;
  std::vector<double> d_q, d_qhat, d_qdot, d_qhatdot;
  auto* cd = app.add_subcommand("distance",
                                "one-shot distance between two states");
  add_common(cd, fl_dist);
  cd->add_option("--expert", d_expert)->required();
  cd->add_option("--learner", d_learner)->required();
  cd->add_option("--q", d_q, "expert joint angles")->required()->delimiter(',');
  cd->add_option("--qhat", d_qhat, "learner joint angles")
      ->required()
      ->delimiter(',');
  cd->add_option("--qdot", d_qdot, "expert joint velocities")->delimiter(',');
  cd->add_option("--qhatdot", d_qhatdot, "learner joint velocities")
      ->delimiter(',');
  cd->add_option("--csv", d_csv, "write the per-pair breakdown csv");

  // scan
  CommonFlags fl_scan;
  std::string s_expert, s_learner, s_out = "scan.csv";
  std::vector<double> s_q;
  int s_grid = 360;
  auto* cs = app.add_subcommand("scan", "distance grid over a 2-DOF learner");
  add_common(cs, fl_scan);
  cs->add_option("--expert", s_expert)->required();
  cs->add_option("--learner", s_learner)->required();
  cs->add_option("--q", s_q, "expert joint angles")->required()->delimiter(',');
  cs->add_option("--grid", s_grid, "grid resolution per axis");
  cs->add_option("--out", s_out, "output csv name");

  // pose-imitate
  CommonFlags fl_pose;
  std::string p_expert, p_learner;
  std::vector<double> p_q;
  int p_scan = 0, p_iters = 300;
  double p_step = 1.0;
  auto* cp = app.add_subcommand("pose-imitate",
                                "solve the learner pose by gradient descent");
  add_common(cp, fl_pose);
  cp->add_option("--expert", p_expert)->required();
  cp->add_option("--learner", p_learner)->required();
  cp->add_option("--q", p_q, "expert joint angles")->required()->delimiter(',');
  cp->add_option("--scan", p_scan, "also write an NxN distance grid");
  cp->add_option("--max-iters", p_iters);
  cp->add_option("--step", p_step, "initial gradient step");

  // train-map
  CommonFlags fl_tm;
  std::string tm_expert, tm_learner;
  TrainConfig tm_cfg;
  auto* ctm = app.add_subcommand("train-map",
                                 "train the expert-to-learner pose network");
  add_common(ctm, fl_tm);
  ctm->add_option("--expert", tm_expert)->required();
  ctm->add_option("--learner", tm_learner)->required();
  ctm->add_option("--samples", tm_cfg.dataset_size);
  ctm->add_option("--minibatches", tm_cfg.minibatches);
  ctm->add_option("--epochs", tm_cfg.epochs);
  ctm->add_option("--lr", tm_cfg.learning_rate);
  ctm->add_option("--val-fraction", tm_cfg.validation_fraction);

  // eval-map
  CommonFlags fl_em;
  std::string em_expert, em_learner, em_model;
  int em_n = 256;
  std::uint64_t em_seed = 9090;
  auto* cem = app.add_subcommand("eval-map",
                                 "evaluate a pose network on held-out poses");
  add_common(cem, fl_em);
  cem->add_option("--expert", em_expert)->required();
  cem->add_option("--learner", em_learner)->required();
  cem->add_option("--model", em_model)->required();
  cem->add_option("--test", em_n, "number of held-out samples");
  cem->add_option("--test-seed", em_seed, "seed for the held-out set");

  // record-expert
  CommonFlags fl_re;
  std::string re_spec;
  int re_n = 1;
  double re_duration = 5.0, re_dt = 0.1, re_kp = 3.0, re_ki = 0.0,
         re_kd = 3.5, re_friction = 0.05, re_goal_range = M_PI / 2;
  auto* cre = app.add_subcommand("record-expert",
                                 "record PID reaching trajectories");
  add_common(cre, fl_re, false);
  cre->add_option("--spec", re_spec)->required();
  cre->add_option("--n", re_n, "number of trajectories");
  cre->add_option("--duration", re_duration);
  cre->add_option("--dt", re_dt);
  cre->add_option("--kp", re_kp);
  cre->add_option("--ki", re_ki);
  cre->add_option("--kd", re_kd);
  cre->add_option("--friction", re_friction);
  cre->add_option("--goal-range", re_goal_range,
                  "goals drawn uniformly from [-range, range]");

  // train-rl
  CommonFlags fl_rl;
  std::string rl_expert, rl_learner, rl_trajs;
  PpoConfig rl_cfg;
  double rl_friction = 0.05;
  fl_rl.weights = "0,1,0.001,0.01";
  auto* crl = app.add_subcommand("train-rl",
                                 "train a torque policy with PPO");
  add_common(crl, fl_rl);
  crl->add_option("--expert", rl_expert)->required();
  crl->add_option("--learner", rl_learner)->required();
  crl->add_option("--trajs", rl_trajs, "directory of trajectory csv files")
      ->required();
  crl->add_option("--gamma", rl_cfg.gamma);
  crl->add_option("--steps", rl_cfg.total_steps, "environment step budget");
  crl->add_option("--rollout", rl_cfg.rollout_steps);
  crl->add_option("--lr", rl_cfg.lr_policy);
  crl->add_option("--lr-value", rl_cfg.lr_value);
  crl->add_option("--clip", rl_cfg.clip);
  crl->add_option("--target-distance", rl_cfg.target_mean_distance,
                  "stop early below this mean episode distance");
  crl->add_option("--friction", rl_friction);

  // eval-rl
  CommonFlags fl_erl;
  std::string erl_policy, erl_traj;
  auto* cerl = app.add_subcommand("eval-rl",
                                  "roll out a policy on one trajectory");
  add_common(cerl, fl_erl, false);
  cerl->add_option("--policy", erl_policy)->required();
  cerl->add_option("--traj", erl_traj)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cd->parsed())
      return cmd_distance(fl_dist, d_expert, d_learner, d_q, d_qhat, d_qdot,
                          d_qhatdot, d_csv);
    if (cs->parsed())
      return cmd_scan(fl_scan, s_expert, s_learner, s_q, s_grid, s_out);
    if (cp->parsed())
      return cmd_pose_imitate(fl_pose, p_expert, p_learner, p_q, p_scan,
                              p_iters, p_step);
    if (ctm->parsed()) return cmd_train_map(fl_tm, tm_expert, tm_learner, tm_cfg);
    if (cem->parsed())
      return cmd_eval_map(fl_em, em_expert, em_learner, em_model, em_n,
                          em_seed);
    if (cre->parsed())
      return cmd_record_expert(fl_re, re_spec, re_n, re_duration, re_dt,
                               re_kp, re_ki, re_kd, re_friction,
                               re_goal_range);
    if (crl->parsed())
      return cmd_train_rl(fl_rl, rl_expert, rl_learner, rl_trajs, rl_cfg,
                          rl_friction);
    if (cerl->parsed()) return cmd_eval_rl(fl_erl, erl_policy, erl_traj);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
  return 0;
}
