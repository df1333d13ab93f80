#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "emdist/autodiff.hpp"
#include "emdist/rng.hpp"
#include "emdist/se3.hpp"

namespace emdist {

enum class OutputActivation { kTanhScaled, kLinear };
enum class HiddenActivation { kLRelu, kTanh };

struct MlpConfig {
  int input = 1;
  std::vector<int> hidden = {32, 32, 32};
  int output = 1;
  HiddenActivation hidden_activation = HiddenActivation::kLRelu;
  double lrelu_slope = 0.01;
  OutputActivation output_activation = OutputActivation::kTanhScaled;
  double output_scale = M_PI;

  std::vector<int> arch() const {
    std::vector<int> a;
    a.push_back(input);
    for (int h : hidden) a.push_back(h);
    a.push_back(output);
    return a;
  }
};

struct MlpLayer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
};

template <typename S>
struct MlpParamsT {
  std::vector<MatX<S>> W;
  std::vector<VecX<S>> b;
};

/// Fully connected network with leaky-ReLU hidden layers. The tanh-scaled
/// output keeps every component inside [-scale, scale] for any parameters.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const MlpConfig& cfg, Rng& rng);  // Glorot-uniform weights, zero biases

  const MlpConfig& config() const { return cfg_; }
  const std::vector<MlpLayer>& layers() const { return layers_; }
  std::vector<MlpLayer>& layers() { return layers_; }
  int num_layers() const { return static_cast<int>(layers_.size()); }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& X) const;

  struct Cache {
    std::vector<Eigen::MatrixXd> pre;  // pre-activations per layer
    std::vector<Eigen::MatrixXd> act;  // activations per layer (act[0] = X)
  };
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& X, Cache& cache) const;

  struct Gradients {
    std::vector<MlpLayer> layers;
    Eigen::MatrixXd dX;
  };
  /// Analytic backprop through the cached forward pass; dY holds the loss
  /// gradient at the network output, one column per sample.
  Gradients backward_batch(const Cache& cache,
                           const Eigen::MatrixXd& dY) const;

  // flattened parameter access (optimizer-facing)
  int num_params() const;
  Eigen::VectorXd get_params() const;
  void set_params(const Eigen::VectorXd& p);

  std::string to_json_string() const;
  static Mlp from_json_string(const std::string& text);
  void save(const std::string& path) const;
  static Mlp load(const std::string& path);

  std::uint64_t init_seed = 0;

 private:
  MlpConfig cfg_;
  std::vector<MlpLayer> layers_;
};

/// Forward pass generic over the parameter/input scalar; the Var
/// instantiation is what puts the network on a tape.
template <typename S>
MatX<S> mlp_forward(const MlpParamsT<S>& params, const MlpConfig& cfg,
                    const MatX<S>& X) {
  using std::tanh;
  MatX<S> a = X;
  const int L = static_cast<int>(params.W.size());
  for (int l = 0; l < L; ++l) {
    MatX<S> z = params.W[l] * a;
    for (int c = 0; c < z.cols(); ++c) z.col(c) += params.b[l];
    if (l + 1 < L) {
      for (int r = 0; r < z.rows(); ++r)
        for (int c = 0; c < z.cols(); ++c)
          z(r, c) = cfg.hidden_activation == HiddenActivation::kLRelu
                        ? leaky_relu(z(r, c), cfg.lrelu_slope)
                        : tanh(z(r, c));
    } else if (cfg.output_activation == OutputActivation::kTanhScaled) {
      for (int r = 0; r < z.rows(); ++r)
        for (int c = 0; c < z.cols(); ++c)
          z(r, c) = S(cfg.output_scale) * tanh(z(r, c));
    }
    a = std::move(z);
  }
  return a;
}

/// Copies the network parameters onto a tape as tracked inputs.
MlpParamsT<Var> mlp_inputs(Tape& tape, const Mlp& net);

}  // namespace emdist
