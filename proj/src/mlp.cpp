#include "emdist/mlp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace emdist {

Mlp::Mlp(const MlpConfig& cfg, Rng& rng) : cfg_(cfg) {
  const std::vector<int> arch = cfg.arch();
  layers_.resize(arch.size() - 1);
  for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
    const int fan_in = arch[l];
    const int fan_out = arch[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    layers_[l].W.resize(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c)
        layers_[l].W(r, c) = rng.uniform(-limit, limit);
    layers_[l].b = Eigen::VectorXd::Zero(fan_out);
  }
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  return forward_batch(x);
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd a = X;
  const int L = num_layers();
  for (int l = 0; l < L; ++l) {
    Eigen::MatrixXd z = (layers_[l].W * a).colwise() + layers_[l].b;
    if (l + 1 < L) {
      if (cfg_.hidden_activation == HiddenActivation::kLRelu)
        a = z.array().max(0.0) + cfg_.lrelu_slope * z.array().min(0.0);
      else
        a = z.array().tanh();
    } else if (cfg_.output_activation == OutputActivation::kTanhScaled) {
      a = cfg_.output_scale * z.array().tanh();
    } else {
      a = std::move(z);
    }
  }
  return a;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& X,
                                   Cache& cache) const {
  const int L = num_layers();
  cache.pre.assign(L, {});
  cache.act.assign(L + 1, {});
  cache.act[0] = X;
  for (int l = 0; l < L; ++l) {
    cache.pre[l] = (layers_[l].W * cache.act[l]).colwise() + layers_[l].b;
    const Eigen::MatrixXd& z = cache.pre[l];
    if (l + 1 < L) {
      if (cfg_.hidden_activation == HiddenActivation::kLRelu)
        cache.act[l + 1] =
            z.array().max(0.0) + cfg_.lrelu_slope * z.array().min(0.0);
      else
        cache.act[l + 1] = z.array().tanh();
    } else if (cfg_.output_activation == OutputActivation::kTanhScaled) {
      cache.act[l + 1] = cfg_.output_scale * z.array().tanh();
    } else {
      cache.act[l + 1] = z;
    }
  }
  return cache.act[L];
}

Mlp::Gradients Mlp::backward_batch(const Cache& cache,
                                   const Eigen::MatrixXd& dY) const {
  const int L = num_layers();
  Gradients g;
  g.layers.resize(L);
  Eigen::MatrixXd delta;  // dLoss/dz at current layer
  if (cfg_.output_activation == OutputActivation::kTanhScaled) {
    // y = s tanh(z): dy/dz = s (1 - tanh^2) = s - y^2 / s
    const Eigen::ArrayXXd y = cache.act[L].array();
    delta = dY.array() * (cfg_.output_scale - y * y / cfg_.output_scale);
  } else {
    delta = dY;
  }
  for (int l = L - 1; l >= 0; --l) {
    g.layers[l].W = delta * cache.act[l].transpose();
    g.layers[l].b = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd dA = layers_[l].W.transpose() * delta;
      if (cfg_.hidden_activation == HiddenActivation::kLRelu) {
        const Eigen::ArrayXXd mask =
            (cache.pre[l - 1].array() > 0.0)
                .select(Eigen::ArrayXXd::Constant(cache.pre[l - 1].rows(),
                                                  cache.pre[l - 1].cols(), 1.0),
                        cfg_.lrelu_slope);
        delta = dA.array() * mask;
      } else {
        const Eigen::ArrayXXd a = cache.act[l].array();
        delta = dA.array() * (1.0 - a * a);
      }
    } else {
      g.dX = layers_[l].W.transpose() * delta;
    }
  }
  return g;
}

int Mlp::num_params() const {
  int n = 0;
  for (const auto& l : layers_) {
    n += static_cast<int>(l.W.size());
    n += static_cast<int>(l.b.size());
  }
  return n;
}

Eigen::VectorXd Mlp::get_params() const {
  Eigen::VectorXd p(num_params());
  int at = 0;
  for (const auto& l : layers_) {
    p.segment(at, l.W.size()) =
        Eigen::Map<const Eigen::VectorXd>(l.W.data(), l.W.size());
    at += static_cast<int>(l.W.size());
    p.segment(at, l.b.size()) = l.b;
    at += static_cast<int>(l.b.size());
  }
  return p;
}

void Mlp::set_params(const Eigen::VectorXd& p) {
  if (p.size() != num_params())
    throw std::invalid_argument("set_params: size mismatch");
  int at = 0;
  for (auto& l : layers_) {
    Eigen::Map<Eigen::VectorXd>(l.W.data(), l.W.size()) =
        p.segment(at, l.W.size());
    at += static_cast<int>(l.W.size());
    l.b = p.segment(at, l.b.size());
    at += static_cast<int>(l.b.size());
  }
}

using nlohmann::json;

std::string Mlp::to_json_string() const {
  json j;
  j["format"] = "emdist-mlp";
  j["version"] = 1;
  j["arch"] = cfg_.arch();
  j["hidden_activation"] =
      cfg_.hidden_activation == HiddenActivation::kLRelu ? "lrelu" : "tanh";
  j["lrelu_slope"] = cfg_.lrelu_slope;
  j["output_activation"] =
      cfg_.output_activation == OutputActivation::kTanhScaled ? "tanh_scaled"
                                                              : "linear";
  j["output_scale"] = cfg_.output_scale;
  j["seed"] = init_seed;
  j["layers"] = json::array();
  for (const auto& l : layers_) {
    json lj;
    lj["W"] = json::array();
    for (int r = 0; r < l.W.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < l.W.cols(); ++c) row.push_back(l.W(r, c));
      lj["W"].push_back(row);
    }
    lj["b"] = json::array();
    for (int r = 0; r < l.b.size(); ++r) lj["b"].push_back(l.b[r]);
    j["layers"].push_back(lj);
  }
  return j.dump();
}

Mlp Mlp::from_json_string(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("format", "") != "emdist-mlp")
    throw std::runtime_error("not an emdist-mlp weight file");
  Mlp net;
  const std::vector<int> arch = j.at("arch").get<std::vector<int>>();
  if (arch.size() < 2) throw std::runtime_error("mlp arch too short");
  net.cfg_.input = arch.front();
  net.cfg_.output = arch.back();
  net.cfg_.hidden.assign(arch.begin() + 1, arch.end() - 1);
  net.cfg_.hidden_activation =
      j.value("hidden_activation", "lrelu") == std::string("tanh")
          ? HiddenActivation::kTanh
          : HiddenActivation::kLRelu;
  net.cfg_.lrelu_slope = j.value("lrelu_slope", 0.01);
  net.cfg_.output_activation = j.value("output_activation", "tanh_scaled") ==
                                       std::string("linear")
                                   ? OutputActivation::kLinear
                                   : OutputActivation::kTanhScaled;
  net.cfg_.output_scale = j.value("output_scale", M_PI);
  net.init_seed = j.value("seed", std::uint64_t{0});
  for (const auto& lj : j.at("layers")) {
    MlpLayer layer;
    const auto& wj = lj.at("W");
    const int rows = static_cast<int>(wj.size());
    const int cols = rows > 0 ? static_cast<int>(wj.at(0).size()) : 0;
    layer.W.resize(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) layer.W(r, c) = wj.at(r).at(c).get<double>();
    const auto& bj = lj.at("b");
    layer.b.resize(static_cast<int>(bj.size()));
    for (int r = 0; r < layer.b.size(); ++r) layer.b[r] = bj.at(r).get<double>();
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

void Mlp::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << to_json_string() << "\n";
}

Mlp Mlp::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

MlpParamsT<Var> mlp_inputs(Tape& tape, const Mlp& net) {
  MlpParamsT<Var> p;
  for (const auto& l : net.layers()) {
    MatX<Var> W(l.W.rows(), l.W.cols());
    for (int r = 0; r < l.W.rows(); ++r)
      for (int c = 0; c < l.W.cols(); ++c)
        W(r, c) = Var::input(tape, l.W(r, c));
    VecX<Var> b(l.b.size());
    for (int r = 0; r < l.b.size(); ++r) b[r] = Var::input(tape, l.b[r]);
    p.W.push_back(std::move(W));
    p.b.push_back(std::move(b));
  }
  return p;
}

}  // namespace emdist
