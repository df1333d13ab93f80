#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>

#include "emdist/mlp.hpp"
#include "emdist/rng.hpp"

using namespace emdist;

TEST_SUITE("mlp") {

TEST_CASE("tanh-scaled outputs stay inside the angle range") {
  MlpConfig mc;
  mc.input = 4;
  mc.hidden = {32, 32, 32};
  mc.output = 3;
  Rng rng(2);
  Mlp net(mc, rng);
  // blow the weights up; the bound must still hold
  for (auto& l : net.layers()) l.W *= 50.0;
  Rng xr(3);
  for (int k = 0; k < 200; ++k) {
    const Eigen::VectorXd y = net.forward(xr.uniform_vec(4, -10, 10));
    for (int i = 0; i < y.size(); ++i) {
      CHECK(y[i] <= M_PI);
      CHECK(y[i] >= -M_PI);
    }
  }
}

TEST_CASE("initialization is deterministic per seed") {
  MlpConfig mc;
  mc.input = 3;
  mc.hidden = {16};
  mc.output = 2;
  Rng a(77), b(77), c(78);
  Mlp na(mc, a), nb(mc, b), nc(mc, c);
  CHECK(na.get_params() == nb.get_params());
  CHECK(na.get_params() != nc.get_params());
}

TEST_CASE("batch forward equals per-sample forward") {
  MlpConfig mc;
  mc.input = 5;
  mc.hidden = {16, 16};
  mc.output = 4;
  Rng rng(5);
  Mlp net(mc, rng);
  Eigen::MatrixXd X(5, 7);
  for (int i = 0; i < X.size(); ++i) X(i) = rng.uniform(-2, 2);
  const Eigen::MatrixXd Y = net.forward_batch(X);
  for (int c = 0; c < X.cols(); ++c) {
    const Eigen::VectorXd y = net.forward(X.col(c));
    CHECK((Y.col(c) - y).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("templated forward agrees with the double path") {
  for (auto act : {HiddenActivation::kLRelu, HiddenActivation::kTanh}) {
    MlpConfig mc;
    mc.input = 3;
    mc.hidden = {8, 8};
    mc.output = 2;
    mc.hidden_activation = act;
    Rng rng(11);
    Mlp net(mc, rng);
    Eigen::MatrixXd X(3, 4);
    for (int i = 0; i < X.size(); ++i) X(i) = rng.uniform(-3, 3);

    MlpParamsT<double> p;
    for (const auto& l : net.layers()) {
      p.W.push_back(l.W);
      p.b.push_back(l.b);
    }
    const Eigen::MatrixXd a = net.forward_batch(X);
    const Eigen::MatrixXd b = mlp_forward(p, mc, X);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("analytic backward matches finite differences") {
  for (auto act : {HiddenActivation::kLRelu, HiddenActivation::kTanh}) {
    for (auto out : {OutputActivation::kTanhScaled, OutputActivation::kLinear}) {
      MlpConfig mc;
      mc.input = 3;
      mc.hidden = {6, 5};
      mc.output = 2;
      mc.hidden_activation = act;
      mc.output_activation = out;
      Rng rng(21);
      Mlp net(mc, rng);
      Eigen::MatrixXd X(3, 4);
      for (int i = 0; i < X.size(); ++i) X(i) = rng.uniform(-2, 2);

      // loss = sum of squares of outputs
      auto loss = [&](const Mlp& m) {
        return m.forward_batch(X).squaredNorm();
      };
      Mlp::Cache cache;
      const Eigen::MatrixXd Y = net.forward_batch(X, cache);
      const Mlp::Gradients g = net.backward_batch(cache, 2.0 * Y);

      Rng pick(31);
      for (int t = 0; t < 8; ++t) {
        const int layer = pick.uniform_int(net.num_layers());
        auto& W = net.layers()[layer].W;
        const int r = pick.uniform_int(static_cast<int>(W.rows()));
        const int c = pick.uniform_int(static_cast<int>(W.cols()));
        const double h = 1e-6;
        Mlp hi = net, lo = net;
        hi.layers()[layer].W(r, c) += h;
        lo.layers()[layer].W(r, c) -= h;
        const double fd = (loss(hi) - loss(lo)) / (2 * h);
        CHECK(std::abs(g.layers[layer].W(r, c) - fd) /
                  std::max(1.0, std::abs(fd)) <
              1e-4);
      }
    }
  }
}

TEST_CASE("weight file round trip") {
  MlpConfig mc;
  mc.input = 3;
  mc.hidden = {8};
  mc.output = 2;
  mc.hidden_activation = HiddenActivation::kTanh;
  mc.output_activation = OutputActivation::kLinear;
  Rng rng(41);
  Mlp net(mc, rng);
  net.init_seed = 41;

  const std::string text = net.to_json_string();
  CHECK(text.find("\"arch\"") != std::string::npos);
  CHECK(text.find("\"seed\"") != std::string::npos);
  CHECK(text.find("\"layers\"") != std::string::npos);
  CHECK(text.find("\"W\"") != std::string::npos);
  CHECK(text.find("\"b\"") != std::string::npos);

  const Mlp back = Mlp::from_json_string(text);
  CHECK(back.get_params() == net.get_params());
  CHECK(back.config().hidden_activation == HiddenActivation::kTanh);
  CHECK(back.config().output_activation == OutputActivation::kLinear);
  CHECK(back.init_seed == 41);

  Eigen::VectorXd x(3);
  x << 0.1, -0.5, 2.0;
  CHECK((back.forward(x) - net.forward(x)).cwiseAbs().maxCoeff() == 0.0);

  const char* tmp = "/tmp/emdist_mlp_roundtrip.json";
  net.save(tmp);
  const Mlp loaded = Mlp::load(tmp);
  CHECK(loaded.get_params() == net.get_params());
  std::remove(tmp);
}

TEST_CASE("param vector round trip") {
  MlpConfig mc;
  mc.input = 2;
  mc.hidden = {4};
  mc.output = 1;
  Rng rng(51);
  Mlp net(mc, rng);
  const Eigen::VectorXd p = net.get_params();
  CHECK(p.size() == net.num_params());
  Mlp other = net;
  Eigen::VectorXd p2 = p;
  p2.array() += 0.5;
  other.set_params(p2);
  CHECK(other.get_params() == p2);
  other.set_params(p);
  CHECK(other.get_params() == p);
}

}  // TEST_SUITE
