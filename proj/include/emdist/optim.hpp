#pragma once

#include <Eigen/Core>

#include <cmath>

namespace emdist {

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    if (m_.size() != params.size()) {
      m_ = Eigen::VectorXd::Zero(params.size());
      v_ = Eigen::VectorXd::Zero(params.size());
      t_ = 0;
    }
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_.array().matrix() +
         (1.0 - beta2_) * grad.array().square().matrix();
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    params.array() -= lr_ * (m_.array() / bc1) /
                      ((v_.array() / bc2).sqrt() + eps_);
  }

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  Eigen::VectorXd m_, v_;
  long t_ = 0;
};

}  // namespace emdist
