#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace emdist {

// Reverse-mode tape over scalar operations. Nodes are appended in evaluation
// order, so one reverse sweep propagates adjoints; the sweep never mutates
// forward values. One tape per thread of work, never shared.
class Tape {
 public:
  struct Record {
    std::int32_t a;
    std::int32_t b;
    double da;
    double db;
  };

  int input(double value) { return push(value, -1, 0.0, -1, 0.0); }

  int push(double value, std::int32_t a, double da, std::int32_t b, double db) {
    values_.push_back(value);
    recs_.push_back({a, b, da, db});
    return static_cast<int>(values_.size()) - 1;
  }

  double value(int idx) const { return values_[idx]; }
  std::size_t size() const { return values_.size(); }

  void clear() {
    values_.clear();
    recs_.clear();
  }

  void reserve(std::size_t n) {
    values_.reserve(n);
    recs_.reserve(n);
  }

  // Adjoint of every node with respect to the node at `output`.
  std::vector<double> gradient(int output) const {
    std::vector<double> adj(values_.size(), 0.0);
    adj[output] = 1.0;
    for (int i = static_cast<int>(values_.size()) - 1; i >= 0; --i) {
      const double a = adj[i];
      if (a == 0.0) continue;
      const Record& r = recs_[i];
      if (r.a >= 0) adj[r.a] += a * r.da;
      if (r.b >= 0) adj[r.b] += a * r.db;
    }
    return adj;
  }

 private:
  std::vector<double> values_;
  std::vector<Record> recs_;
};

// Scalar recorded on a Tape. A Var without a tape entry is a plain constant;
// arithmetic only touches the tape when a tracked operand is involved, so
// Eigen expressions mixing constants and tracked values stay cheap.
class Var {
 public:
  Var() = default;
  Var(double v) : v_(v) {}  // NOLINT: implicit by design, lifts constants
  Var(Tape* t, int idx, double v) : tape_(t), idx_(idx), v_(v) {}

  static Var input(Tape& t, double v) { return Var(&t, t.input(v), v); }

  double value() const { return v_; }
  int index() const { return idx_; }
  Tape* tape() const { return tape_; }
  bool tracked() const { return idx_ >= 0; }

  Var& operator+=(const Var& o);
  Var& operator-=(const Var& o);
  Var& operator*=(const Var& o);
  Var& operator/=(const Var& o);

 private:
  Tape* tape_ = nullptr;
  int idx_ = -1;
  double v_ = 0.0;
};

namespace detail {

inline Var unary(const Var& x, double value, double dx) {
  if (!x.tracked()) return Var(value);
  Tape* t = x.tape();
  return Var(t, t->push(value, x.index(), dx, -1, 0.0), value);
}

inline Var binary(const Var& x, const Var& y, double value, double dx,
                  double dy) {
  Tape* t = x.tape() ? x.tape() : y.tape();
  if (!t) return Var(value);
  return Var(t, t->push(value, x.index(), dx, y.index(), dy), value);
}

}  // namespace detail

inline Var operator+(const Var& x, const Var& y) {
  return detail::binary(x, y, x.value() + y.value(), 1.0, 1.0);
}
inline Var operator-(const Var& x, const Var& y) {
  return detail::binary(x, y, x.value() - y.value(), 1.0, -1.0);
}
inline Var operator*(const Var& x, const Var& y) {
  return detail::binary(x, y, x.value() * y.value(), y.value(), x.value());
}
inline Var operator/(const Var& x, const Var& y) {
  const double inv = 1.0 / y.value();
  return detail::binary(x, y, x.value() * inv, inv,
                        -x.value() * inv * inv);
}
inline Var operator-(const Var& x) { return detail::unary(x, -x.value(), -1.0); }
inline const Var& operator+(const Var& x) { return x; }

inline Var& Var::operator+=(const Var& o) { return *this = *this + o; }
inline Var& Var::operator-=(const Var& o) { return *this = *this - o; }
inline Var& Var::operator*=(const Var& o) { return *this = *this * o; }
inline Var& Var::operator/=(const Var& o) { return *this = *this / o; }

inline bool operator<(const Var& x, const Var& y) { return x.value() < y.value(); }
inline bool operator>(const Var& x, const Var& y) { return x.value() > y.value(); }
inline bool operator<=(const Var& x, const Var& y) { return x.value() <= y.value(); }
inline bool operator>=(const Var& x, const Var& y) { return x.value() >= y.value(); }
inline bool operator==(const Var& x, const Var& y) { return x.value() == y.value(); }
inline bool operator!=(const Var& x, const Var& y) { return x.value() != y.value(); }

inline Var sin(const Var& x) {
  return detail::unary(x, std::sin(x.value()), std::cos(x.value()));
}
inline Var cos(const Var& x) {
  return detail::unary(x, std::cos(x.value()), -std::sin(x.value()));
}
inline Var sqrt(const Var& x) {
  const double s = std::sqrt(x.value());
  return detail::unary(x, s, 0.5 / s);
}
inline Var exp(const Var& x) {
  const double e = std::exp(x.value());
  return detail::unary(x, e, e);
}
inline Var log(const Var& x) {
  return detail::unary(x, std::log(x.value()), 1.0 / x.value());
}
inline Var tanh(const Var& x) {
  const double t = std::tanh(x.value());
  return detail::unary(x, t, 1.0 - t * t);
}
inline Var abs(const Var& x) {
  return detail::unary(x, std::abs(x.value()), x.value() < 0.0 ? -1.0 : 1.0);
}

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

inline bool is_finite(double x) { return std::isfinite(x); }
inline bool is_finite(const Var& x) { return std::isfinite(x.value()); }

template <typename S>
S leaky_relu(const S& x, double slope) {
  return x > S(0) ? x : S(slope) * x;
}

}  // namespace emdist

namespace Eigen {

template <>
struct NumTraits<emdist::Var> : NumTraits<double> {
  typedef emdist::Var Real;
  typedef emdist::Var NonInteger;
  typedef emdist::Var Nested;
  typedef double Literal;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 3,
    MulCost = 3
  };
  static inline Real epsilon() { return Real(NumTraits<double>::epsilon()); }
  static inline Real dummy_precision() {
    return Real(NumTraits<double>::dummy_precision());
  }
  static inline Real highest() { return Real(NumTraits<double>::highest()); }
  static inline Real lowest() { return Real(NumTraits<double>::lowest()); }
  static inline int digits10() { return NumTraits<double>::digits10(); }
};

template <typename BinaryOp>
struct ScalarBinaryOpTraits<emdist::Var, double, BinaryOp> {
  typedef emdist::Var ReturnType;
};
template <typename BinaryOp>
struct ScalarBinaryOpTraits<double, emdist::Var, BinaryOp> {
  typedef emdist::Var ReturnType;
};

}  // namespace Eigen

namespace emdist {

/// Gradient of `output` with respect to each entry of `inputs`.
inline Eigen::VectorXd input_gradient(const Tape& tape, const Var& output,
                                      const std::vector<Var>& inputs) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<int>(inputs.size()));
  if (!output.tracked()) return g;
  const std::vector<double> adj = tape.gradient(output.index());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].tracked()) g[static_cast<int>(i)] = adj[inputs[i].index()];
  }
  return g;
}

inline Eigen::Matrix<Var, Eigen::Dynamic, 1> make_inputs(
    Tape& tape, const Eigen::VectorXd& x) {
  Eigen::Matrix<Var, Eigen::Dynamic, 1> out(x.size());
  for (int i = 0; i < x.size(); ++i) out[i] = Var::input(tape, x[i]);
  return out;
}

}  // namespace emdist
