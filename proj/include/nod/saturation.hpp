#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <memory>

namespace nod {

/// Saturating nonlinearity S with S(0) = 0 and S'(0) = 1. Derivatives are
/// exposed so the linearization and Newton refinement can use them.
class Saturation {
 public:
  virtual ~Saturation() = default;

  [[nodiscard]] virtual double value(double x) const = 0;
  [[nodiscard]] virtual double slope(double x) const = 0;
  [[nodiscard]] virtual double curvature(double x) const = 0;

  virtual void apply(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
    out.resize(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = value(x[i]);
  }
};

/// S(x) = (tanh(x - xi) - tanh(-xi)) / sech^2(xi).
class ShiftedTanh final : public Saturation {
 public:
  explicit ShiftedTanh(double xi) : xi_(xi), tanh_xi_(std::tanh(xi)) {
    const double c = std::cosh(xi);
    cosh2_ = c * c;
  }

  [[nodiscard]] double shift() const noexcept { return xi_; }

  [[nodiscard]] double value(double x) const override {
    return (std::tanh(x - xi_) + tanh_xi_) * cosh2_;
  }
  [[nodiscard]] double slope(double x) const override {
    const double t = std::tanh(x - xi_);
    return (1.0 - t * t) * cosh2_;
  }
  [[nodiscard]] double curvature(double x) const override {
    const double t = std::tanh(x - xi_);
    return -2.0 * t * (1.0 - t * t) * cosh2_;
  }

  /// Vectorized via tanh(y) = 1 - 2 / (exp(2y) + 1); agrees with value()
  /// to a few ulps of absolute error.
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override {
    out = (1.0 + tanh_xi_ - 2.0 / ((2.0 * (x.array() - xi_)).exp() + 1.0)) * cosh2_;
  }

 private:
  double xi_;
  double tanh_xi_;
  double cosh2_;
};

/// Scalar form of the shifted tanh.
inline double saturation(double x, double xi) { return ShiftedTanh(xi).value(x); }

}  // namespace nod
