#pragma once

// Time integration of
//   tau dz/dt = -z + alpha * (W * S(z)) + u
// on the circle grid, with the convolution evaluated in Fourier space.

#include <functional>
#include <memory>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "nod/circle_grid.hpp"
#include "nod/input.hpp"
#include "nod/kernel.hpp"
#include "nod/saturation.hpp"

namespace nod {

struct ModelParams {
  double tau = 1.0;
  double alpha = 0.98;
  double xi = 0.7;
  Kernel kernel;
  /// Optional replacement for the shifted tanh selected by `xi`.
  std::shared_ptr<const Saturation> custom_saturation;

  [[nodiscard]] const CircleGrid& grid() const noexcept { return kernel.grid(); }
  [[nodiscard]] std::shared_ptr<const Saturation> saturation() const;
  /// Throws InvalidArgument on tau <= 0, alpha < 0, xi < 0 or a kernel that
  /// does not synthesize to a real field.
  void validate() const;
};

struct SimConfig {
  double dt = 0.01;
  double t_final = 200.0;
  double steady_tol = 1e-8;
  int steady_steps = 10;
  int record_stride = 100;
  bool stop_at_steady = true;

  /// dt <= tau/10 and positive settings.
  void validate(double tau) const;
};

struct SimResult {
  std::vector<double> times;
  std::vector<RealField> snapshots;
  bool reached_steady = false;
  double t_end = 0.0;
  RealField final_state;
};

/// Circular convolution (W * f)(theta_j) ~ int W(theta_j - phi) f(phi) dphi,
/// evaluated as the inverse transform of W_hat(k) f_hat(k). Holds FFT plans,
/// so an instance must not be shared between threads.
class Convolver {
 public:
  explicit Convolver(const Kernel& kernel);

  void apply(const Eigen::VectorXd& f, Eigen::VectorXd& out);

 private:
  int n_;
  Eigen::VectorXcd half_kernel_;
  Eigen::FFT<double> fft_;
  Eigen::VectorXcd work_;
};

/// Right-hand side dz/dt evaluated with reusable buffers.
class Rhs {
 public:
  explicit Rhs(const ModelParams& params);

  void operator()(const Eigen::VectorXd& z, const Eigen::VectorXd& u, Eigen::VectorXd& out);

  /// -z + alpha * W * S(z), i.e. tau * rhs without input.
  void field_map(const Eigen::VectorXd& z, Eigen::VectorXd& out);

  [[nodiscard]] const ModelParams& params() const noexcept { return params_; }

 private:
  ModelParams params_;
  std::shared_ptr<const Saturation> sat_;
  Convolver conv_;
  Eigen::VectorXd s_;
  Eigen::VectorXd ws_;
};

RealField rhs(const RealField& z, const RealField& u, const ModelParams& params);

/// Called after every accepted step (and once at t = 0).
using StepObserver = std::function<void(double t, const Eigen::VectorXd& z)>;

/// Fixed-step classical RK4. Stops early once ||dz/dt||_inf < steady_tol for
/// steady_steps consecutive steps and the input has stopped changing.
/// Throws Diverged if ||z||_inf exceeds 1e6 or becomes non-finite.
SimResult integrate(const RealField& z0, const InputSignal& input, const ModelParams& params,
                    const SimConfig& cfg, const StepObserver& observer = {});

inline constexpr double kDivergenceBound = 1e6;

/// Number of cyclic strict local maxima above rel_threshold * max(f);
/// plateaus count once. Zero when max(f) <= 0.
int count_peaks(const RealField& f, double rel_threshold = 0.5);

}  // namespace nod
