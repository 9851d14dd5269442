#include "nod/dynamics.hpp"

#include <cmath>

namespace nod {

std::shared_ptr<const Saturation> ModelParams::saturation() const {
  if (custom_saturation) return custom_saturation;
  return std::make_shared<ShiftedTanh>(xi);
}

void ModelParams::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::InvalidArgument, "tau must be positive");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must be non-negative");
  }
  if (!(xi >= 0.0) || !std::isfinite(xi)) {
    throw Error(ErrorCode::InvalidArgument, "xi must be non-negative");
  }
  if (kernel.spectral().symmetry_defect() > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "kernel coefficients are not conjugate symmetric");
  }
}

void SimConfig::validate(double tau) const {
  if (!(dt > 0.0) || dt > tau / 10.0 * (1.0 + 1e-12)) {
    throw Error(ErrorCode::InvalidArgument, "dt must lie in (0, tau/10]");
  }
  if (!(t_final > 0.0) || !std::isfinite(t_final)) {
    throw Error(ErrorCode::InvalidArgument, "t_final must be positive");
  }
  if (!(steady_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "steady_tol must be positive");
  if (steady_steps < 1) throw Error(ErrorCode::InvalidArgument, "steady_steps must be >= 1");
  if (record_stride < 1) throw Error(ErrorCode::InvalidArgument, "record_stride must be >= 1");
}

Convolver::Convolver(const Kernel& kernel) : n_(kernel.grid().size()) {
  fft_.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  half_kernel_.resize(n_ / 2 + 1);
  for (int k = 0; k <= n_ / 2; ++k) half_kernel_[k] = kernel.spectral().coeff(k);
}

void Convolver::apply(const Eigen::VectorXd& f, Eigen::VectorXd& out) {
  // The default-scaled inverse carries the 1/N of the forward convention.
  fft_.fwd(work_, f);
  work_.array() *= half_kernel_.array();
  fft_.inv(out, work_, n_);
}

Rhs::Rhs(const ModelParams& params)
    : params_(params), sat_(params.saturation()), conv_(params.kernel) {
  params_.validate();
}

void Rhs::field_map(const Eigen::VectorXd& z, Eigen::VectorXd& out) {
  sat_->apply(z, s_);
  conv_.apply(s_, ws_);
  out = params_.alpha * ws_ - z;
}

void Rhs::operator()(const Eigen::VectorXd& z, const Eigen::VectorXd& u, Eigen::VectorXd& out) {
  field_map(z, out);
  out = (out + u) / params_.tau;
}

RealField rhs(const RealField& z, const RealField& u, const ModelParams& params) {
  require_same_grid(z.grid(), u.grid());
  require_same_grid(z.grid(), params.grid());
  Rhs f(params);
  Eigen::VectorXd out;
  f(z.values(), u.values(), out);
  return {z.grid(), std::move(out)};
}

SimResult integrate(const RealField& z0, const InputSignal& input, const ModelParams& params,
                    const SimConfig& cfg, const StepObserver& observer) {
  require_same_grid(z0.grid(), params.grid());
  require_same_grid(z0.grid(), input.grid());
  params.validate();
  cfg.validate(params.tau);

  const CircleGrid grid = z0.grid();
  const int n = grid.size();
  Rhs f(params);
  const double dt = cfg.dt;
  const auto n_steps = static_cast<long>(std::ceil(cfg.t_final / dt - 1e-9));

  // u at the start of the current step is the end value of the previous one.
  Eigen::VectorXd u0 = input.at(0.0).values();
  Eigen::VectorXd u_half(n);
  Eigen::VectorXd u1(n);
  const bool varying = input.time_varying();

  Eigen::VectorXd z = z0.values();
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), tmp(n);

  std::vector<double> times;
  std::vector<RealField> snapshots;
  times.push_back(0.0);
  snapshots.emplace_back(grid, z);
  if (observer) observer(0.0, z);

  bool steady = false;
  int quiet_steps = 0;
  long step = 0;
  for (; step < n_steps; ++step) {
    const double t = static_cast<double>(step) * dt;
    const double t_half = t + 0.5 * dt;
    const double t_next = static_cast<double>(step + 1) * dt;
    if (varying) {
      u_half = input.at(t_half).values();
      u1 = input.at(t_next).values();
    } else {
      u_half = u0;
      u1 = u0;
    }

    f(z, u0, k1);
    if (cfg.stop_at_steady && k1.cwiseAbs().maxCoeff() < cfg.steady_tol) {
      ++quiet_steps;
      if (quiet_steps >= cfg.steady_steps && t >= input.static_after()) {
        steady = true;
        break;
      }
    } else {
      quiet_steps = 0;
    }
    tmp = z + 0.5 * dt * k1;
    f(tmp, u_half, k2);
    tmp = z + 0.5 * dt * k2;
    f(tmp, u_half, k3);
    tmp = z + dt * k3;
    f(tmp, u1, k4);
    z += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    if (!z.allFinite() || z.cwiseAbs().maxCoeff() > kDivergenceBound) {
      throw Error(ErrorCode::Diverged, "state exceeded " + std::to_string(kDivergenceBound) +
                                           " at t=" + std::to_string(t_next));
    }
    if (observer) observer(t_next, z);
    if ((step + 1) % cfg.record_stride == 0) {
      times.push_back(t_next);
      snapshots.emplace_back(grid, z);
    }
    u0.swap(u1);
  }
  const double t_end = static_cast<double>(step) * dt;
  if (times.back() != t_end) {
    times.push_back(t_end);
    snapshots.emplace_back(grid, z);
  }
  return SimResult{std::move(times), std::move(snapshots), steady, t_end, RealField(grid, z)};
}

int count_peaks(const RealField& f, double rel_threshold) {
  const auto& v = f.values();
  const int n = f.size();
  const double top = v.maxCoeff();
  if (!(top > 0.0)) return 0;
  const double floor = rel_threshold * top;

  // Start scanning right after a sample that differs from its successor so
  // every plateau is seen whole.
  int start = -1;
  for (int j = 0; j < n; ++j) {
    if (v[j] != v[(j + 1) % n]) {
      start = (j + 1) % n;
      break;
    }
  }
  if (start < 0) return 0;  // constant field

  int peaks = 0;
  int j = start;
  int visited = 0;
  while (visited < n) {
    int len = 1;
    while (len < n && v[(j + len) % n] == v[j]) ++len;
    const double before = v[(j - 1 + n) % n];
    const double after = v[(j + len) % n];
    if (v[j] > before && v[j] > after && v[j] > floor) ++peaks;
    j = (j + len) % n;
    visited += len;
  }
  return peaks;
}

}  // namespace nod
