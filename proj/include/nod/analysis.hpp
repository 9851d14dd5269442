#pragma once

// Linear stability and bifurcation analysis around the neutral state z = 0.
//
// The linearization at z = 0 is diagonal in the Fourier basis with
//   lambda_k = (-1 + alpha * W_hat(k)) / tau,
// so the neutral state loses stability at alpha* = 1 / W_hat(k_max).

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nod/dynamics.hpp"

namespace nod {

struct SpectrumReport {
  std::map<int, double> eigenvalues;  ///< lambda_k for k in [-N/2, N/2-1]
  int k_max = 1;
  double alpha_star = 1.0;
  double leading_eigenvalue = 0.0;
};

/// Closed-form spectrum. Throws NonPositivePeak if W_hat(k_max) <= 0.
SpectrumReport eigenvalues(const ModelParams& params);

/// Dense circulant Jacobian of the discretized right-hand side at z = 0.
Eigen::MatrixXd linear_jacobian(const ModelParams& params);

/// Eigenvalues of linear_jacobian() from a general dense eigensolver, each
/// paired with the closed-form lambda_k. Throws MatchFailure if a pairing is
/// farther apart than 1e-8.
std::map<int, double> numerical_jacobian_spectrum(const ModelParams& params);

/// H(k, s) = 1 / (s - lambda_k). Throws PoleEvaluation near the pole.
std::complex<double> transfer_function(const ModelParams& params, int k, std::complex<double> s);

/// H~(k) = tau / (1 - alpha W_hat(k)) for every k. Throws
/// UnstableLinearization when alpha >= alpha*.
std::map<int, double> spatial_transfer_profile(const ModelParams& params);

/// u_hat(k_max).
std::complex<double> alignment(const RealField& u, int k_max);

// ---------------------------------------------------------------------------
// Equilibria and bifurcation sweeps

enum class Stability { Stable, Unstable, Marginal };

std::string to_string(Stability s);

struct StabilityReport {
  Stability stability = Stability::Marginal;
  /// Largest eigenvalue once the near-neutral rotation mode of a patterned
  /// state is set aside.
  double max_real_part = 0.0;
  /// Eigenvalue attributed to rotating the pattern (absent for flat states).
  std::optional<double> rotation_eigenvalue;
};

/// Stable below -1e-6, unstable above +1e-6, marginal in between.
StabilityReport classify_equilibrium(const RealField& z, const ModelParams& params);

struct NewtonOptions {
  int max_iterations = 60;
  double tolerance = 1e-11;  ///< on ||rhs||_inf with zero input
};

struct NewtonResult {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  ///< ||rhs(z, 0)||_inf
  RealField state;
};

/// Damped Newton iteration on 0 = -z + alpha W * S(z).
NewtonResult refine_equilibrium(const RealField& guess, const ModelParams& params,
                                const NewtonOptions& options = {});

/// Rotates the sample holding the maximum to index 0.
RealField canonical_rotation(const RealField& z);

struct BranchPoint {
  double alpha = 0.0;
  double norm = 0.0;   ///< L2(S^1) norm
  double max_z = 0.0;
  Stability stability = Stability::Marginal;
  int n_peaks = 0;
  int seed_index = -1;  ///< -1 for the neutral state and located saddles
  bool neutral = false;
  bool located_by_bisection = false;
  double residual = 0.0;

  [[nodiscard]] bool stable() const { return stability == Stability::Stable; }
};

struct SweepFailure {
  double alpha = 0.0;
  int seed_index = -1;
  std::string message;
};

struct BifurcationDiagram {
  std::vector<double> alphas;
  std::vector<BranchPoint> branches;
  std::optional<double> fold_alpha;
  std::vector<SweepFailure> failures;  ///< NewtonDivergence and similar, per point
};

struct SweepOptions {
  SimConfig sim{.dt = 0.01, .t_final = 150.0, .steady_tol = 1e-6, .steady_steps = 10,
                .record_stride = 1000000, .stop_at_steady = true};
  NewtonOptions newton;
  /// Bisect on the amplitude between decay and the stable pattern to find the
  /// saddle branch inside the bistable window.
  bool locate_unstable = false;
  int bisection_steps = 12;
  int threads = 1;
};

SweepOptions default_sweep_options();

/// a cos(2 pi k theta) for each amplitude a: small seeds follow a branch born
/// at alpha*, large ones reach patterns that coexist with a stable z = 0.
std::vector<RealField> default_sweep_seeds(const CircleGrid& grid, int k,
                                           const std::vector<double>& amplitudes = {0.05, 0.5,
                                                                                    1.0, 2.0});

/// For each alpha: integrate each seed with zero input, Newton-refine the
/// end state, deduplicate modulo rotation, classify stability.
BifurcationDiagram sweep_bifurcation(const ModelParams& params_template,
                                     const std::vector<double>& alpha_range,
                                     const std::vector<RealField>& seeds,
                                     const SweepOptions& options = default_sweep_options());

}  // namespace nod
