#include "nod/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "nod/parallel.hpp"

namespace nod {

namespace {

constexpr double kMatchTol = 1e-8;
constexpr double kPoleTol = 1e-14;
constexpr double kStabilityMargin = 1e-6;
constexpr double kNeutralTol = 1e-6;
constexpr double kDedupTol = 1e-6;
// Where the linearization is singular the residual is cubic in amplitude, so
// Newton stops on states of order cbrt(tolerance); those count as z = 0.
constexpr double kFlatTol = 1e-3;

double closed_form_lambda(const ModelParams& params, int k) {
  return (-1.0 + params.alpha * params.kernel.coefficient(k)) / params.tau;
}

Stability classify(double max_real) {
  if (max_real < -kStabilityMargin) return Stability::Stable;
  if (max_real > kStabilityMargin) return Stability::Unstable;
  return Stability::Marginal;
}

Eigen::MatrixXd circulant(const Kernel& kernel) {
  const int n = kernel.grid().size();
  const auto& w = kernel.real_space().values();
  Eigen::MatrixXd c(n, n);
  for (int j = 0; j < n; ++j) {
    for (int l = 0; l < n; ++l) c(j, l) = w[((j - l) % n + n) % n] / n;
  }
  return c;
}

// d z / d theta by spectral differentiation.
Eigen::VectorXd spectral_derivative(const RealField& z) {
  const CircleGrid& grid = z.grid();
  auto slots = to_spectral(z).slots();
  for (int s = 0; s < grid.size(); ++s) {
    const int k = grid.frequency(s);
    slots[s] *= (k == grid.k_min()) ? std::complex<double>(0.0)
                                    : std::complex<double>(0.0, 2.0 * std::numbers::pi * k);
  }
  return synthesize(SpectralField(grid, slots)).real();
}

// Rotation-invariant fingerprint: magnitudes of the Fourier coefficients.
Eigen::VectorXd fingerprint(const RealField& z) { return to_spectral(z).slots().cwiseAbs(); }

double l2_norm(const RealField& z) { return std::sqrt(inner_product(z, z)); }

struct AlphaResult {
  std::vector<BranchPoint> branches;
  std::vector<SweepFailure> failures;
};

BranchPoint make_point(double alpha, const RealField& z, const ModelParams& params, int seed_index,
                       double residual) {
  BranchPoint p;
  p.alpha = alpha;
  p.norm = l2_norm(z);
  p.max_z = z.max();
  p.stability = classify_equilibrium(z, params).stability;
  p.n_peaks = count_peaks(z, 0.5);
  p.seed_index = seed_index;
  p.residual = residual;
  return p;
}

AlphaResult sweep_one(const ModelParams& base, double alpha, const std::vector<RealField>& seeds,
                      const SweepOptions& options) {
  AlphaResult out;
  ModelParams params = base;
  params.alpha = alpha;
  const CircleGrid& grid = params.grid();
  const InputSignal no_input = InputSignal::constant(RealField::zeros(grid));

  double neutral_max = -std::numeric_limits<double>::infinity();
  for (int k = grid.k_min(); k <= grid.k_max(); ++k) {
    neutral_max = std::max(neutral_max, closed_form_lambda(params, k));
  }
  BranchPoint neutral;
  neutral.alpha = alpha;
  neutral.stability = classify(neutral_max);
  neutral.neutral = true;
  out.branches.push_back(neutral);

  std::vector<std::pair<Eigen::VectorXd, RealField>> found;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const int seed_index = static_cast<int>(i);
    try {
      const SimResult sim = integrate(seeds[i], no_input, params, options.sim);
      const NewtonResult nr = refine_equilibrium(sim.final_state, params, options.newton);
      if (!nr.converged) {
        out.failures.push_back({alpha, seed_index,
                                "NewtonDivergence: residual " + std::to_string(nr.residual)});
        continue;
      }
      if (nr.state.max_abs() < kFlatTol) continue;
      const Eigen::VectorXd fp = fingerprint(nr.state);
      const bool seen = std::any_of(found.begin(), found.end(), [&](const auto& f) {
        return (f.first - fp).cwiseAbs().maxCoeff() < kDedupTol;
      });
      if (seen) continue;
      found.emplace_back(fp, nr.state);
      out.branches.push_back(make_point(alpha, nr.state, params, seed_index, nr.residual));
    } catch (const Error& e) {
      out.failures.push_back({alpha, seed_index, e.what()});
    }
  }

  if (options.locate_unstable && neutral.stable()) {
    // Largest stable pattern found from the seeds.
    const RealField* pattern = nullptr;
    double best_norm = 0.0;
    for (std::size_t i = 0; i < found.size(); ++i) {
      const BranchPoint& bp = out.branches[i + 1];
      if (bp.stable() && bp.norm > best_norm) {
        best_norm = bp.norm;
        pattern = &found[i].second;
      }
    }
    if (pattern != nullptr) {
      const double pattern_max = pattern->max_abs();
      double lo = 0.0;
      double hi = 1.0;
      Eigen::VectorXd slowest = pattern->values();
      try {
        for (int it = 0; it < options.bisection_steps; ++it) {
          const double mid = 0.5 * (lo + hi);
          double best_speed = std::numeric_limits<double>::infinity();
          Eigen::VectorXd candidate;
          Rhs f(params);
          Eigen::VectorXd zero_u = Eigen::VectorXd::Zero(grid.size());
          Eigen::VectorXd dz;
          SimConfig probe = options.sim;
          probe.stop_at_steady = false;
          const RealField start(grid, mid * pattern->values());
          const SimResult sim =
              integrate(start, no_input, params, probe, [&](double, const Eigen::VectorXd& z) {
                f(z, zero_u, dz);
                const double speed = dz.cwiseAbs().maxCoeff();
                if (speed < best_speed && z.cwiseAbs().maxCoeff() > kNeutralTol) {
                  best_speed = speed;
                  candidate = z;
                }
              });
          if (sim.final_state.max_abs() > 0.5 * pattern_max) {
            hi = mid;
          } else {
            lo = mid;
          }
          if (candidate.size() > 0) slowest = candidate;
        }
        const NewtonResult nr = refine_equilibrium(RealField(grid, slowest), params, options.newton);
        if (nr.converged && nr.state.max_abs() > kNeutralTol) {
          const Eigen::VectorXd fp = fingerprint(nr.state);
          const bool seen = std::any_of(found.begin(), found.end(), [&](const auto& f) {
            return (f.first - fp).cwiseAbs().maxCoeff() < kDedupTol;
          });
          if (!seen) {
            BranchPoint bp = make_point(alpha, nr.state, params, -1, nr.residual);
            bp.located_by_bisection = true;
            out.branches.push_back(bp);
          }
        }
      } catch (const Error& e) {
        out.failures.push_back({alpha, -1, e.what()});
      }
    }
  }
  return out;
}

}  // namespace

SpectrumReport eigenvalues(const ModelParams& params) {
  params.validate();
  const Kernel& kernel = params.kernel;
  const double peak = kernel.peak_coefficient();
  if (!(peak > 0.0)) {
    throw Error(ErrorCode::NonPositivePeak,
                "W_hat(k_max) = " + std::to_string(peak) + " admits no bifurcation in alpha");
  }
  SpectrumReport report;
  const CircleGrid& grid = kernel.grid();
  for (int k = grid.k_min(); k <= grid.k_max(); ++k) {
    report.eigenvalues[k] = closed_form_lambda(params, k);
  }
  report.k_max = kernel.k_max();
  report.alpha_star = 1.0 / peak;
  report.leading_eigenvalue = closed_form_lambda(params, kernel.k_max());
  return report;
}

Eigen::MatrixXd linear_jacobian(const ModelParams& params) {
  params.validate();
  const int n = params.grid().size();
  return (params.alpha * circulant(params.kernel) - Eigen::MatrixXd::Identity(n, n)) / params.tau;
}

std::map<int, double> numerical_jacobian_spectrum(const ModelParams& params) {
  const Eigen::MatrixXd jac = linear_jacobian(params);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(jac, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::MatchFailure, "dense eigensolver did not converge");
  }
  std::vector<std::complex<double>> numeric(solver.eigenvalues().begin(),
                                            solver.eigenvalues().end());
  std::sort(numeric.begin(), numeric.end(),
            [](const auto& a, const auto& b) { return a.real() < b.real(); });

  const CircleGrid& grid = params.grid();
  std::vector<std::pair<double, int>> closed;
  for (int k = grid.k_min(); k <= grid.k_max(); ++k) {
    closed.emplace_back(closed_form_lambda(params, k), k);
  }
  std::sort(closed.begin(), closed.end());

  // Sorted pairing is the optimal matching for values on a line.
  std::map<int, double> matched;
  for (std::size_t i = 0; i < closed.size(); ++i) {
    const double distance = std::abs(numeric[i] - closed[i].first);
    if (distance > kMatchTol) {
      throw Error(ErrorCode::MatchFailure, "eigenvalue " + std::to_string(numeric[i].real()) +
                                               " is " + std::to_string(distance) +
                                               " from the closed form");
    }
    matched[closed[i].second] = numeric[i].real();
  }
  return matched;
}

std::complex<double> transfer_function(const ModelParams& params, int k, std::complex<double> s) {
  const double lambda = closed_form_lambda(params, k);
  const std::complex<double> gap = s - lambda;
  if (std::abs(gap) < kPoleTol) {
    throw Error(ErrorCode::PoleEvaluation, "s coincides with lambda_" + std::to_string(k));
  }
  return 1.0 / gap;
}

std::map<int, double> spatial_transfer_profile(const ModelParams& params) {
  params.validate();
  const CircleGrid& grid = params.grid();
  std::map<int, double> profile;
  for (int k = grid.k_min(); k <= grid.k_max(); ++k) {
    const double denom = 1.0 - params.alpha * params.kernel.coefficient(k);
    if (!(denom > 0.0)) {
      throw Error(ErrorCode::UnstableLinearization,
                  "mode k=" + std::to_string(k) + " is not stable at alpha=" +
                      std::to_string(params.alpha));
    }
    profile[k] = params.tau / denom;
  }
  return profile;
}

std::complex<double> alignment(const RealField& u, int k_max) { return to_spectral(u).coeff(k_max); }

std::string to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    case Stability::Marginal: return "marginal";
  }
  return "unknown";
}

StabilityReport classify_equilibrium(const RealField& z, const ModelParams& params) {
  require_same_grid(z.grid(), params.grid());
  const int n = z.size();
  const auto sat = params.saturation();
  Eigen::VectorXd slope(n);
  for (int j = 0; j < n; ++j) slope[j] = sat->slope(z[j]);
  const Eigen::MatrixXd c = circulant(params.kernel);

  Eigen::VectorXd derivative = spectral_derivative(z);
  const bool patterned = derivative.norm() > 1e-8 * std::sqrt(static_cast<double>(n));

  std::vector<double> real_parts;
  std::optional<int> rotation;
  if ((slope.array() > 0.0).all()) {
    // -I + alpha C D is similar to the symmetric -I + alpha D^1/2 C D^1/2.
    const Eigen::VectorXd root = slope.cwiseSqrt();
    const Eigen::MatrixXd sym = params.alpha * root.asDiagonal() * c * root.asDiagonal() -
                                Eigen::MatrixXd::Identity(n, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    real_parts.assign(solver.eigenvalues().begin(), solver.eigenvalues().end());
    if (patterned) {
      const Eigen::VectorXd target = (root.asDiagonal() * derivative).normalized();
      Eigen::Index best = 0;
      (solver.eigenvectors().transpose() * target).cwiseAbs().maxCoeff(&best);
      rotation = static_cast<int>(best);
    }
  } else {
    const Eigen::MatrixXd jac =
        params.alpha * c * slope.asDiagonal() - Eigen::MatrixXd::Identity(n, n);
    Eigen::EigenSolver<Eigen::MatrixXd> solver(jac, patterned);
    for (const auto& ev : solver.eigenvalues()) real_parts.push_back(ev.real());
    if (patterned) {
      const Eigen::VectorXcd target = derivative.normalized().cast<std::complex<double>>();
      Eigen::Index best = 0;
      Eigen::VectorXd overlap(n);
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXcd v = solver.eigenvectors().col(i);
        overlap[i] = std::abs(v.dot(target)) / v.norm();
      }
      overlap.maxCoeff(&best);
      rotation = static_cast<int>(best);
    }
  }

  StabilityReport report;
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(real_parts.size()); ++i) {
    const double lambda = real_parts[i] / params.tau;
    if (rotation && *rotation == i) {
      report.rotation_eigenvalue = lambda;
      continue;
    }
    worst = std::max(worst, lambda);
  }
  report.max_real_part = worst;
  report.stability = classify(worst);
  return report;
}

NewtonResult refine_equilibrium(const RealField& guess, const ModelParams& params,
                                const NewtonOptions& options) {
  require_same_grid(guess.grid(), params.grid());
  const int n = guess.size();
  Rhs f(params);
  const auto sat = params.saturation();
  const Eigen::MatrixXd c = circulant(params.kernel);

  Eigen::VectorXd z = guess.values();
  Eigen::VectorXd residual;
  f.field_map(z, residual);
  double res_norm = residual.cwiseAbs().maxCoeff();
  int it = 0;
  Eigen::VectorXd trial_residual;
  for (; it < options.max_iterations && res_norm / params.tau > options.tolerance; ++it) {
    Eigen::VectorXd slope(n);
    for (int j = 0; j < n; ++j) slope[j] = sat->slope(z[j]);
    const Eigen::MatrixXd jac =
        params.alpha * c * slope.asDiagonal() - Eigen::MatrixXd::Identity(n, n);
    // Minimum-norm step: the near-neutral rotation direction stays untouched.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(1e-9);
    cod.compute(jac);
    const Eigen::VectorXd step = cod.solve(-residual);

    double scale = 1.0;
    bool accepted = false;
    while (scale > 1e-6) {
      const Eigen::VectorXd trial = z + scale * step;
      f.field_map(trial, trial_residual);
      const double trial_norm = trial_residual.cwiseAbs().maxCoeff();
      if (std::isfinite(trial_norm) && trial_norm < (1.0 - 1e-4 * scale) * res_norm) {
        z = trial;
        residual = trial_residual;
        res_norm = trial_norm;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;
  }
  const double final_residual = res_norm / params.tau;
  return NewtonResult{final_residual <= options.tolerance, it, final_residual,
                      RealField(guess.grid(), z)};
}

RealField canonical_rotation(const RealField& z) {
  Eigen::Index top = 0;
  z.values().maxCoeff(&top);
  return shift(z, -static_cast<std::int64_t>(top));
}

SweepOptions default_sweep_options() { return SweepOptions{}; }

std::vector<RealField> default_sweep_seeds(const CircleGrid& grid, int k,
                                           const std::vector<double>& amplitudes) {
  if (k < 1 || k >= grid.nyquist()) {
    throw Error(ErrorCode::FrequencyOutOfRange, "seed frequency " + std::to_string(k));
  }
  std::vector<RealField> seeds;
  for (double a : amplitudes) {
    seeds.push_back(RealField::sample(
        grid, [&](double theta) { return a * std::cos(2.0 * std::numbers::pi * k * theta); }));
  }
  return seeds;
}

BifurcationDiagram sweep_bifurcation(const ModelParams& params_template,
                                     const std::vector<double>& alpha_range,
                                     const std::vector<RealField>& seeds,
                                     const SweepOptions& options) {
  params_template.validate();
  if (seeds.empty()) throw Error(ErrorCode::InvalidArgument, "sweep needs at least one seed");
  if (!std::is_sorted(alpha_range.begin(), alpha_range.end())) {
    throw Error(ErrorCode::InvalidArgument, "alpha range must be sorted");
  }
  for (const auto& s : seeds) require_same_grid(s.grid(), params_template.grid());

  std::vector<AlphaResult> results(alpha_range.size());
  parallel_for(alpha_range.size(), options.threads, [&](std::size_t i) {
    results[i] = sweep_one(params_template, alpha_range[i], seeds, options);
  });

  BifurcationDiagram diagram;
  diagram.alphas = alpha_range;
  for (auto& r : results) {
    for (auto& b : r.branches) diagram.branches.push_back(b);
    for (auto& f : r.failures) diagram.failures.push_back(std::move(f));
  }
  for (std::size_t i = 0; i < alpha_range.size(); ++i) {
    const auto& branches = results[i].branches;
    const bool neutral_stable = branches.front().stable();
    const bool patterned_stable = std::any_of(branches.begin() + 1, branches.end(),
                                              [](const auto& b) { return b.stable(); });
    if (neutral_stable && patterned_stable) {
      diagram.fold_alpha = alpha_range[i];
      break;
    }
  }
  return diagram;
}

}  // namespace nod
