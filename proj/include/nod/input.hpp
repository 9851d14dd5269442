#pragma once

// Distributed inputs: gap scenarios rendered onto the grid and the
// time-dependent input signals consumed by the integrator.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nod/circle_grid.hpp"

namespace nod {

enum class BumpShape { RaisedCosine, RectangularSmoothed };

struct WidthRamp {
  double t_start = 0.0;
  double t_end = 0.0;
  double final_width = 0.0;
};

struct Gap {
  double center = 0.0;     ///< angle in [0, 1)
  double width = 0.1;      ///< angular support at t = 0
  double amplitude = 0.008;
  std::optional<WidthRamp> ramp;

  /// Width at time t, linearly interpolated during the ramp.
  [[nodiscard]] double width_at(double t) const;
};

struct ScenarioSpec {
  std::vector<Gap> gaps;
  double baseline = 0.0;
  BumpShape bump_shape = BumpShape::RaisedCosine;
  std::optional<std::uint64_t> perturbation_seed;
  double perturbation_scale = 1e-9;
  /// Cap on gap amplitudes; inputs are meant to be small.
  double max_amplitude = 0.01;

  /// Throws OverlappingGaps or InvalidArgument.
  void validate() const;

  /// Time after which the rendered input no longer changes.
  [[nodiscard]] double static_after() const;

  /// Upper bound on max_theta |du/dt| over all time.
  [[nodiscard]] double lipschitz_bound() const;

  /// Index of the gap whose support contains theta at time t.
  [[nodiscard]] std::optional<int> gap_containing(double theta, double t) const;
};

std::string to_string(BumpShape shape);
BumpShape bump_shape_from_string(const std::string& name);

/// Profile g(r) of a unit-amplitude bump at normalized offset r = d/w, r in [0, 1/2].
double bump_profile(BumpShape shape, double r);

/// max_r r |g'(r)|; bounds |du/dw| by amplitude * value / width.
double bump_width_sensitivity(BumpShape shape);

/// Samples drawn uniformly from [-amplitude, amplitude) by a seeded
/// mt19937_64; identical on every platform.
RealField uniform_noise(const CircleGrid& grid, std::uint64_t seed, double amplitude);

/// sum_{k=1}^{max_mode} a_k cos(2 pi (k theta + phi_k)) with seeded a_k in
/// [0, 1) and phi_k in [0, 1), rescaled so that max |f| = amplitude.
RealField smooth_random_field(const CircleGrid& grid, std::uint64_t seed, int max_mode,
                              double amplitude);

/// Gaps rendered at time t plus baseline elsewhere plus the seeded perturbation.
RealField render_input(const ScenarioSpec& spec, const CircleGrid& grid, double t);

/// Input u(theta, t) fed to the integrator.
class InputSignal {
 public:
  enum class Kind { Constant, PiecewiseStatic, RampedGaps };

  static InputSignal constant(RealField u);
  /// Holds each field from its switch time on; the first switch time must be 0.
  static InputSignal piecewise_static(std::vector<std::pair<double, RealField>> pieces);
  /// Rejects scenarios whose Lipschitz bound is not below 0.1 / tau.
  static InputSignal ramped_gaps(ScenarioSpec spec, const CircleGrid& grid, double tau);

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] const CircleGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] RealField at(double t) const;
  [[nodiscard]] bool time_varying() const noexcept;
  [[nodiscard]] double static_after() const noexcept { return static_after_; }
  [[nodiscard]] double lipschitz_bound() const noexcept { return lipschitz_bound_; }
  [[nodiscard]] const ScenarioSpec* scenario() const noexcept {
    return scenario_ ? &*scenario_ : nullptr;
  }

 private:
  explicit InputSignal(Kind kind, CircleGrid grid) : kind_(kind), grid_(grid) {}

  Kind kind_;
  CircleGrid grid_;
  std::vector<std::pair<double, RealField>> pieces_;
  std::optional<ScenarioSpec> scenario_;
  double static_after_ = 0.0;
  double lipschitz_bound_ = 0.0;
};

}  // namespace nod
