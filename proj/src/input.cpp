#include "nod/input.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

namespace nod {

namespace {

using std::numbers::pi;

// Fraction of the half-width used by the smoothed edge of a rectangular bump.
constexpr double kEdgeFraction = 0.5;

double bump_derivative(BumpShape shape, double r) {
  switch (shape) {
    case BumpShape::RaisedCosine:
      return -pi * std::sin(2.0 * pi * r);
    case BumpShape::RectangularSmoothed: {
      const double edge = 0.5 * kEdgeFraction;
      const double flat = 0.5 - edge;
      if (r <= flat) return 0.0;
      return -0.5 * (pi / edge) * std::sin(pi * (r - flat) / edge);
    }
  }
  return 0.0;
}

// Maps a 64-bit draw to [-1, 1) without relying on library distributions.
double unit_symmetric(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
}

}  // namespace

double Gap::width_at(double t) const {
  if (!ramp || t <= ramp->t_start) return width;
  if (t >= ramp->t_end) return ramp->final_width;
  const double s = (t - ramp->t_start) / (ramp->t_end - ramp->t_start);
  return width + s * (ramp->final_width - width);
}

std::string to_string(BumpShape shape) {
  return shape == BumpShape::RaisedCosine ? "raised_cosine" : "rectangular_smoothed";
}

BumpShape bump_shape_from_string(const std::string& name) {
  if (name == "raised_cosine") return BumpShape::RaisedCosine;
  if (name == "rectangular_smoothed") return BumpShape::RectangularSmoothed;
  throw Error(ErrorCode::InvalidArgument, "unknown bump shape '" + name + "'");
}

double bump_profile(BumpShape shape, double r) {
  r = std::abs(r);
  if (r >= 0.5) return 0.0;
  switch (shape) {
    case BumpShape::RaisedCosine:
      return 0.5 * (1.0 + std::cos(2.0 * pi * r));
    case BumpShape::RectangularSmoothed: {
      const double edge = 0.5 * kEdgeFraction;
      const double flat = 0.5 - edge;
      if (r <= flat) return 1.0;
      return 0.5 * (1.0 + std::cos(pi * (r - flat) / edge));
    }
  }
  return 0.0;
}

double bump_width_sensitivity(BumpShape shape) {
  constexpr int kSamples = 20000;
  double best = 0.0;
  for (int i = 0; i <= kSamples; ++i) {
    const double r = 0.5 * i / kSamples;
    best = std::max(best, r * std::abs(bump_derivative(shape, r)));
  }
  // Dense sampling of a smooth function; pad by the worst-case sampling error.
  return best * (1.0 + 1e-6);
}

void ScenarioSpec::validate() const {
  if (!std::isfinite(baseline) || baseline > 0.0) {
    throw Error(ErrorCode::InvalidArgument, "baseline must be finite and <= 0");
  }
  if (!std::isfinite(perturbation_scale) || perturbation_scale < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "perturbation_scale must be >= 0");
  }
  std::set<double> times{0.0};
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const Gap& g = gaps[i];
    const std::string where = "gap " + std::to_string(i);
    if (!(g.center >= 0.0 && g.center < 1.0)) {
      throw Error(ErrorCode::InvalidArgument, where + ": center must lie in [0, 1)");
    }
    if (!(g.width > 0.0 && g.width <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, where + ": width must lie in (0, 1]");
    }
    if (!(g.amplitude > 0.0 && g.amplitude <= max_amplitude)) {
      throw Error(ErrorCode::InvalidArgument,
                  where + ": amplitude must lie in (0, " + std::to_string(max_amplitude) + "]");
    }
    if (g.ramp) {
      if (!(g.ramp->t_start >= 0.0 && g.ramp->t_end > g.ramp->t_start)) {
        throw Error(ErrorCode::InvalidArgument, where + ": ramp needs 0 <= t_start < t_end");
      }
      if (!(g.ramp->final_width > 0.0 && g.ramp->final_width <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, where + ": ramp final width must lie in (0, 1]");
      }
      times.insert(g.ramp->t_start);
      times.insert(g.ramp->t_end);
    }
  }
  // Widths are piecewise linear in t, so pairwise clearance is checked at
  // every breakpoint.
  for (double t : times) {
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      for (std::size_t j = i + 1; j < gaps.size(); ++j) {
        const double clearance = circle_distance(gaps[i].center, gaps[j].center);
        const double needed = 0.5 * (gaps[i].width_at(t) + gaps[j].width_at(t));
        if (clearance < needed) {
          throw Error(ErrorCode::OverlappingGaps, "gaps " + std::to_string(i) + " and " +
                                                      std::to_string(j) + " overlap at t=" +
                                                      std::to_string(t));
        }
      }
    }
  }
}

double ScenarioSpec::static_after() const {
  double t = 0.0;
  for (const Gap& g : gaps) {
    if (g.ramp) t = std::max(t, g.ramp->t_end);
  }
  return t;
}

double ScenarioSpec::lipschitz_bound() const {
  const double sensitivity = bump_width_sensitivity(bump_shape);
  double bound = 0.0;
  for (const Gap& g : gaps) {
    if (!g.ramp || g.ramp->final_width == g.width) continue;
    const double rate = std::abs(g.ramp->final_width - g.width) / (g.ramp->t_end - g.ramp->t_start);
    const double narrowest = std::min(g.width, g.ramp->final_width);
    bound = std::max(bound, g.amplitude * sensitivity / narrowest * rate);
  }
  return bound;
}

std::optional<int> ScenarioSpec::gap_containing(double theta, double t) const {
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (circle_distance(theta, gaps[i].center) < 0.5 * gaps[i].width_at(t)) {
      return static_cast<int>(i);
    }
  }
  return std::nullopt;
}

RealField render_input(const ScenarioSpec& spec, const CircleGrid& grid, double t) {
  spec.validate();
  Eigen::VectorXd u = Eigen::VectorXd::Constant(grid.size(), spec.baseline);
  for (const Gap& g : spec.gaps) {
    const double w = g.width_at(t);
    for (int j = 0; j < grid.size(); ++j) {
      const double d = circle_distance(grid.theta(j), g.center);
      if (d < 0.5 * w) u[j] = g.amplitude * bump_profile(spec.bump_shape, d / w);
    }
  }
  if (spec.perturbation_seed) {
    u += uniform_noise(grid, *spec.perturbation_seed, spec.perturbation_scale).values();
  }
  return {grid, std::move(u)};
}

RealField uniform_noise(const CircleGrid& grid, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  Eigen::VectorXd v(grid.size());
  for (int j = 0; j < grid.size(); ++j) v[j] = amplitude * unit_symmetric(rng);
  return {grid, std::move(v)};
}

RealField smooth_random_field(const CircleGrid& grid, std::uint64_t seed, int max_mode,
                              double amplitude) {
  if (max_mode < 1 || max_mode >= grid.nyquist()) {
    throw Error(ErrorCode::FrequencyOutOfRange, "smooth field mode " + std::to_string(max_mode));
  }
  std::mt19937_64 rng(seed);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(grid.size());
  for (int k = 1; k <= max_mode; ++k) {
    const double a = 0.5 * (unit_symmetric(rng) + 1.0);
    const double phi = 0.5 * (unit_symmetric(rng) + 1.0);
    for (int j = 0; j < grid.size(); ++j) {
      v[j] += a * std::cos(2.0 * pi * (k * grid.theta(j) + phi));
    }
  }
  const double peak = v.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) throw Error(ErrorCode::InvalidArgument, "degenerate smooth random field");
  return {grid, v * (amplitude / peak)};
}

InputSignal InputSignal::constant(RealField u) {
  InputSignal s(Kind::Constant, u.grid());
  s.pieces_.emplace_back(0.0, std::move(u));
  return s;
}

InputSignal InputSignal::piecewise_static(std::vector<std::pair<double, RealField>> pieces) {
  if (pieces.empty()) throw Error(ErrorCode::InvalidArgument, "piecewise input needs a piece");
  if (pieces.front().first != 0.0) {
    throw Error(ErrorCode::InvalidArgument, "first piece must start at t = 0");
  }
  for (std::size_t i = 1; i < pieces.size(); ++i) {
    if (!(pieces[i].first > pieces[i - 1].first)) {
      throw Error(ErrorCode::InvalidArgument, "switch times must be increasing");
    }
    require_same_grid(pieces[i].second.grid(), pieces.front().second.grid());
  }
  InputSignal s(Kind::PiecewiseStatic, pieces.front().second.grid());
  s.static_after_ = pieces.back().first;
  s.lipschitz_bound_ = pieces.size() > 1 ? std::numeric_limits<double>::infinity() : 0.0;
  s.pieces_ = std::move(pieces);
  return s;
}

InputSignal InputSignal::ramped_gaps(ScenarioSpec spec, const CircleGrid& grid, double tau) {
  spec.validate();
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be positive");
  const double bound = spec.lipschitz_bound();
  if (!(bound < 0.1 / tau)) {
    throw Error(ErrorCode::QuasiStaticViolation,
                "input Lipschitz bound " + std::to_string(bound) + " is not below 0.1/tau");
  }
  InputSignal s(Kind::RampedGaps, grid);
  s.static_after_ = spec.static_after();
  s.lipschitz_bound_ = bound;
  s.pieces_.emplace_back(0.0, render_input(spec, grid, 0.0));
  s.scenario_ = std::move(spec);
  return s;
}

bool InputSignal::time_varying() const noexcept { return static_after_ > 0.0; }

RealField InputSignal::at(double t) const {
  if (kind_ == Kind::RampedGaps) {
    if (!time_varying() || t <= 0.0) return pieces_.front().second;
    return render_input(*scenario_, grid_, t);
  }
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                             [](double v, const auto& piece) { return v < piece.first; });
  if (it == pieces_.begin()) return pieces_.front().second;
  return std::prev(it)->second;
}

}  // namespace nod
