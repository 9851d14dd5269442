#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nod/dynamics.hpp"

namespace {

using nod::CircleGrid;
using nod::ErrorCode;
using nod::InputSignal;
using nod::ModelParams;
using nod::RealField;
using nod::SimConfig;
using std::numbers::pi;

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const nod::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no nod::Error thrown";
  return ErrorCode::InvalidArgument;
}

ModelParams default_params(int n = 256, int k_c = 1, double alpha = 0.98, double xi = 0.7) {
  return ModelParams{.tau = 1.0,
                     .alpha = alpha,
                     .xi = xi,
                     .kernel = nod::design_gaussian_kernel(CircleGrid(n), k_c, 3.0),
                     .custom_saturation = nullptr};
}

RealField cosine(const CircleGrid& grid, double amplitude, int k) {
  return RealField::sample(grid, [=](double t) { return amplitude * std::cos(2 * pi * k * t); });
}

class Linear final : public nod::Saturation {
 public:
  double value(double x) const override { return x; }
  double slope(double) const override { return 1.0; }
  double curvature(double) const override { return 0.0; }
};

// ---------------------------------------------------------------------------
// Saturation

TEST(Saturation, VanishesAtOrigin) {
  for (double xi : {0.0, 0.6, 0.7}) EXPECT_EQ(nod::saturation(0.0, xi), 0.0) << xi;
}

TEST(Saturation, UnitSlopeAtOrigin) {
  const double h = 1e-5;
  for (double xi : {0.0, 0.6, 0.7}) {
    const double fd = (nod::saturation(h, xi) - nod::saturation(-h, xi)) / (2 * h);
    EXPECT_NEAR(fd, 1.0, 1e-8) << xi;
    EXPECT_NEAR(nod::ShiftedTanh(xi).slope(0.0), 1.0, 1e-15);
  }
}

TEST(Saturation, CurvatureAtOriginIsTwiceTanhXi) {
  const double h = 1e-4;
  for (double xi : {0.0, 0.3, 0.6, 0.7}) {
    const nod::ShiftedTanh s(xi);
    const double fd = (s.value(h) - 2 * s.value(0.0) + s.value(-h)) / (h * h);
    EXPECT_NEAR(s.curvature(0.0), 2 * std::tanh(xi), 1e-14) << xi;
    EXPECT_NEAR(fd, 2 * std::tanh(xi), 1e-6) << xi;
  }
  EXPECT_NEAR(nod::ShiftedTanh(0.7).curvature(0.0), 1.20874, 1e-5);
}

TEST(Saturation, DerivativesMatchFiniteDifferences) {
  const nod::ShiftedTanh s(0.6);
  const double h = 1e-6;
  for (double x = -3.0; x <= 3.0; x += 0.37) {
    EXPECT_NEAR(s.slope(x), (s.value(x + h) - s.value(x - h)) / (2 * h), 1e-8) << x;
    EXPECT_NEAR(s.curvature(x), (s.slope(x + h) - s.slope(x - h)) / (2 * h), 1e-8) << x;
  }
}

TEST(Saturation, VectorApplyMatchesScalarValue) {
  const nod::ShiftedTanh s(0.7);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(2001, -25.0, 25.0);
  Eigen::VectorXd out;
  s.apply(x, out);
  for (Eigen::Index i = 0; i < x.size(); ++i) EXPECT_NEAR(out[i], s.value(x[i]), 1e-14) << x[i];
}

TEST(Saturation, IsBounded) {
  const nod::ShiftedTanh s(0.7);
  const double c2 = std::cosh(0.7) * std::cosh(0.7);
  EXPECT_NEAR(s.value(50.0), (1 + std::tanh(0.7)) * c2, 1e-12);
  EXPECT_NEAR(s.value(-50.0), (std::tanh(0.7) - 1) * c2, 1e-12);
}

// ---------------------------------------------------------------------------
// Right-hand side

TEST(Rhs, OriginIsAnExactEquilibrium) {
  const ModelParams p = default_params();
  const RealField zero = RealField::zeros(p.grid());
  EXPECT_EQ(nod::rhs(zero, zero, p).max_abs(), 0.0);
}

TEST(Rhs, InputPassesThroughAtOrigin) {
  ModelParams p = default_params(64);
  p.tau = 2.5;
  const RealField u = cosine(p.grid(), 0.3, 2);
  const RealField r = nod::rhs(RealField::zeros(p.grid()), u, p);
  EXPECT_LT((r.values() - u.values() / 2.5).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Rhs, LinearizationMatchesLeadingEigenvalue) {
  const ModelParams p = default_params();
  const RealField z = cosine(p.grid(), 1e-6, 1);
  const RealField r = nod::rhs(z, RealField::zeros(p.grid()), p);
  const double lambda1 = -1.0 + 0.98 * 1.0;
  const Eigen::VectorXd expected = lambda1 * z.values();
  EXPECT_LT((r.values() - expected).norm() / expected.norm(), 1e-4);
}

TEST(Rhs, ConvolutionMatchesDirectSum) {
  const ModelParams p = default_params(32, 1, 1.0, 0.0);
  const auto& w = p.kernel.real_space().values();
  const RealField z = cosine(p.grid(), 0.8, 1);
  Eigen::VectorXd direct = Eigen::VectorXd::Zero(32);
  for (int j = 0; j < 32; ++j) {
    for (int l = 0; l < 32; ++l) direct[j] += w[(j - l + 32) % 32] * std::tanh(z[l]) / 32.0;
  }
  const RealField r = nod::rhs(z, RealField::zeros(p.grid()), p);
  EXPECT_LT((r.values() - (direct - z.values())).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(ModelParams, ValidatesParameters) {
  ModelParams p = default_params(16);
  p.tau = 0.0;
  EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::InvalidArgument);
  p = default_params(16);
  p.alpha = -0.1;
  EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::InvalidArgument);
  p = default_params(16);
  p.xi = -1.0;
  EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::InvalidArgument);
}

TEST(SimConfig, RequiresStepBelowTenthOfTau) {
  EXPECT_NO_THROW(SimConfig{.dt = 0.1}.validate(1.0));
  EXPECT_EQ(code_of([] { SimConfig{.dt = 0.2}.validate(1.0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { SimConfig{.dt = 0.01, .t_final = -1}.validate(1.0); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { SimConfig{.record_stride = 0}.validate(1.0); }),
            ErrorCode::InvalidArgument);
}

// ---------------------------------------------------------------------------
// Integration

TEST(Integrate, NeutralStateIsSteadyImmediately) {
  const ModelParams p = default_params();
  const RealField zero = RealField::zeros(p.grid());
  const SimConfig cfg;
  const auto sim = nod::integrate(zero, InputSignal::constant(zero), p, cfg);
  EXPECT_TRUE(sim.reached_steady);
  EXPECT_LE(sim.t_end, cfg.steady_steps * cfg.dt + 1e-12);
  EXPECT_EQ(sim.final_state.max_abs(), 0.0);
}

TEST(Integrate, LargeCosineSettlesOnSingleBump) {
  const ModelParams p = default_params();
  const RealField zero = RealField::zeros(p.grid());
  const auto sim =
      nod::integrate(cosine(p.grid(), 2.0, 1), InputSignal::constant(zero), p, SimConfig{});
  EXPECT_TRUE(sim.reached_steady);
  EXPECT_EQ(nod::count_peaks(sim.final_state), 1);
  EXPECT_GT(sim.final_state.max(), 1.0);
}

TEST(Integrate, ThreeFoldKernelGivesThreePeaks) {
  const ModelParams p = default_params(256, 3);
  const CircleGrid& g = p.grid();
  const RealField z0(g, cosine(g, 1.0, 3).values() + nod::uniform_noise(g, 4, 0.05).values());
  const auto sim =
      nod::integrate(z0, InputSignal::constant(RealField::zeros(g)), p, SimConfig{.t_final = 300});
  EXPECT_TRUE(sim.reached_steady);
  EXPECT_EQ(nod::count_peaks(sim.final_state), 3);
}

TEST(Integrate, ShiftedThreeFoldKernelCollapsesToOneBump) {
  ModelParams p = default_params(256, 3);
  p.kernel = nod::design_gaussian_kernel(p.grid(), 3, 3.0, nod::KernelFamily::Shifted);
  const CircleGrid& g = p.grid();
  const auto sim = nod::integrate(nod::smooth_random_field(g, 1, 6, 1.0),
                                  InputSignal::constant(RealField::zeros(g)), p,
                                  SimConfig{.t_final = 300});
  EXPECT_EQ(nod::count_peaks(sim.final_state), 1);
}

TEST(Integrate, RecordsEveryStrideAndTheFinalState) {
  const ModelParams p = default_params(32);
  const RealField z0 = cosine(p.grid(), 0.1, 1);
  const SimConfig cfg{.dt = 0.1, .t_final = 5.05, .record_stride = 10, .stop_at_steady = false};
  const auto sim = nod::integrate(z0, InputSignal::constant(RealField::zeros(p.grid())), p, cfg);
  ASSERT_GE(sim.times.size(), 2u);
  EXPECT_EQ(sim.times.front(), 0.0);
  EXPECT_EQ(sim.snapshots.front().values(), z0.values());
  EXPECT_NEAR(sim.times[1], 1.0, 1e-12);
  EXPECT_EQ(sim.snapshots.back().values(), sim.final_state.values());
  EXPECT_NEAR(sim.times.back(), sim.t_end, 1e-12);
  EXPECT_FALSE(sim.reached_steady);
}

TEST(Integrate, DoesNotStopBeforeInputSettles) {
  const ModelParams p = default_params(64, 1, 0.5, 0.7);
  const CircleGrid& g = p.grid();
  const RealField zero = RealField::zeros(g);
  const auto input = InputSignal::piecewise_static({{0.0, zero}, {50.0, cosine(g, 1e-3, 1)}});
  const auto sim = nod::integrate(zero, input, p, SimConfig{.dt = 0.05, .t_final = 200});
  EXPECT_TRUE(sim.reached_steady);
  EXPECT_GT(sim.t_end, 50.0);
  EXPECT_GT(sim.final_state.max(), 1e-3);
}

TEST(Integrate, DetectsDivergence) {
  ModelParams p = default_params(32, 1, 3.0, 0.0);
  p.custom_saturation = std::make_shared<Linear>();
  const auto z0 = cosine(p.grid(), 1.0, 1);
  EXPECT_EQ(code_of([&] {
              nod::integrate(z0, InputSignal::constant(RealField::zeros(p.grid())), p,
                             SimConfig{.dt = 0.1, .t_final = 100});
            }),
            ErrorCode::Diverged);
}

TEST(Integrate, RejectsMismatchedInitialGrid) {
  const ModelParams p = default_params(32);
  const RealField z0 = RealField::zeros(CircleGrid(64));
  EXPECT_EQ(code_of([&] {
              nod::integrate(z0, InputSignal::constant(RealField::zeros(p.grid())), p, SimConfig{});
            }),
            ErrorCode::GridMismatch);
}

TEST(Integrate, MeanModeFollowsScalarOde) {
  const ModelParams p = default_params(128);
  const CircleGrid& g = p.grid();
  const RealField z0 = nod::smooth_random_field(g, 3, 5, 1.5);
  const RealField u(g, nod::uniform_noise(g, 8, 0.01).values().array() + 0.004);
  const double m0 = z0.values().mean();
  const double u0 = u.values().mean();
  double worst = 0.0;
  nod::integrate(z0, InputSignal::constant(u), p,
                 SimConfig{.dt = 0.01, .t_final = 30, .stop_at_steady = false},
                 [&](double t, const Eigen::VectorXd& z) {
                   const double exact = u0 + (m0 - u0) * std::exp(-t / p.tau);
                   worst = std::max(worst, std::abs(z.mean() - exact));
                 });
  EXPECT_LT(worst, 1e-6);
}

TEST(Integrate, TranslationEquivariance) {
  const ModelParams p = default_params(64);
  const CircleGrid& g = p.grid();
  const RealField z0 = nod::uniform_noise(g, 11, 1.0);
  const RealField u = nod::uniform_noise(g, 12, 0.01);
  const int m = 13;
  const SimConfig cfg{.dt = 0.02, .t_final = 20, .record_stride = 1, .stop_at_steady = false};
  const auto a = nod::integrate(z0, InputSignal::constant(u), p, cfg);
  const auto b = nod::integrate(shift(z0, m), InputSignal::constant(shift(u, m)), p, cfg);
  ASSERT_EQ(a.snapshots.size(), b.snapshots.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
    worst = std::max(worst,
                     (shift(a.snapshots[i], m).values() - b.snapshots[i].values()).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(Integrate, FourthOrderConvergence) {
  const ModelParams p = default_params(32, 1, 0.98, 0.7);
  const CircleGrid& g = p.grid();
  const RealField z0 = nod::smooth_random_field(g, 2, 4, 1.5);
  const auto input = InputSignal::constant(RealField::zeros(g));
  auto solve = [&](double dt) {
    return nod::integrate(z0, input, p, SimConfig{.dt = dt, .t_final = 2.0, .stop_at_steady = false})
        .final_state.values();
  };
  const Eigen::VectorXd ref = solve(0.1 / 64);
  const double e1 = (solve(0.1) - ref).cwiseAbs().maxCoeff();
  const double e2 = (solve(0.05) - ref).cwiseAbs().maxCoeff();
  EXPECT_GE(e1 / e2, 12.0) << e1 << " " << e2;
}

TEST(Integrate, TrajectoriesStayBounded) {
  const ModelParams p = default_params(128);
  const CircleGrid& g = p.grid();
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const RealField u = nod::uniform_noise(g, seed + 50, 0.01);
    double worst = 0.0;
    nod::integrate(nod::uniform_noise(g, seed, 3.0), InputSignal::constant(u), p,
                   SimConfig{.dt = 0.05, .t_final = 100},
                   [&](double, const Eigen::VectorXd& z) {
                     worst = std::max(worst, z.cwiseAbs().maxCoeff());
                   });
    EXPECT_LT(worst, 10.0);
  }
}

// ---------------------------------------------------------------------------
// Peak counting

TEST(CountPeaks, CosinesAndZero) {
  const CircleGrid g(256);
  EXPECT_EQ(nod::count_peaks(cosine(g, 1.0, 1)), 1);
  EXPECT_EQ(nod::count_peaks(cosine(g, 1.0, 3)), 3);
  EXPECT_EQ(nod::count_peaks(RealField::zeros(g)), 0);
  EXPECT_EQ(nod::count_peaks(RealField::constant(g, 2.0)), 0);
  EXPECT_EQ(nod::count_peaks(cosine(g, -1.0, 1)), 1);
}

TEST(CountPeaks, ThresholdDropsSmallPeaksAndPlateausCountOnce) {
  const CircleGrid g(16);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(16);
  v[2] = 1.0;
  v[8] = 0.4;
  v[12] = 0.6;
  EXPECT_EQ(nod::count_peaks(RealField(g, v)), 2);
  EXPECT_EQ(nod::count_peaks(RealField(g, v), 0.3), 3);
  v[3] = 1.0;
  EXPECT_EQ(nod::count_peaks(RealField(g, v)), 2);
  Eigen::VectorXd wrap = Eigen::VectorXd::Zero(16);
  wrap[15] = 1.0;
  wrap[0] = 1.0;
  EXPECT_EQ(nod::count_peaks(RealField(g, wrap)), 1);
  EXPECT_EQ(nod::count_peaks(RealField(g, -Eigen::VectorXd::Ones(16) - v)), 0);
}

}  // namespace
