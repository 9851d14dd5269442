// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nod/cli.hpp"

namespace {

namespace fs = std::filesystem;
using nod::CircleGrid;
using nod::InputSignal;
using nod::Json;
using nod::ModelParams;
using nod::RealField;
using nod::SimConfig;
using std::numbers::pi;

const fs::path kConfigDir = NOD_CONFIG_DIR;

struct Check {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << " [failed: " << what << "]";
    }
  }
};

nod::cli::RunConfig load(const std::string& name) {
  std::ifstream in(kConfigDir / (name + ".json"));
  return nod::cli::parse_run_config(Json::parse(in));
}

ModelParams gaussian_params(int n, int k_c, double alpha, double xi, double tau = 1.0,
                            double p = 3.0) {
  return ModelParams{.tau = tau,
                     .alpha = alpha,
                     .xi = xi,
                     .kernel = nod::design_gaussian_kernel(CircleGrid(n), k_c, p),
                     .custom_saturation = nullptr};
}

SimConfig fixed_run(double dt, double t_final, int stride = 1000000) {
  return SimConfig{.dt = dt, .t_final = t_final, .steady_tol = 1e-8, .steady_steps = 10,
                   .record_stride = stride, .stop_at_steady = false};
}

/// Heights of cyclic local maxima above half the global maximum.
std::vector<double> peak_heights(const RealField& f) {
  const int n = f.size();
  const double top = f.max();
  std::vector<double> heights;
  for (int j = 0; j < n; ++j) {
    const double v = f[j];
    if (v > 0.5 * top && v > f[(j + n - 1) % n] && v >= f[(j + 1) % n]) heights.push_back(v);
  }
  return heights;
}

// ---------------------------------------------------------------------------

Check closed_form_spectrum() {
  Check c;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int n : {16, 64}) {
    for (int draw = 0; draw < 5; ++draw) {
      const double tau = 0.2 + 2.0 * unit(rng);
      const double alpha = 0.1 + 1.9 * unit(rng);
      const double p = 0.5 + 4.5 * unit(rng);
      const int k_c = 1 + static_cast<int>(unit(rng) * (n / 2 - 1));
      const auto params = gaussian_params(n, k_c, alpha, 0.7, tau, p);
      const auto closed = nod::eigenvalues(params).eigenvalues;
      const auto numeric = nod::numerical_jacobian_spectrum(params);
      for (const auto& [k, v] : closed) worst = std::max(worst, std::abs(numeric.at(k) - v));
    }
  }
  c.detail << "max |lambda_dense - lambda_closed| = " << worst << " over 10 draws";
  c.require(worst < 1e-8, "error >= 1e-8");
  return c;
}

// Growth rate of |z_hat(1)| between t = 100 and t = 300 from a small random start.
double mode_one_growth(double alpha, double t_late = 300.0) {
  const auto params = gaussian_params(256, 1, alpha, 0.0);
  const RealField z0 = nod::uniform_noise(params.grid(), 7, 1e-3);
  std::vector<double> amp;
  auto observe = [&](double t, const Eigen::VectorXd& z) {
    if (std::abs(t - 100.0) < 0.025 || std::abs(t - t_late) < 0.025) {
      amp.push_back(std::abs(nod::to_spectral(RealField(params.grid(), z)).coeff(1)));
    }
  };
  nod::integrate(z0, InputSignal::constant(RealField::zeros(params.grid())), params,
                 fixed_run(0.05, t_late), observe);
  return std::log(amp.at(1) / amp.at(0)) / (t_late - 100.0);
}

Check pitchfork_threshold() {
  Check c;
  auto final_max = [](double alpha) {
    const auto params = gaussian_params(256, 1, alpha, 0.0);
    const RealField z0 = nod::uniform_noise(params.grid(), 7, 1e-3);
    return nod::integrate(z0, InputSignal::constant(RealField::zeros(params.grid())), params,
                          fixed_run(0.05, 400.0))
        .final_state.max_abs();
  };
  const double below = final_max(0.95);
  const double above = final_max(1.05);
  c.detail << "max|z| = " << below << " at alpha 0.95, " << above << " at alpha 1.05";
  c.require(below < 1e-6, "no decay below threshold");
  c.require(above > 1e-2, "no growth above threshold");

  double last_negative = 0.0;
  double first_positive = 2.0;
  bool monotone = true;
  double previous = -1.0;
  for (int i = -5; i <= 5; ++i) {
    const double alpha = 1.0 + 1e-3 * i;
    const double rate = mode_one_growth(alpha);
    monotone = monotone && rate > previous;
    previous = rate;
    if (rate < 0.0) last_negative = std::max(last_negative, alpha);
    if (rate > 0.0) first_positive = std::min(first_positive, alpha);
  }
  c.detail << "; growth sign changes between alpha " << last_negative << " and "
           << first_positive;
  c.require(monotone, "growth rate not increasing in alpha");
  c.require(last_negative < first_positive, "sign change not unique");
  c.require(last_negative >= 0.999 && first_positive <= 1.001 && last_negative <= 1.0 &&
                first_positive >= 1.0,
            "threshold not bracketed within 1e-3 of 1.0");
  return c;
}

Check pattern_count() {
  Check c;
  for (const auto& [name, k_c] : {std::pair{"fig2_k1", 1}, {"fig2_k3", 3}}) {
    const auto cfg = load(name);
    const auto params = cfg.model();
    int matched = 0;
    double worst_spread = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const RealField z0 = cfg.initial_condition.build(params.grid(), seed);
      const auto sim = nod::integrate(z0, InputSignal::constant(RealField::zeros(params.grid())),
                                      params, cfg.sim);
      const int peaks = nod::count_peaks(sim.final_state, cfg.rel_threshold);
      if (peaks == k_c) ++matched;
      const auto heights = peak_heights(sim.final_state);
      if (!heights.empty()) {
        const auto [lo, hi] = std::minmax_element(heights.begin(), heights.end());
        worst_spread = std::max(worst_spread, (*hi - *lo) / *hi);
      }
    }
    c.detail << "k_c=" << k_c << ": " << matched << "/10 with " << k_c << (k_c == 1 ? " peak" : " peaks")
             << ", height spread " << worst_spread << (k_c == 1 ? "; " : "");
    c.require(matched == 10, std::string(name) + " peak count");
    c.require(worst_spread < 0.01, std::string(name) + " heights differ by >= 1%");
  }
  return c;
}

Check bifurcation_structure() {
  Check c;
  auto sweep = [](const nod::cli::RunConfig& cfg, const std::vector<double>& alphas) {
    const auto& b = cfg.bifurcation;
    auto seeds = nod::default_sweep_seeds(cfg.grid(), b.seed_mode, b.seed_amplitudes);
    nod::SweepOptions options = nod::default_sweep_options();
    options.sim = b.sim;
    options.newton = b.newton;
    return nod::sweep_bifurcation(cfg.model(), alphas, seeds, options);
  };

  const auto sub = load("fig1_xi07");
  const double alpha_star = nod::eigenvalues(sub.model()).alpha_star;
  const auto diagram = sweep(sub, sub.bifurcation.alpha_grid());
  c.require(diagram.fold_alpha.has_value(), "xi=0.7 has no fold");
  if (diagram.fold_alpha) {
    const double fold = *diagram.fold_alpha;
    const double mid = 0.5 * (fold + alpha_star);
    const auto at_mid = sweep(sub, {mid});
    const bool zero_stable = at_mid.branches.front().neutral && at_mid.branches.front().stable();
    const bool pattern_stable = std::any_of(at_mid.branches.begin(), at_mid.branches.end(),
                                            [](const auto& b) { return !b.neutral && b.stable(); });
    c.detail << "xi=0.7: fold " << fold << " < alpha* " << alpha_star << ", bistable at " << mid
             << " (zero " << zero_stable << ", pattern " << pattern_stable << ")";
    c.require(fold < alpha_star, "fold not below alpha*");
    c.require(zero_stable && pattern_stable, "no bistability at midpoint");
  }

  auto super = load("fig1_xi0");
  const auto flat = sweep(super, super.bifurcation.alpha_grid());
  bool only_above = true;
  bool any_above = false;
  for (const auto& b : flat.branches) {
    if (b.neutral || !b.stable()) continue;
    if (b.alpha <= alpha_star) only_above = false;
    any_above = true;
  }
  c.detail << "; xi=0: fold " << (flat.fold_alpha ? "present" : "absent")
           << ", stable patterns only above alpha* " << (only_above && any_above);
  c.require(!flat.fold_alpha.has_value(), "xi=0 has a fold");
  c.require(only_above && any_above, "xi=0 stable patterns not confined to alpha > alpha*");
  return c;
}

Check input_alignment() {
  Check c;
  const auto aligned = load("fig3_aligned");
  const auto a = nod::run_response_experiment(aligned.input.build(aligned.grid()),
                                              aligned.model(), aligned.sim);
  const double a_max = a.sim.final_state.max();
  const int a_peaks = nod::count_peaks(a.sim.final_state, aligned.rel_threshold);
  const auto unaligned = load("fig3_unaligned");
  const auto u = nod::run_response_experiment(unaligned.input.build(unaligned.grid()),
                                              unaligned.model(), unaligned.sim);
  const double u_max = u.sim.final_state.max_abs();
  c.detail << "aligned max z " << a_max << " with " << a_peaks
           << (a_peaks == 1 ? " peak" : " peaks") << ", input max "
           << aligned.input.build(aligned.grid()).max() << "; unaligned max |z| " << u_max;
  c.require(a_max >= 1.5 && a_peaks == 1, "aligned response");
  c.require(u_max < 0.1, "unaligned response");
  return c;
}

Check translation_equivariance() {
  Check c;
  const auto params = gaussian_params(256, 1, 0.98, 0.7);
  const CircleGrid& grid = params.grid();
  const RealField z0 = nod::uniform_noise(grid, 31, 0.5);
  const RealField u = nod::uniform_noise(grid, 32, 0.005);
  const int m = grid.size() / 4;
  const SimConfig cfg = fixed_run(0.01, 100.0, 1);
  const auto plain = nod::integrate(z0, InputSignal::constant(u), params, cfg);
  const auto moved =
      nod::integrate(shift(z0, m), InputSignal::constant(shift(u, m)), params, cfg);
  double worst = 0.0;
  for (std::size_t i = 0; i < plain.snapshots.size(); ++i) {
    worst = std::max(worst, (shift(plain.snapshots[i], m).values() - moved.snapshots[i].values())
                                .cwiseAbs()
                                .maxCoeff());
  }
  c.detail << "max deviation " << worst << " over " << plain.snapshots.size() << " snapshots";
  c.require(plain.snapshots.size() == moved.snapshots.size(), "trajectory lengths");
  c.require(worst < 1e-10, "deviation >= 1e-10");
  return c;
}

Check mean_mode() {
  Check c;
  const double tau = 2.0;
  const auto params = gaussian_params(256, 1, 0.98, 0.7, tau);
  const CircleGrid& grid = params.grid();
  const RealField z0 = nod::uniform_noise(grid, 41, 0.8);
  const RealField u = nod::uniform_noise(grid, 42, 0.01);
  const double m0 = z0.values().mean();
  const double um = u.values().mean();
  double worst = 0.0;
  auto observe = [&](double t, const Eigen::VectorXd& z) {
    const double expected = um + (m0 - um) * std::exp(-t / tau);
    worst = std::max(worst, std::abs(z.mean() - expected));
  };
  nod::integrate(z0, InputSignal::constant(u), params, fixed_run(0.01, 60.0), observe);
  c.detail << "max |mean(z) - scalar solution| = " << worst;
  c.require(worst < 1e-6, "mean mode deviates");
  return c;
}

Check linear_gain() {
  Check c;
  const auto params = gaussian_params(256, 1, 0.5, 0.7);
  const CircleGrid& grid = params.grid();
  RealField u = RealField::sample(grid, [](double t) {
    return std::cos(2 * pi * t) + 0.7 * std::cos(2 * pi * (3 * t + 0.2)) +
           0.5 * std::cos(2 * pi * (8 * t + 0.55));
  });
  u = RealField(grid, u.values() * (1e-4 / u.max()));
  const auto r = nod::run_response_experiment(
      u, params,
      SimConfig{.dt = 0.01, .t_final = 200.0, .steady_tol = 1e-14, .steady_steps = 10,
                .record_stride = 1000000, .stop_at_steady = true});
  const auto zs = nod::to_spectral(r.sim.final_state);
  const auto us = nod::to_spectral(u);
  const auto profile = nod::spatial_transfer_profile(params);
  double worst = 0.0;
  int modes = 0;
  bool exact = true;
  for (int k = grid.k_min(); k <= grid.k_max(); ++k) {
    const double predicted = 1.0 / (1.0 - params.alpha * params.kernel.coefficient(k));
    exact = exact && profile.at(k) == params.tau * predicted && profile.at(k) == predicted;
    if (std::abs(us.coeff(k)) <= 1e-8) continue;
    ++modes;
    const std::complex<double> gain = zs.coeff(k) / us.coeff(k);
    worst = std::max(worst, std::abs(gain - predicted) / predicted);
  }
  c.detail << "max relative gain error " << worst << " over " << modes
           << " driven modes; transfer profile equals 1/(1 - alpha W_hat) at tau = 1: " << exact;
  c.require(modes == 6, "expected six driven modes");
  c.require(worst < 1e-3, "gain error >= 1e-3");
  c.require(exact, "transfer profile mismatch");
  return c;
}

Check scenarios() {
  Check c;
  const double bound_limit = 0.1;
  double worst_bound = 0.0;

  const auto fig4a = load("fig4a");
  int widest = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto spec = *fig4a.scenario;
    spec.perturbation_seed = seed;
    const auto r = nod::run_scenario(spec, fig4a.model(), fig4a.sim, fig4a.strong_threshold);
    worst_bound = std::max(worst_bound, r.lipschitz_bound * fig4a.tau);
    if (r.decision.chosen_gap == 0) ++widest;
  }

  const auto fig4b = load("fig4b");
  int single = 0;
  int per_gap[2] = {0, 0};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto spec = *fig4b.scenario;
    spec.perturbation_seed = seed;
    const auto r = nod::run_scenario(spec, fig4b.model(), fig4b.sim, fig4b.strong_threshold);
    worst_bound = std::max(worst_bound, r.lipschitz_bound * fig4b.tau);
    const bool strong = r.decision.opinion_max > fig4b.strong_threshold;
    if (strong && nod::count_peaks(r.sim.final_state, fig4b.rel_threshold) == 1 &&
        r.decision.chosen_gap) {
      ++single;
      ++per_gap[*r.decision.chosen_gap];
    }
  }

  bool switched[2] = {false, false};
  int idx = 0;
  for (const char* name : {"fig5a", "fig5b"}) {
    const auto cfg = load(name);
    const auto r = nod::run_scenario(*cfg.scenario, cfg.model(), cfg.sim, cfg.strong_threshold);
    worst_bound = std::max(worst_bound, r.lipschitz_bound * cfg.tau);
    switched[idx++] = r.decision.switched;
  }

  c.detail << "4a widest " << widest << "/10; 4b single peak " << single << "/20 (gaps "
           << per_gap[0] << "/" << per_gap[1] << "); 5a switched " << switched[0]
           << ", 5b switched " << switched[1] << "; max tau*lipschitz " << worst_bound;
  c.require(widest == 10, "4a");
  c.require(single == 20, "4b");
  c.require(!switched[0] && switched[1], "5a/5b");
  c.require(worst_bound < bound_limit, "Lipschitz bound");
  return c;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    if (e.path().filename() == "manifest.json") {
      Json m = Json::parse(text);
      m["manifest"].erase("timestamp");
      text = m.dump();
    }
    files[e.path().filename().string()] = std::move(text);
  }
  return files;
}

Check determinism() {
  Check c;
  const fs::path root = fs::temp_directory_path() / "nod_acceptance_determinism";
  fs::remove_all(root);
  const std::vector<std::vector<std::string>> commands{
      {"design-kernel", "--set", "model.kernel.k_c=3"},
      {"spectrum", "--config", (kConfigDir / "fig1_xi0.json").string()},
      {"simulate", "--config", (kConfigDir / "fig2_k3.json").string(), "--seed", "5", "--set",
       "sim.t_final=50"},
      {"respond", "--config", (kConfigDir / "fig3_aligned.json").string(), "--set",
       "sim.t_final=50"},
      {"bifurcation", "--config", (kConfigDir / "fig1_xi07.json").string(), "--threads", "2",
       "--set", "bifurcation.alphas=[0.9,1.02]", "--set", "bifurcation.locate_unstable=false",
       "--set", "grid.n_points=64"},
      {"scenario", "--config", (kConfigDir / "fig5b.json").string(), "--set",
       "switching={\"gap_index\": 0, \"final_widths\": [0.05, 0.15]}", "--threads", "2"},
  };
  int identical = 0;
  for (const auto& base : commands) {
    const fs::path out = root / base.front();
    std::vector<std::string> args{"nod"};
    args.insert(args.end(), base.begin(), base.end());
    args.insert(args.end(), {"--out", out.string()});
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::map<std::string, std::string> runs[2];
    bool ok = true;
    for (auto& run : runs) {
      std::ostringstream sink;
      ok = ok && nod::cli::run(static_cast<int>(argv.size()), argv.data(), sink, sink) == 0;
      if (ok) run = snapshot(out);
    }
    if (ok && runs[0] == runs[1] && !runs[0].empty()) {
      ++identical;
    } else {
      c.detail << "[" << base.front() << " differs] ";
    }
  }
  fs::remove_all(root);
  c.detail << identical << "/" << commands.size() << " commands byte-identical on repeat";
  c.require(identical == static_cast<int>(commands.size()), "non-deterministic output");
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
      {"closed-form spectrum matches dense Jacobian", closed_form_spectrum},
      {"neutral state loses stability at alpha*", pitchfork_threshold},
      {"k_c sets the number of opinion peaks", pattern_count},
      {"subcritical fold and supercritical onset", bifurcation_structure},
      {"aligned input amplified, unaligned ignored", input_alignment},
      {"translation equivariance", translation_equivariance},
      {"mean mode follows the scalar ODE", mean_mode},
      {"linear gain matches the spatial transfer profile", linear_gain},
      {"gap-selection scenarios", scenarios},
      {"CLI outputs are deterministic", determinism},
  };
  int failures = 0;
  std::cout << std::boolalpha << std::setprecision(6);
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Check c;
    try {
      c = criteria[i].second();
    } catch (const std::exception& e) {
      c.passed = false;
      c.detail << "threw: " << e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!c.passed) ++failures;
    std::cout << (c.passed ? "PASS" : "FAIL") << "  criterion " << (i + 1) << ": "
              << criteria[i].first << " -- " << c.detail.str() << " (" << std::fixed
              << std::setprecision(1) << secs << " s)" << std::defaultfloat
              << std::setprecision(6) << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
