#include "nod/response.hpp"

#include "nod/parallel.hpp"

namespace nod {

ResponseResult run_response_experiment(const RealField& u, const ModelParams& params,
                                       const SimConfig& cfg) {
  const RealField z0 = RealField::zeros(params.grid());
  SimResult sim = integrate(z0, InputSignal::constant(u), params, cfg);
  const double u_max = u.max();
  const double z_max = sim.final_state.max();
  const double amplification = u_max > 0.0 ? z_max / u_max : 0.0;
  const auto align = alignment(u, params.kernel.k_max());
  return ResponseResult{std::move(sim), align, amplification};
}

ScenarioResult run_scenario(const ScenarioSpec& spec, const ModelParams& params,
                            const SimConfig& cfg, double strong_threshold) {
  const CircleGrid& grid = params.grid();
  const InputSignal input = InputSignal::ramped_gaps(spec, grid, params.tau);

  Decision decision;
  std::optional<int> committed_gap;
  auto observe = [&](double t, const Eigen::VectorXd& z) {
    Eigen::Index top = 0;
    const double value = z.maxCoeff(&top);
    if (value <= strong_threshold) return;
    const auto gap = spec.gap_containing(grid.theta(static_cast<int>(top)), t);
    if (!decision.decision_time) {
      decision.decision_time = t;
      committed_gap = gap;
      return;
    }
    if (!gap) return;
    if (!committed_gap) {
      committed_gap = gap;
    } else if (*gap != *committed_gap) {
      decision.switched = true;
    }
  };
  // A seeded tie-break starts from machine-level amplitudes and grows slowly
  // away from an unstable symmetric state, which the steady-state test would
  // otherwise accept.
  SimConfig run_cfg = cfg;
  if (spec.perturbation_seed) run_cfg.stop_at_steady = false;
  SimResult sim = integrate(RealField::zeros(grid), input, params, run_cfg, observe);

  Eigen::Index top = 0;
  decision.opinion_max = sim.final_state.values().maxCoeff(&top);
  decision.argmax_index = static_cast<int>(top);
  decision.argmax_theta = grid.theta(decision.argmax_index);
  if (decision.opinion_max > strong_threshold) {
    decision.chosen_gap = spec.gap_containing(decision.argmax_theta, sim.t_end);
    decision.ambiguous = !decision.chosen_gap.has_value();
  }
  return ScenarioResult{std::move(sim), decision, input.lipschitz_bound()};
}

std::vector<SwitchSample> characterize_switching(const ScenarioSpec& spec, int gap_index,
                                                 const std::vector<double>& final_widths,
                                                 const ModelParams& params, const SimConfig& cfg,
                                                 double strong_threshold, int threads) {
  if (gap_index < 0 || gap_index >= static_cast<int>(spec.gaps.size()) ||
      !spec.gaps[gap_index].ramp) {
    throw Error(ErrorCode::InvalidArgument, "switching sweep needs a ramped gap");
  }
  std::vector<SwitchSample> out(final_widths.size());
  parallel_for(final_widths.size(), threads, [&](std::size_t i) {
    ScenarioSpec variant = spec;
    variant.gaps[gap_index].ramp->final_width = final_widths[i];
    const ScenarioResult r = run_scenario(variant, params, cfg, strong_threshold);
    out[i] = SwitchSample{final_widths[i], r.decision.switched, r.decision.chosen_gap};
  });
  return out;
}

}  // namespace nod
