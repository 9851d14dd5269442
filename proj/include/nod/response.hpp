#pragma once

// Input-response experiments and gap-selection scenarios.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "nod/analysis.hpp"

namespace nod {

struct ResponseResult {
  SimResult sim;
  std::complex<double> alignment;  ///< u_hat(k_max)
  double amplification = 0.0;      ///< max z(., t_end) / max u
};

/// Integrates from z = 0 under the constant input u.
ResponseResult run_response_experiment(const RealField& u, const ModelParams& params,
                                       const SimConfig& cfg);

inline constexpr double kDefaultStrongThreshold = 1.0;

struct Decision {
  std::optional<int> chosen_gap;
  double opinion_max = 0.0;  ///< max_theta z(theta, t_end)
  std::optional<double> decision_time;
  bool switched = false;
  /// The final argmax lies outside every gap although the opinion is strong.
  bool ambiguous = false;
  int argmax_index = 0;
  double argmax_theta = 0.0;
};

struct ScenarioResult {
  SimResult sim;
  Decision decision;
  double lipschitz_bound = 0.0;
};

/// Integrates from z = 0 with the rendered, possibly ramped input and reads
/// out the chosen gap from the final strongest opinion.
ScenarioResult run_scenario(const ScenarioSpec& spec, const ModelParams& params,
                            const SimConfig& cfg,
                            double strong_threshold = kDefaultStrongThreshold);

struct SwitchSample {
  double final_width = 0.0;
  bool switched = false;
  std::optional<int> chosen_gap;
};

/// Replaces the ramp target of gap `gap_index` with each width in turn and
/// reports whether the decision switched.
std::vector<SwitchSample> characterize_switching(const ScenarioSpec& spec, int gap_index,
                                                 const std::vector<double>& final_widths,
                                                 const ModelParams& params, const SimConfig& cfg,
                                                 double strong_threshold = kDefaultStrongThreshold,
                                                 int threads = 1);

}  // namespace nod
