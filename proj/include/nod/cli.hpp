#pragma once

// Config-driven command-line runs. A run is fully described by a RunConfig;
// its JSON form is written to manifest.json and can be fed back as --config.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nod/io.hpp"

namespace nod::cli {

enum class Command { DesignKernel, Spectrum, Simulate, Respond, Bifurcation, Scenario };

std::string to_string(Command command);
Command command_from_string(const std::string& name);

struct KernelConfig {
  enum class Source { Gaussian, Profile, ProfileFile, KernelFile };

  Source source = Source::Gaussian;
  int k_c = 1;
  double p = 3.0;
  KernelFamily family = KernelFamily::Harmonic;
  std::map<int, double> profile;
  std::string path;

  [[nodiscard]] Kernel build(const CircleGrid& grid) const;
};

struct InitialCondition {
  enum class Kind { Zero, Cosine, Random, SmoothRandom, File };

  Kind kind = Kind::Cosine;
  double amplitude = 1e-3;  ///< peak |z|; for smooth_random the exact max |z|
  int mode = 1;             ///< highest mode for smooth_random
  double phase = 0.0;  ///< in units of a full turn
  double noise = 0.0;  ///< seeded uniform noise added to a cosine
  std::string path;

  [[nodiscard]] RealField build(const CircleGrid& grid, std::uint64_t seed) const;
};

struct InputConfig {
  enum class Kind { Zero, Bump, Cosine, File };

  Kind kind = Kind::Zero;
  double amplitude = 0.0;
  double center = 0.5;
  double width = 0.3;
  BumpShape shape = BumpShape::RaisedCosine;
  double baseline = 0.0;
  int mode = 1;
  double phase = 0.0;
  std::string path;

  [[nodiscard]] RealField build(const CircleGrid& grid) const;
};

struct BifurcationConfig {
  std::vector<double> alphas;  ///< explicit grid; overrides the range below
  double alpha_min = 0.8;
  double alpha_max = 1.06;
  double alpha_step = 0.02;
  int seed_mode = 1;
  std::vector<double> seed_amplitudes{0.05, 0.5, 1.0, 2.0};
  int random_seeds = 0;
  double random_amplitude = 1.0;
  bool locate_unstable = false;
  int bisection_steps = 12;
  NewtonOptions newton;
  SimConfig sim = default_sweep_options().sim;

  [[nodiscard]] std::vector<double> alpha_grid() const;
};

struct SwitchingConfig {
  int gap_index = 0;
  std::vector<double> final_widths;
};

struct RunConfig {
  int n_points = CircleGrid::kDefaultPoints;
  double tau = 1.0;
  double alpha = 0.98;
  double xi = 0.7;
  KernelConfig kernel;
  SimConfig sim;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  int threads = 1;
  InitialCondition initial_condition;
  InputConfig input;
  BifurcationConfig bifurcation;
  std::optional<ScenarioSpec> scenario;
  double strong_threshold = kDefaultStrongThreshold;
  double rel_threshold = 0.5;
  std::optional<SwitchingConfig> switching;
  Json provenance;

  [[nodiscard]] CircleGrid grid() const { return CircleGrid(n_points); }
  [[nodiscard]] ModelParams model() const;
};

/// Parses and validates a config document. Unknown keys are rejected; a
/// "manifest" block written by a previous run is ignored.
RunConfig parse_run_config(const Json& j);

/// Complete config, every field present.
Json to_json(const RunConfig& config);

/// Applies "a.b.c=value" to `j`. The value is read as JSON when possible and
/// as a bare string otherwise. Numeric path segments index arrays.
void apply_override(Json& j, const std::string& assignment);

/// Writes the command's outputs and manifest.json into config.output_dir.
void execute(Command command, const RunConfig& config);

/// Exit code for an error category: 1 config, 2 model or validation,
/// 3 numerical failure.
int exit_code(ErrorCategory category);

/// {"error": {code, category, exit_code, message}}.
Json error_json(const Error& error);

/// Full command-line entry point. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nod::cli
