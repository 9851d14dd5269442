#include "nod/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#ifndef NOD_VERSION
#define NOD_VERSION "0.0.0"
#endif

namespace nod::cli {

namespace fs = std::filesystem;

namespace {

// Typed access to an object's members with the key path in error messages.
class Reader {
 public:
  Reader(const Json& j, std::string context, std::initializer_list<const char*> allowed)
      : j_(j), context_(std::move(context)) {
    require_keys(j, allowed, context_);
  }

  [[nodiscard]] bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  [[nodiscard]] const Json& at(const char* key) const { return j_.at(key); }
  [[nodiscard]] std::string path(const char* key) const { return context_ + "." + key; }

  template <typename T>
  void read(const char* key, T& target) const {
    if (!has(key)) return;
    try {
      target = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, path(key) + ": " + e.what());
    }
  }

 private:
  const Json& j_;
  std::string context_;
};

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  return in;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path.string() + "'");
  out << content;
}

void write_json(const fs::path& path, const Json& j) { write_file(path, j.dump(2) + "\n"); }

template <typename Writer>
void write_with(const fs::path& path, Writer&& writer) {
  std::ostringstream ss;
  writer(ss);
  write_file(path, ss.str());
}

std::string utc_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// --------------------------------------------------------------------------
// Section parsers

KernelConfig parse_kernel(const Json& j) {
  Reader r(j, "model.kernel", {"k_c", "p", "family", "profile", "profile_file", "file"});
  KernelConfig k;
  const int sources = (r.has("profile") ? 1 : 0) + (r.has("profile_file") ? 1 : 0) +
                      (r.has("file") ? 1 : 0);
  const bool gaussian = r.has("k_c") || r.has("p") || r.has("family");
  if (sources > 1 || (sources == 1 && gaussian)) {
    throw Error(ErrorCode::ParseError,
                "model.kernel: give one of k_c/p/family, profile, profile_file or file");
  }
  if (r.has("profile")) {
    k.source = KernelConfig::Source::Profile;
    const Json& prof = r.at("profile");
    if (!prof.is_object()) throw Error(ErrorCode::ParseError, "model.kernel.profile must be an object");
    for (const auto& [key, value] : prof.items()) {
      char* end = nullptr;
      const long freq = std::strtol(key.c_str(), &end, 10);
      if (end == key.c_str() || *end != '\0' || !value.is_number()) {
        throw Error(ErrorCode::ParseError, "model.kernel.profile entry '" + key + "'");
      }
      k.profile[static_cast<int>(freq)] = value.get<double>();
    }
  } else if (r.has("profile_file")) {
    k.source = KernelConfig::Source::ProfileFile;
    r.read("profile_file", k.path);
  } else if (r.has("file")) {
    k.source = KernelConfig::Source::KernelFile;
    r.read("file", k.path);
  } else {
    r.read("k_c", k.k_c);
    r.read("p", k.p);
    std::string family = to_string(k.family);
    r.read("family", family);
    k.family = kernel_family_from_string(family);
  }
  return k;
}

Json kernel_json(const KernelConfig& k) {
  Json j;
  switch (k.source) {
    case KernelConfig::Source::Gaussian:
      j["k_c"] = k.k_c;
      j["p"] = k.p;
      j["family"] = to_string(k.family);
      break;
    case KernelConfig::Source::Profile: {
      Json prof = Json::object();
      for (const auto& [freq, value] : k.profile) prof[std::to_string(freq)] = value;
      j["profile"] = std::move(prof);
      break;
    }
    case KernelConfig::Source::ProfileFile:
      j["profile_file"] = k.path;
      break;
    case KernelConfig::Source::KernelFile:
      j["file"] = k.path;
      break;
  }
  return j;
}

SimConfig parse_sim(const Json& j, const std::string& context, SimConfig sim) {
  Reader r(j, context,
           {"dt", "t_final", "steady_tol", "steady_steps", "record_stride", "stop_at_steady"});
  r.read("dt", sim.dt);
  r.read("t_final", sim.t_final);
  r.read("steady_tol", sim.steady_tol);
  r.read("steady_steps", sim.steady_steps);
  r.read("record_stride", sim.record_stride);
  r.read("stop_at_steady", sim.stop_at_steady);
  return sim;
}

Json sim_json(const SimConfig& s) {
  Json j;
  j["dt"] = s.dt;
  j["t_final"] = s.t_final;
  j["steady_tol"] = s.steady_tol;
  j["steady_steps"] = s.steady_steps;
  j["record_stride"] = s.record_stride;
  j["stop_at_steady"] = s.stop_at_steady;
  return j;
}

const char* to_string(InitialCondition::Kind kind) {
  switch (kind) {
    case InitialCondition::Kind::Zero: return "zero";
    case InitialCondition::Kind::Cosine: return "cosine";
    case InitialCondition::Kind::Random: return "random";
    case InitialCondition::Kind::SmoothRandom: return "smooth_random";
    case InitialCondition::Kind::File: return "file";
  }
  return "";
}

InitialCondition parse_initial_condition(const Json& j) {
  Reader r(j, "initial_condition", {"type", "amplitude", "mode", "phase", "noise", "path"});
  InitialCondition ic;
  std::string type = to_string(ic.kind);
  r.read("type", type);
  if (type == "zero") {
    ic.kind = InitialCondition::Kind::Zero;
  } else if (type == "cosine") {
    ic.kind = InitialCondition::Kind::Cosine;
  } else if (type == "random") {
    ic.kind = InitialCondition::Kind::Random;
  } else if (type == "smooth_random") {
    ic.kind = InitialCondition::Kind::SmoothRandom;
  } else if (type == "file") {
    ic.kind = InitialCondition::Kind::File;
  } else {
    throw Error(ErrorCode::ParseError, "initial_condition.type '" + type + "'");
  }
  r.read("amplitude", ic.amplitude);
  r.read("mode", ic.mode);
  r.read("phase", ic.phase);
  r.read("noise", ic.noise);
  r.read("path", ic.path);
  if (ic.kind == InitialCondition::Kind::SmoothRandom &&
      (ic.mode < 1 || !(ic.amplitude > 0.0))) {
    throw Error(ErrorCode::InvalidArgument,
                "smooth_random needs mode >= 1 and a positive amplitude");
  }
  if (ic.kind == InitialCondition::Kind::File && ic.path.empty()) {
    throw Error(ErrorCode::ParseError, "initial_condition.path is required for type 'file'");
  }
  return ic;
}

Json initial_condition_json(const InitialCondition& ic) {
  Json j;
  j["type"] = to_string(ic.kind);
  switch (ic.kind) {
    case InitialCondition::Kind::Zero:
      break;
    case InitialCondition::Kind::Cosine:
      j["amplitude"] = ic.amplitude;
      j["mode"] = ic.mode;
      j["phase"] = ic.phase;
      j["noise"] = ic.noise;
      break;
    case InitialCondition::Kind::Random:
      j["amplitude"] = ic.amplitude;
      break;
    case InitialCondition::Kind::SmoothRandom:
      j["amplitude"] = ic.amplitude;
      j["mode"] = ic.mode;
      break;
    case InitialCondition::Kind::File:
      j["path"] = ic.path;
      break;
  }
  return j;
}

const char* to_string(InputConfig::Kind kind) {
  switch (kind) {
    case InputConfig::Kind::Zero: return "zero";
    case InputConfig::Kind::Bump: return "bump";
    case InputConfig::Kind::Cosine: return "cosine";
    case InputConfig::Kind::File: return "file";
  }
  return "";
}

InputConfig parse_input(const Json& j) {
  Reader r(j, "input",
           {"type", "amplitude", "center", "width", "shape", "baseline", "mode", "phase", "path"});
  InputConfig in;
  std::string type = to_string(in.kind);
  r.read("type", type);
  if (type == "zero") {
    in.kind = InputConfig::Kind::Zero;
  } else if (type == "bump") {
    in.kind = InputConfig::Kind::Bump;
  } else if (type == "cosine") {
    in.kind = InputConfig::Kind::Cosine;
  } else if (type == "file") {
    in.kind = InputConfig::Kind::File;
  } else {
    throw Error(ErrorCode::ParseError, "input.type '" + type + "'");
  }
  r.read("amplitude", in.amplitude);
  r.read("center", in.center);
  r.read("width", in.width);
  std::string shape = to_string(in.shape);
  r.read("shape", shape);
  in.shape = bump_shape_from_string(shape);
  r.read("baseline", in.baseline);
  r.read("mode", in.mode);
  r.read("phase", in.phase);
  r.read("path", in.path);
  if (in.kind == InputConfig::Kind::File && in.path.empty()) {
    throw Error(ErrorCode::ParseError, "input.path is required for type 'file'");
  }
  return in;
}

Json input_json(const InputConfig& in) {
  Json j;
  j["type"] = to_string(in.kind);
  switch (in.kind) {
    case InputConfig::Kind::Zero:
      break;
    case InputConfig::Kind::Bump:
      j["amplitude"] = in.amplitude;
      j["center"] = in.center;
      j["width"] = in.width;
      j["shape"] = to_string(in.shape);
      j["baseline"] = in.baseline;
      break;
    case InputConfig::Kind::Cosine:
      j["amplitude"] = in.amplitude;
      j["mode"] = in.mode;
      j["phase"] = in.phase;
      break;
    case InputConfig::Kind::File:
      j["path"] = in.path;
      break;
  }
  return j;
}

BifurcationConfig parse_bifurcation(const Json& j) {
  Reader r(j, "bifurcation",
           {"alphas", "alpha_min", "alpha_max", "alpha_step", "seed_mode", "seed_amplitudes",
            "random_seeds", "random_amplitude", "locate_unstable", "bisection_steps",
            "newton_tolerance", "newton_max_iterations", "sim"});
  BifurcationConfig b;
  r.read("alphas", b.alphas);
  r.read("alpha_min", b.alpha_min);
  r.read("alpha_max", b.alpha_max);
  r.read("alpha_step", b.alpha_step);
  r.read("seed_mode", b.seed_mode);
  r.read("seed_amplitudes", b.seed_amplitudes);
  r.read("random_seeds", b.random_seeds);
  r.read("random_amplitude", b.random_amplitude);
  r.read("locate_unstable", b.locate_unstable);
  r.read("bisection_steps", b.bisection_steps);
  r.read("newton_tolerance", b.newton.tolerance);
  r.read("newton_max_iterations", b.newton.max_iterations);
  if (r.has("sim")) b.sim = parse_sim(r.at("sim"), "bifurcation.sim", b.sim);
  if (b.alphas.empty() && !(b.alpha_step > 0.0 && b.alpha_max >= b.alpha_min)) {
    throw Error(ErrorCode::InvalidArgument,
                "bifurcation: need alpha_step > 0 and alpha_max >= alpha_min");
  }
  if (b.random_seeds < 0 || b.bisection_steps < 0) {
    throw Error(ErrorCode::InvalidArgument, "bifurcation: counts must be non-negative");
  }
  if (b.seed_amplitudes.empty() && b.random_seeds == 0) {
    throw Error(ErrorCode::InvalidArgument, "bifurcation: no seeds requested");
  }
  return b;
}

Json bifurcation_json(const BifurcationConfig& b) {
  Json j;
  if (!b.alphas.empty()) {
    j["alphas"] = b.alphas;
  } else {
    j["alpha_min"] = b.alpha_min;
    j["alpha_max"] = b.alpha_max;
    j["alpha_step"] = b.alpha_step;
  }
  j["seed_mode"] = b.seed_mode;
  j["seed_amplitudes"] = b.seed_amplitudes;
  j["random_seeds"] = b.random_seeds;
  j["random_amplitude"] = b.random_amplitude;
  j["locate_unstable"] = b.locate_unstable;
  j["bisection_steps"] = b.bisection_steps;
  j["newton_tolerance"] = b.newton.tolerance;
  j["newton_max_iterations"] = b.newton.max_iterations;
  j["sim"] = sim_json(b.sim);
  return j;
}

std::vector<RealField> load_seeds(const RunConfig& c, const CircleGrid& grid) {
  const BifurcationConfig& b = c.bifurcation;
  std::vector<RealField> seeds;
  if (!b.seed_amplitudes.empty()) seeds = default_sweep_seeds(grid, b.seed_mode, b.seed_amplitudes);
  for (int i = 0; i < b.random_seeds; ++i) {
    seeds.push_back(uniform_noise(grid, c.seed + static_cast<std::uint64_t>(i), b.random_amplitude));
  }
  return seeds;
}

// --------------------------------------------------------------------------
// Command bodies

void cmd_design_kernel(const RunConfig& c, const fs::path& out) {
  const Kernel kernel = c.kernel.build(c.grid());
  write_with(out / "kernel.csv", [&](std::ostream& os) { write_kernel_csv(os, kernel); });
  write_with(out / "kernel_real.csv",
             [&](std::ostream& os) { write_field_csv(os, kernel.real_space()); });
  const ValidationReport report = validate_kernel(kernel);
  write_json(out / "validation.json", to_json(report));
  if (!report.all_passed()) {
    std::string failed;
    for (const auto& check : report.checks) {
      if (!check.passed) failed += (failed.empty() ? "" : ", ") + check.name;
    }
    throw Error(ErrorCode::ValidationFailed, "kernel checks failed: " + failed);
  }
}

void cmd_spectrum(const RunConfig& c, const fs::path& out) {
  write_json(out / "spectrum.json", to_json(eigenvalues(c.model())));
}

void write_run_outputs(const SimResult& sim, const fs::path& out, Json summary) {
  write_with(out / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, sim); });
  write_with(out / "final_state.csv",
             [&](std::ostream& os) { write_field_csv(os, sim.final_state); });
  write_json(out / "summary.json", summary);
}

void cmd_simulate(const RunConfig& c, const fs::path& out) {
  const ModelParams params = c.model();
  const CircleGrid grid = params.grid();
  const RealField z0 = c.initial_condition.build(grid, c.seed);
  const RealField u = c.input.build(grid);
  const SimResult sim = integrate(z0, InputSignal::constant(u), params, c.sim);
  write_with(out / "initial_state.csv", [&](std::ostream& os) { write_field_csv(os, z0); });
  write_run_outputs(sim, out, summary_json(sim, c.rel_threshold));
}

void cmd_respond(const RunConfig& c, const fs::path& out) {
  const ModelParams params = c.model();
  const RealField u = c.input.build(params.grid());
  const ResponseResult r = run_response_experiment(u, params, c.sim);
  Json summary = summary_json(r.sim, c.rel_threshold);
  summary["max_u"] = u.max();
  summary["amplification"] = r.amplification;
  summary["alignment"] = {{"re", r.alignment.real()}, {"im", r.alignment.imag()}};
  write_with(out / "input.csv", [&](std::ostream& os) { write_field_csv(os, u); });
  write_run_outputs(r.sim, out, std::move(summary));
}

void cmd_bifurcation(const RunConfig& c, const fs::path& out) {
  const ModelParams params = c.model();
  SweepOptions options;
  options.sim = c.bifurcation.sim;
  options.newton = c.bifurcation.newton;
  options.locate_unstable = c.bifurcation.locate_unstable;
  options.bisection_steps = c.bifurcation.bisection_steps;
  options.threads = c.threads;
  const BifurcationDiagram diagram =
      sweep_bifurcation(params, c.bifurcation.alpha_grid(), load_seeds(c, params.grid()), options);
  write_json(out / "diagram.json", to_json(diagram));
  write_with(out / "diagram.csv", [&](std::ostream& os) { write_diagram_csv(os, diagram); });
}

void cmd_scenario(const RunConfig& c, const fs::path& out) {
  if (!c.scenario) throw Error(ErrorCode::InvalidArgument, "scenario command needs a 'scenario'");
  const ModelParams params = c.model();
  const ScenarioSpec& spec = *c.scenario;
  const ScenarioResult r = run_scenario(spec, params, c.sim, c.strong_threshold);
  Json summary = summary_json(r.sim, c.rel_threshold);
  summary["lipschitz_bound"] = r.lipschitz_bound;
  write_with(out / "input.csv",
             [&](std::ostream& os) { write_field_csv(os, render_input(spec, params.grid(), 0.0)); });
  if (spec.static_after() > 0.0) {
    write_with(out / "input_final.csv", [&](std::ostream& os) {
      write_field_csv(os, render_input(spec, params.grid(), spec.static_after()));
    });
  }
  write_run_outputs(r.sim, out, std::move(summary));
  write_json(out / "decisions.json", to_json(r.decision));
  if (c.switching) {
    const auto samples =
        characterize_switching(spec, c.switching->gap_index, c.switching->final_widths, params,
                               c.sim, c.strong_threshold, c.threads);
    write_with(out / "switching.csv", [&](std::ostream& os) { write_switching_csv(os, samples); });
  }
}

Json manifest_json(Command command, const RunConfig& config) {
  Json j = to_json(config);
  j["manifest"] = {{"command", to_string(command)},
                   {"version", NOD_VERSION},
                   {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                         std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                         std::to_string(EIGEN_MINOR_VERSION)},
                   {"seed", config.seed},
                   {"timestamp", utc_timestamp()}};
  return j;
}

}  // namespace

// ----------------------------------------------------------------------------

std::string to_string(Command command) {
  switch (command) {
    case Command::DesignKernel: return "design-kernel";
    case Command::Spectrum: return "spectrum";
    case Command::Simulate: return "simulate";
    case Command::Respond: return "respond";
    case Command::Bifurcation: return "bifurcation";
    case Command::Scenario: return "scenario";
  }
  return "";
}

Command command_from_string(const std::string& name) {
  for (Command c : {Command::DesignKernel, Command::Spectrum, Command::Simulate, Command::Respond,
                    Command::Bifurcation, Command::Scenario}) {
    if (to_string(c) == name) return c;
  }
  throw Error(ErrorCode::ParseError, "unknown command '" + name + "'");
}

Kernel KernelConfig::build(const CircleGrid& grid) const {
  switch (source) {
    case Source::Gaussian:
      return design_gaussian_kernel(grid, k_c, p, family);
    case Source::Profile:
      return design_kernel_from_profile(grid, profile);
    case Source::ProfileFile: {
      auto in = open_input(path);
      return design_kernel_from_profile(grid, read_profile_csv(in));
    }
    case Source::KernelFile: {
      auto in = open_input(path);
      return read_kernel_csv(in, grid);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "kernel source");
}

RealField InitialCondition::build(const CircleGrid& grid, std::uint64_t seed) const {
  switch (kind) {
    case Kind::Zero:
      return RealField::zeros(grid);
    case Kind::Cosine: {
      const RealField wave = RealField::sample(grid, [&](double theta) {
        return amplitude * std::cos(2.0 * std::numbers::pi * (mode * theta + phase));
      });
      if (noise == 0.0) return wave;
      return {grid, wave.values() + uniform_noise(grid, seed, noise).values()};
    }
    case Kind::Random:
      return uniform_noise(grid, seed, amplitude);
    case Kind::SmoothRandom:
      return smooth_random_field(grid, seed, mode, amplitude);
    case Kind::File: {
      auto in = open_input(path);
      RealField f = read_field_csv(in);
      require_same_grid(f.grid(), grid);
      return f;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "initial condition");
}

RealField InputConfig::build(const CircleGrid& grid) const {
  switch (kind) {
    case Kind::Zero:
      return RealField::zeros(grid);
    case Kind::Bump: {
      Gap gap;
      gap.center = center;
      gap.width = width;
      gap.amplitude = amplitude;
      ScenarioSpec spec;
      spec.gaps = {gap};
      spec.baseline = baseline;
      spec.bump_shape = shape;
      spec.max_amplitude = std::max(spec.max_amplitude, amplitude);
      spec.validate();
      return render_input(spec, grid, 0.0);
    }
    case Kind::Cosine:
      return RealField::sample(grid, [&](double theta) {
        return amplitude * std::cos(2.0 * std::numbers::pi * (mode * theta + phase));
      });
    case Kind::File: {
      auto in = open_input(path);
      RealField f = read_field_csv(in);
      require_same_grid(f.grid(), grid);
      return f;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "input");
}

std::vector<double> BifurcationConfig::alpha_grid() const {
  if (!alphas.empty()) return alphas;
  std::vector<double> grid;
  const auto n = static_cast<long>(std::floor((alpha_max - alpha_min) / alpha_step + 1e-9));
  for (long i = 0; i <= n; ++i) grid.push_back(alpha_min + static_cast<double>(i) * alpha_step);
  return grid;
}

ModelParams RunConfig::model() const {
  ModelParams params{.tau = tau, .alpha = alpha, .xi = xi, .kernel = kernel.build(grid()), .custom_saturation = nullptr};
  params.validate();
  return params;
}

RunConfig parse_run_config(const Json& j) {
  Reader r(j, "config",
           {"grid", "model", "sim", "seed", "output_dir", "threads", "initial_condition", "input",
            "bifurcation", "scenario", "decision", "switching", "provenance", "manifest"});
  RunConfig c;
  if (r.has("grid")) {
    Reader g(r.at("grid"), "grid", {"n_points"});
    g.read("n_points", c.n_points);
  }
  if (r.has("model")) {
    Reader m(r.at("model"), "model", {"tau", "alpha", "xi", "kernel"});
    m.read("tau", c.tau);
    m.read("alpha", c.alpha);
    m.read("xi", c.xi);
    if (m.has("kernel")) c.kernel = parse_kernel(m.at("kernel"));
  }
  if (r.has("sim")) c.sim = parse_sim(r.at("sim"), "sim", c.sim);
  r.read("output_dir", c.output_dir);
  r.read("threads", c.threads);
  if (r.has("initial_condition")) c.initial_condition = parse_initial_condition(r.at("initial_condition"));
  if (r.has("input")) c.input = parse_input(r.at("input"));
  if (r.has("bifurcation")) c.bifurcation = parse_bifurcation(r.at("bifurcation"));
  if (r.has("scenario")) c.scenario = scenario_from_json(r.at("scenario"));
  if (r.has("decision")) {
    Reader d(r.at("decision"), "decision", {"strong_threshold", "rel_threshold"});
    d.read("strong_threshold", c.strong_threshold);
    d.read("rel_threshold", c.rel_threshold);
  }
  if (r.has("switching")) {
    Reader s(r.at("switching"), "switching", {"gap_index", "final_widths"});
    SwitchingConfig sw;
    s.read("gap_index", sw.gap_index);
    s.read("final_widths", sw.final_widths);
    c.switching = sw;
  }
  if (r.has("provenance")) c.provenance = r.at("provenance");

  // The run seed drives every random draw; a scenario seed given without a
  // run seed is adopted as the run seed.
  if (r.has("seed")) {
    r.read("seed", c.seed);
  } else if (c.scenario && c.scenario->perturbation_seed) {
    c.seed = *c.scenario->perturbation_seed;
  }
  if (c.scenario && c.scenario->perturbation_seed) c.scenario->perturbation_seed = c.seed;

  const CircleGrid grid = c.grid();
  if (c.threads < 1) throw Error(ErrorCode::InvalidArgument, "threads must be >= 1");
  if (c.output_dir.empty()) throw Error(ErrorCode::InvalidArgument, "output_dir is empty");
  if (!(c.tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be positive");
  c.sim.validate(c.tau);
  c.bifurcation.sim.validate(c.tau);
  if (c.kernel.source == KernelConfig::Source::Gaussian) {
    static_cast<void>(c.kernel.build(grid));
  }
  if (c.switching) {
    if (!c.scenario) throw Error(ErrorCode::InvalidArgument, "switching needs a scenario");
    const int n_gaps = static_cast<int>(c.scenario->gaps.size());
    if (c.switching->gap_index < 0 || c.switching->gap_index >= n_gaps ||
        !c.scenario->gaps[c.switching->gap_index].ramp) {
      throw Error(ErrorCode::InvalidArgument, "switching.gap_index must name a ramped gap");
    }
  }
  return c;
}

Json to_json(const RunConfig& c) {
  Json j;
  if (!c.provenance.is_null()) j["provenance"] = c.provenance;
  j["grid"] = {{"n_points", c.n_points}};
  j["model"] = {{"tau", c.tau}, {"alpha", c.alpha}, {"xi", c.xi}, {"kernel", kernel_json(c.kernel)}};
  j["sim"] = sim_json(c.sim);
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads;
  j["initial_condition"] = initial_condition_json(c.initial_condition);
  j["input"] = input_json(c.input);
  j["bifurcation"] = bifurcation_json(c.bifurcation);
  if (c.scenario) j["scenario"] = to_json(*c.scenario);
  j["decision"] = {{"strong_threshold", c.strong_threshold}, {"rel_threshold", c.rel_threshold}};
  if (c.switching) {
    j["switching"] = {{"gap_index", c.switching->gap_index},
                      {"final_widths", c.switching->final_widths}};
  }
  return j;
}

void apply_override(Json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::ParseError, "override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  Json* node = &j;
  std::stringstream path(key);
  std::string segment;
  std::vector<std::string> segments;
  while (std::getline(path, segment, '.')) {
    if (segment.empty()) throw Error(ErrorCode::ParseError, "override key '" + key + "'");
    segments.push_back(segment);
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const std::string& s = segments[i];
    const bool last = i + 1 == segments.size();
    if (node->is_array()) {
      char* end = nullptr;
      const unsigned long idx = std::strtoul(s.c_str(), &end, 10);
      if (end == s.c_str() || *end != '\0' || idx >= node->size()) {
        throw Error(ErrorCode::ParseError, "override key '" + key + "': bad index '" + s + "'");
      }
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = Json::object();
      if (!node->is_object()) {
        throw Error(ErrorCode::ParseError, "override key '" + key + "' descends into a value");
      }
      node = &(*node)[s];
    }
    if (last) *node = value;
  }
}

void execute(Command command, const RunConfig& config) {
  const fs::path out(config.output_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::InvalidArgument, "cannot create '" + out.string() + "'");
  write_json(out / "manifest.json", manifest_json(command, config));
  switch (command) {
    case Command::DesignKernel: return cmd_design_kernel(config, out);
    case Command::Spectrum: return cmd_spectrum(config, out);
    case Command::Simulate: return cmd_simulate(config, out);
    case Command::Respond: return cmd_respond(config, out);
    case Command::Bifurcation: return cmd_bifurcation(config, out);
    case Command::Scenario: return cmd_scenario(config, out);
  }
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Config: return 1;
    case ErrorCategory::Model: return 2;
    case ErrorCategory::Numerical: return 3;
  }
  return 2;
}

Json error_json(const Error& error) {
  const ErrorCategory cat = category_of(error.code());
  const char* names[] = {"config", "model", "numerical"};
  return {{"error",
           {{"code", std::string(to_string(error.code()))},
            {"category", names[static_cast<int>(cat)]},
            {"exit_code", exit_code(cat)},
            {"message", error.what()}}}};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonlinear opinion dynamics on the circle"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::vector<std::string> overrides;

  std::vector<std::pair<CLI::App*, Command>> subcommands;
  for (auto [name, command, help] :
       {std::tuple{"design-kernel", Command::DesignKernel, "Design and validate a kernel"},
        std::tuple{"spectrum", Command::Spectrum, "Eigenvalues of the neutral state"},
        std::tuple{"simulate", Command::Simulate, "Integrate from an initial condition"},
        std::tuple{"respond", Command::Respond, "Response to a constant input from z = 0"},
        std::tuple{"bifurcation", Command::Bifurcation, "Equilibrium branches over alpha"},
        std::tuple{"scenario", Command::Scenario, "Gap-selection scenario"}}) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--set", overrides, "Override a config entry: key.path=value");
    subcommands.emplace_back(sub, command);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << error_json(Error(ErrorCode::ParseError, e.what())).dump() << "\n";
    return exit_code(ErrorCategory::Config);
  }

  try {
    Command command = Command::Spectrum;
    for (const auto& [sub, cmd] : subcommands) {
      if (sub->parsed()) command = cmd;
    }
    Json j = Json::object();
    if (!config_path.empty()) {
      j = Json::parse(read_text_file(config_path), nullptr, false);
      if (j.is_discarded()) throw Error(ErrorCode::ParseError, "'" + config_path + "' is not JSON");
    }
    for (const auto& o : overrides) apply_override(j, o);
    if (seed) j["seed"] = *seed;
    if (threads) j["threads"] = *threads;
    if (!out_dir.empty()) j["output_dir"] = out_dir;

    const RunConfig config = parse_run_config(j);
    execute(command, config);
    out << Json{{"status", "ok"}, {"command", to_string(command)}, {"output_dir", config.output_dir}}
               .dump()
        << "\n";
    return 0;
  } catch (const Error& e) {
    err << error_json(e).dump() << "\n";
    return exit_code(category_of(e.code()));
  } catch (const std::exception& e) {
    err << error_json(Error(ErrorCode::InvalidArgument, e.what())).dump() << "\n";
    return exit_code(ErrorCategory::Config);
  }
}

}  // namespace nod::cli
