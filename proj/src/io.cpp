#include "nod/io.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "nod/format.hpp"

namespace nod {

namespace {

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }
Json optional_json(const std::optional<int>& v) { return v ? Json(*v) : Json(nullptr); }

template <typename T>
T get_or(const Json& j, const char* key, T fallback, const std::string& context) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, context + "." + key + ": " + e.what());
  }
}

}  // namespace

void require_keys(const Json& j, std::initializer_list<const char*> allowed,
                  const std::string& context) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, context + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw Error(ErrorCode::ParseError, "unknown key '" + key + "' in " + context);
  }
}

void write_field_csv(std::ostream& os, const RealField& f) {
  os << "theta,value\n";
  for (int j = 0; j < f.size(); ++j) {
    os << format_double(f.grid().theta(j)) << ',' << format_double(f[j]) << '\n';
  }
}

RealField read_field_csv(std::istream& is) {
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected theta,value");
    }
    const std::string theta_text = line.substr(0, comma);
    const std::string value_text = line.substr(comma + 1);
    char* end = nullptr;
    std::strtod(theta_text.c_str(), &end);
    if (end == theta_text.c_str()) {
      if (values.empty()) continue;
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad theta");
    }
    const double v = std::strtod(value_text.c_str(), &end);
    if (end == value_text.c_str()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad value");
    }
    values.push_back(v);
  }
  const CircleGrid grid(static_cast<int>(values.size()));
  return {grid, Eigen::Map<const Eigen::VectorXd>(values.data(), grid.size())};
}

void write_spectral_csv(std::ostream& os, const SpectralField& f) {
  os << "k,re,im\n";
  for (int k = f.grid().k_min(); k <= f.grid().k_max(); ++k) {
    const auto c = f.coeff(k);
    os << k << ',' << format_double(c.real()) << ',' << format_double(c.imag()) << '\n';
  }
}

void write_trajectory_csv(std::ostream& os, const SimResult& sim) {
  os << "t,theta,z\n";
  for (std::size_t i = 0; i < sim.snapshots.size(); ++i) {
    const std::string t = format_double(sim.times[i]);
    const RealField& z = sim.snapshots[i];
    for (int j = 0; j < z.size(); ++j) {
      os << t << ',' << format_double(z.grid().theta(j)) << ',' << format_double(z[j]) << '\n';
    }
  }
}

Json summary_json(const SimResult& sim, double rel_threshold) {
  Json j;
  j["reached_steady"] = sim.reached_steady;
  j["t_end"] = sim.t_end;
  j["max_z"] = sim.final_state.max();
  j["n_peaks"] = count_peaks(sim.final_state, rel_threshold);
  return j;
}

Json to_json(const SpectrumReport& report) {
  Json lambda = Json::array();
  for (const auto& [k, value] : report.eigenvalues) lambda.push_back({{"k", k}, {"value", value}});
  Json j;
  j["lambda"] = std::move(lambda);
  j["k_max"] = report.k_max;
  j["alpha_star"] = report.alpha_star;
  j["leading_eigenvalue"] = report.leading_eigenvalue;
  return j;
}

Json to_json(const ValidationReport& report) {
  Json checks = Json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  Json j;
  j["all_passed"] = report.all_passed();
  j["checks"] = std::move(checks);
  return j;
}

Json to_json(const BifurcationDiagram& diagram) {
  Json branches = Json::array();
  for (const auto& b : diagram.branches) {
    Json e;
    e["alpha"] = b.alpha;
    e["norm"] = b.norm;
    e["max_z"] = b.max_z;
    e["stability"] = to_string(b.stability);
    e["stable"] = b.stable();
    e["n_peaks"] = b.n_peaks;
    e["neutral"] = b.neutral;
    e["seed_index"] = b.seed_index;
    e["located_by_bisection"] = b.located_by_bisection;
    e["residual"] = b.residual;
    branches.push_back(std::move(e));
  }
  Json failures = Json::array();
  for (const auto& f : diagram.failures) {
    failures.push_back({{"alpha", f.alpha}, {"seed_index", f.seed_index}, {"message", f.message}});
  }
  Json j;
  j["alphas"] = diagram.alphas;
  j["fold_alpha"] = optional_json(diagram.fold_alpha);
  j["branches"] = std::move(branches);
  j["failures"] = std::move(failures);
  return j;
}

void write_diagram_csv(std::ostream& os, const BifurcationDiagram& diagram) {
  os << "alpha,norm,stable,n_peaks\n";
  for (const auto& b : diagram.branches) {
    os << format_double(b.alpha) << ',' << format_double(b.norm) << ',' << (b.stable() ? 1 : 0)
       << ',' << b.n_peaks << '\n';
  }
}

Json to_json(const ScenarioSpec& spec) {
  Json gaps = Json::array();
  for (const auto& g : spec.gaps) {
    Json e;
    e["center"] = g.center;
    e["width"] = g.width;
    e["amplitude"] = g.amplitude;
    if (g.ramp) {
      e["ramp"] = {{"t_start", g.ramp->t_start},
                   {"t_end", g.ramp->t_end},
                   {"final_width", g.ramp->final_width}};
    }
    gaps.push_back(std::move(e));
  }
  Json j;
  j["gaps"] = std::move(gaps);
  j["baseline"] = spec.baseline;
  j["bump_shape"] = to_string(spec.bump_shape);
  if (spec.perturbation_seed) j["perturbation_seed"] = *spec.perturbation_seed;
  j["perturbation_scale"] = spec.perturbation_scale;
  j["max_amplitude"] = spec.max_amplitude;
  return j;
}

ScenarioSpec scenario_from_json(const Json& j) {
  const std::string ctx = "scenario";
  require_keys(j, {"gaps", "baseline", "bump_shape", "perturbation_seed", "perturbation_scale",
                   "max_amplitude"},
               ctx);
  ScenarioSpec spec;
  if (!j.contains("gaps") || !j.at("gaps").is_array()) {
    throw Error(ErrorCode::ParseError, "scenario.gaps must be an array");
  }
  for (std::size_t i = 0; i < j.at("gaps").size(); ++i) {
    const Json& g = j.at("gaps")[i];
    const std::string gctx = ctx + ".gaps[" + std::to_string(i) + "]";
    require_keys(g, {"center", "width", "amplitude", "ramp"}, gctx);
    Gap gap;
    gap.center = get_or(g, "center", gap.center, gctx);
    gap.width = get_or(g, "width", gap.width, gctx);
    gap.amplitude = get_or(g, "amplitude", gap.amplitude, gctx);
    if (g.contains("ramp") && !g.at("ramp").is_null()) {
      const Json& r = g.at("ramp");
      const std::string rctx = gctx + ".ramp";
      require_keys(r, {"t_start", "t_end", "final_width"}, rctx);
      for (const char* key : {"t_start", "t_end", "final_width"}) {
        if (!r.contains(key)) throw Error(ErrorCode::ParseError, rctx + "." + key + " is required");
      }
      gap.ramp = WidthRamp{get_or(r, "t_start", 0.0, rctx), get_or(r, "t_end", 0.0, rctx),
                           get_or(r, "final_width", 0.0, rctx)};
    }
    spec.gaps.push_back(gap);
  }
  spec.baseline = get_or(j, "baseline", spec.baseline, ctx);
  spec.bump_shape = bump_shape_from_string(get_or(j, "bump_shape", to_string(spec.bump_shape), ctx));
  if (j.contains("perturbation_seed") && !j.at("perturbation_seed").is_null()) {
    spec.perturbation_seed = get_or<std::uint64_t>(j, "perturbation_seed", 0, ctx);
  }
  spec.perturbation_scale = get_or(j, "perturbation_scale", spec.perturbation_scale, ctx);
  spec.max_amplitude = get_or(j, "max_amplitude", spec.max_amplitude, ctx);
  spec.validate();
  return spec;
}

Json to_json(const Decision& decision) {
  Json j;
  j["chosen_gap"] = optional_json(decision.chosen_gap);
  j["decision_time"] = optional_json(decision.decision_time);
  j["switched"] = decision.switched;
  j["opinion_max"] = decision.opinion_max;
  j["ambiguous"] = decision.ambiguous;
  j["argmax_theta"] = decision.argmax_theta;
  return j;
}

void write_switching_csv(std::ostream& os, const std::vector<SwitchSample>& samples) {
  os << "final_width,switched,chosen_gap\n";
  for (const auto& s : samples) {
    os << format_double(s.final_width) << ',' << (s.switched ? 1 : 0) << ','
       << (s.chosen_gap ? *s.chosen_gap : -1) << '\n';
  }
}

}  // namespace nod
