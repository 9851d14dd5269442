#include "nod/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "nod/format.hpp"

namespace nod {

namespace {

constexpr double kCoeffTol = 1e-12;
constexpr double kTailEnergyTol = 1e-10;

// Index of the largest real coefficient over 0 < k < N/2, plus whether
// another frequency ties it.
std::pair<int, bool> positive_argmax(const SpectralField& spec) {
  const CircleGrid& grid = spec.grid();
  int best = 1;
  double best_value = spec.coeff(1).real();
  for (int k = 2; k < grid.nyquist(); ++k) {
    if (spec.coeff(k).real() > best_value) {
      best = k;
      best_value = spec.coeff(k).real();
    }
  }
  const double tie_tol = kCoeffTol * std::max(1.0, std::abs(best_value));
  bool tied = false;
  for (int k = 1; k < grid.nyquist(); ++k) {
    if (k != best && std::abs(spec.coeff(k).real() - best_value) <= tie_tol) tied = true;
  }
  return {best, tied};
}

SpectralField symmetric_spectrum(const CircleGrid& grid, const std::map<int, double>& profile) {
  SpectralField::Vector slots = SpectralField::Vector::Zero(grid.size());
  for (const auto& [k, value] : profile) {
    slots[grid.slot(k)] = value;
    slots[grid.slot(-k)] = value;
  }
  return {grid, std::move(slots)};
}

std::vector<std::pair<long, double>> read_k_value_rows(std::istream& is) {
  std::vector<std::pair<long, double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string k_text;
    std::string v_text;
    if (!std::getline(ss, k_text, ',') || !std::getline(ss, v_text, ',')) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected k,W_hat");
    }
    char* end = nullptr;
    const long k = std::strtol(k_text.c_str(), &end, 10);
    if (end == k_text.c_str()) {
      if (rows.empty()) continue;  // header
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad frequency");
    }
    const double v = std::strtod(v_text.c_str(), &end);
    if (end == v_text.c_str()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad coefficient");
    }
    rows.emplace_back(k, v);
  }
  return rows;
}

}  // namespace

Kernel::Kernel(SpectralField spectral)
    : spectral_(std::move(spectral)),
      real_space_(spectral_.grid(), synthesize(spectral_).real()),
      k_max_(positive_argmax(spectral_).first) {}

std::string to_string(KernelFamily family) {
  return family == KernelFamily::Harmonic ? "harmonic" : "shifted";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "harmonic") return KernelFamily::Harmonic;
  if (name == "shifted") return KernelFamily::Shifted;
  throw Error(ErrorCode::InvalidArgument, "unknown kernel family '" + name + "'");
}

Kernel design_gaussian_kernel(const CircleGrid& grid, int k_c, double p, KernelFamily family) {
  if (k_c < 1 || k_c >= grid.nyquist()) {
    throw Error(ErrorCode::FrequencyOutOfRange,
                "center frequency " + std::to_string(k_c) + " outside [1, " +
                    std::to_string(grid.nyquist() - 1) + "]");
  }
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw Error(ErrorCode::InvalidArgument, "width p must be positive");
  }
  std::map<int, double> profile;
  for (int k = 1; k < grid.nyquist(); ++k) {
    double d = 0.0;
    if (family == KernelFamily::Shifted) {
      d = static_cast<double>(k - k_c);
    } else if (k % k_c == 0) {
      d = static_cast<double>(k) / k_c - 1.0;
    } else {
      profile[k] = 0.0;
      continue;
    }
    profile[k] = std::exp(-d * d / (p * p));
  }
  Kernel kernel(symmetric_spectrum(grid, profile));
  kernel.center_ = k_c;
  kernel.width_ = p;
  kernel.family_ = family;
  return kernel;
}

Kernel design_kernel_from_profile(const CircleGrid& grid, const std::map<int, double>& profile) {
  bool any_positive = false;
  for (const auto& [k, value] : profile) {
    if (k < 1 || k >= grid.nyquist()) {
      throw Error(ErrorCode::FrequencyOutOfRange,
                  "profile frequency " + std::to_string(k) + " outside [1, " +
                      std::to_string(grid.nyquist() - 1) + "]");
    }
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::NonFiniteProfile, "profile value at k=" + std::to_string(k));
    }
    any_positive = any_positive || value > 0.0;
  }
  if (!any_positive) {
    throw Error(ErrorCode::InvalidArgument, "profile needs at least one positive coefficient");
  }
  SpectralField spectral = symmetric_spectrum(grid, profile);
  if (const auto [k_max, tied] = positive_argmax(spectral); tied) {
    throw Error(ErrorCode::TiedMaximum,
                "maximum coefficient at k=" + std::to_string(k_max) + " is attained more than once");
  }
  return Kernel(std::move(spectral));
}

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

ValidationReport validate_kernel(const Kernel& kernel) {
  const SpectralField& spec = kernel.spectral();
  const CircleGrid& grid = kernel.grid();
  ValidationReport report;

  double asym = 0.0;
  double imag = 0.0;
  double total_energy = 0.0;
  double tail_energy = 0.0;
  for (int k = grid.k_min(); k <= grid.k_max(); ++k) {
    const auto c = spec.coeff(k);
    if (k != grid.k_min()) asym = std::max(asym, std::abs(c - spec.coeff(-k)));
    imag = std::max(imag, std::abs(c.imag()));
    total_energy += std::norm(c);
    if (std::abs(k) > grid.size() / 4) tail_energy += std::norm(c);
  }
  report.checks.push_back({"symmetry", asym <= kCoeffTol, "max |W(k)-W(-k)| = " + format_double(asym)});
  report.checks.push_back({"realness", imag <= kCoeffTol, "max |Im W(k)| = " + format_double(imag)});
  const double dc = std::abs(spec.coeff(0));
  report.checks.push_back({"zero_mean", dc <= kCoeffTol, "|W(0)| = " + format_double(dc)});
  const auto [k_max, tied] = positive_argmax(spec);
  const bool peak_ok = !tied && spec.coeff(k_max).real() > 0.0;
  report.checks.push_back(
      {"unique_k_max", peak_ok,
       (tied ? "tied maximum at k=" : "k_max = ") + std::to_string(k_max)});
  const double nyq = std::abs(spec.coeff(grid.k_min()));
  report.checks.push_back({"nyquist_zero", nyq <= kCoeffTol, "|W(-N/2)| = " + format_double(nyq)});
  const double tail_ratio = total_energy > 0.0 ? tail_energy / total_energy : 0.0;
  report.checks.push_back({"square_summable", total_energy > 0.0 && tail_ratio < kTailEnergyTol,
                           "tail energy fraction = " + format_double(tail_ratio)});
  return report;
}

void write_kernel_csv(std::ostream& os, const Kernel& kernel) {
  os << "k,W_hat\n";
  for (int k = 0; k < kernel.grid().nyquist(); ++k) {
    os << k << ',' << format_double(kernel.coefficient(k)) << '\n';
  }
}

Kernel read_kernel_csv(std::istream& is, const CircleGrid& grid) {
  SpectralField::Vector slots = SpectralField::Vector::Zero(grid.size());
  for (const auto& [k, value] : read_k_value_rows(is)) {
    if (k < 0 || k >= grid.nyquist()) {
      throw Error(ErrorCode::FrequencyOutOfRange, "kernel row with k=" + std::to_string(k));
    }
    slots[grid.slot(static_cast<int>(k))] = value;
    slots[grid.slot(-static_cast<int>(k))] = value;
  }
  return Kernel(SpectralField(grid, std::move(slots)));
}

std::map<int, double> read_profile_csv(std::istream& is) {
  std::map<int, double> profile;
  for (const auto& [k, value] : read_k_value_rows(is)) {
    if (k == 0) {
      if (value != 0.0) throw Error(ErrorCode::InvalidArgument, "profile must have W_hat(0) = 0");
      continue;
    }
    if (k < 0 || k > 1'000'000) {
      throw Error(ErrorCode::FrequencyOutOfRange, "profile row with k=" + std::to_string(k));
    }
    profile[static_cast<int>(k)] = value;
  }
  return profile;
}

}  // namespace nod
