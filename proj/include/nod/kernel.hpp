#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nod/circle_grid.hpp"

namespace nod {

/// Frequency layout of the Gaussian kernel design.
///   Harmonic: W_hat(k) = exp(-(|k|/k_c - 1)^2 / p^2) when k_c divides k, else 0.
///   Shifted:  W_hat(k) = exp(-(|k| - k_c)^2 / p^2) for every k.
/// The two coincide for k_c = 1. Only the harmonic layout restricts the
/// unstable subspace to patterns with exactly k_c-fold symmetry.
enum class KernelFamily { Harmonic, Shifted };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// Spatially invariant interaction kernel W on the circle, held both as
/// Fourier coefficients W_hat(k) and as real-space samples W(theta_j).
class Kernel {
 public:
  /// Wraps arbitrary coefficients without enforcing any design invariant.
  /// The real-space samples keep only the real part of the synthesis; use
  /// validate_kernel() to check the result.
  explicit Kernel(SpectralField spectral);

  [[nodiscard]] const CircleGrid& grid() const noexcept { return spectral_.grid(); }
  [[nodiscard]] const SpectralField& spectral() const noexcept { return spectral_; }
  [[nodiscard]] const RealField& real_space() const noexcept { return real_space_; }

  /// Real part of W_hat(k).
  [[nodiscard]] double coefficient(int k) const { return spectral_.coeff(k).real(); }

  /// Positive frequency of the largest coefficient (smallest one on ties).
  [[nodiscard]] int k_max() const noexcept { return k_max_; }
  [[nodiscard]] double peak_coefficient() const { return coefficient(k_max_); }

  /// Gaussian design parameters, present only for design_gaussian_kernel().
  [[nodiscard]] std::optional<int> center() const noexcept { return center_; }
  [[nodiscard]] std::optional<double> width() const noexcept { return width_; }
  [[nodiscard]] std::optional<KernelFamily> family() const noexcept { return family_; }

 private:
  friend Kernel design_gaussian_kernel(const CircleGrid&, int, double, KernelFamily);

  SpectralField spectral_;
  RealField real_space_;
  int k_max_ = 1;
  std::optional<int> center_;
  std::optional<double> width_;
  std::optional<KernelFamily> family_;
};

/// Gaussian bump of width p centred on k_c for 0 < |k| < N/2, zero at k = 0
/// and at the Nyquist frequency.
Kernel design_gaussian_kernel(const CircleGrid& grid, int k_c, double p,
                              KernelFamily family = KernelFamily::Harmonic);

/// W_hat(+-k) = profile[k] for the listed k > 0, zero elsewhere. The profile
/// must have a single strict maximizer over k > 0.
Kernel design_kernel_from_profile(const CircleGrid& grid, const std::map<int, double>& profile);

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  [[nodiscard]] bool all_passed() const;
  [[nodiscard]] const ValidationCheck* find(const std::string& name) const;
};

/// Checks symmetry, realness, zero mean, unique k_max, zero Nyquist and the
/// spectral tail energy beyond N/4.
ValidationReport validate_kernel(const Kernel& kernel);

/// CSV (k,W_hat) for k = 0 .. N/2-1 in shortest round-trip form.
void write_kernel_csv(std::ostream& os, const Kernel& kernel);

/// Reads a (k,W_hat) table with k >= 0 and mirrors it to negative k.
/// Missing frequencies are zero. No design invariant is enforced.
Kernel read_kernel_csv(std::istream& is, const CircleGrid& grid);

/// Reads a (k,W_hat) table as a design profile. A k = 0 row must be zero.
std::map<int, double> read_profile_csv(std::istream& is);

}  // namespace nod
