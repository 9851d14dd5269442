#pragma once

// Uniform discretization of the unit-circumference circle S^1 = R/Z and the
// spatial Fourier transform pair used throughout the library.
//
// Transform convention:
//   forward  F(k) = (1/N) sum_j f(theta_j) exp(-i 2 pi k j / N)
//   inverse  f_j  =       sum_k F(k)       exp(+i 2 pi k j / N)
// with signed frequencies k in [-N/2, N/2 - 1]. The forward 1/N factor makes
// F(k) the rectangle-rule approximation of the continuous coefficient
// integral, so kernel coefficients can be compared with eigenvalues directly.

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

#include "nod/error.hpp"

namespace nod {

class CircleGrid {
 public:
  static constexpr int kDefaultPoints = 256;

  explicit CircleGrid(int n_points = kDefaultPoints) : n_(n_points) {
    if (n_points < 8 || n_points % 2 != 0) {
      throw Error(ErrorCode::InvalidArgument,
                  "grid size must be even and >= 8, got " + std::to_string(n_points));
    }
  }

  [[nodiscard]] int size() const noexcept { return n_; }
  [[nodiscard]] double spacing() const noexcept { return 1.0 / n_; }
  [[nodiscard]] double theta(int j) const noexcept { return static_cast<double>(j) / n_; }
  [[nodiscard]] int nyquist() const noexcept { return n_ / 2; }

  /// Lowest and highest representable signed frequency.
  [[nodiscard]] int k_min() const noexcept { return -n_ / 2; }
  [[nodiscard]] int k_max() const noexcept { return n_ / 2 - 1; }

  /// Storage slot of signed frequency k (FFT ordering, wraps modulo N).
  [[nodiscard]] int slot(int k) const noexcept { return ((k % n_) + n_) % n_; }
  /// Signed frequency stored at slot s.
  [[nodiscard]] int frequency(int s) const noexcept { return s < n_ / 2 ? s : s - n_; }

  friend bool operator==(const CircleGrid&, const CircleGrid&) = default;

 private:
  int n_;
};

inline void require_same_grid(const CircleGrid& a, const CircleGrid& b) {
  if (a != b) {
    throw Error(ErrorCode::GridMismatch, "grids of size " + std::to_string(a.size()) + " and " +
                                             std::to_string(b.size()) + " differ");
  }
}

template <typename Scalar>
class BasicRealField {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicRealField(CircleGrid grid, Vector values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw Error(ErrorCode::InvalidArgument, "field length does not match grid");
    }
    if (!values_.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "field values must be finite");
    }
  }

  static BasicRealField zeros(CircleGrid grid) { return {grid, Vector::Zero(grid.size())}; }

  static BasicRealField constant(CircleGrid grid, Scalar c) {
    return {grid, Vector::Constant(grid.size(), c)};
  }

  /// Samples f(theta_j) for theta_j = j/N.
  static BasicRealField sample(CircleGrid grid, const std::function<Scalar(Scalar)>& f) {
    Vector v(grid.size());
    for (int j = 0; j < grid.size(); ++j) v[j] = f(static_cast<Scalar>(grid.theta(j)));
    return {grid, std::move(v)};
  }

  [[nodiscard]] const CircleGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] const Vector& values() const noexcept { return values_; }
  [[nodiscard]] int size() const noexcept { return grid_.size(); }
  Scalar operator[](int j) const { return values_[j]; }

  [[nodiscard]] Scalar max_abs() const { return values_.cwiseAbs().maxCoeff(); }
  [[nodiscard]] Scalar max() const { return values_.maxCoeff(); }

 private:
  CircleGrid grid_;
  Vector values_;
};

template <typename Scalar>
class BasicSpectralField {
 public:
  using Complex = std::complex<Scalar>;
  using Vector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;

  /// `coeffs` is in FFT slot order: slot s holds frequency grid.frequency(s).
  BasicSpectralField(CircleGrid grid, Vector coeffs) : grid_(grid), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != grid_.size()) {
      throw Error(ErrorCode::InvalidArgument, "spectrum length does not match grid");
    }
  }

  static BasicSpectralField zeros(CircleGrid grid) { return {grid, Vector::Zero(grid.size())}; }

  [[nodiscard]] const CircleGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] const Vector& slots() const noexcept { return coeffs_; }

  /// Coefficient at signed frequency k; any integer is accepted modulo N.
  [[nodiscard]] Complex coeff(int k) const { return coeffs_[grid_.slot(k)]; }

  /// Largest |F(k) - conj(F(-k))| over all k.
  [[nodiscard]] Scalar symmetry_defect() const {
    Scalar worst = 0;
    for (int k = grid_.k_min(); k <= grid_.k_max(); ++k) {
      worst = std::max(worst, std::abs(coeff(k) - std::conj(coeff(-k))));
    }
    return worst;
  }

 private:
  CircleGrid grid_;
  Vector coeffs_;
};

using RealField = BasicRealField<double>;
using SpectralField = BasicSpectralField<double>;

/// Imaginary residue tolerated when synthesizing a real field.
inline constexpr double kImagResidueTol = 1e-10;

template <typename Scalar>
constexpr Scalar imag_residue_tol() {
  return std::max(static_cast<Scalar>(kImagResidueTol),
                  Scalar(100) * std::numeric_limits<Scalar>::epsilon());
}

template <typename Scalar>
BasicSpectralField<Scalar> to_spectral(const BasicRealField<Scalar>& f) {
  Eigen::FFT<Scalar> fft;
  typename BasicSpectralField<Scalar>::Vector out;
  fft.fwd(out, f.values());
  out /= static_cast<Scalar>(f.size());
  return {f.grid(), std::move(out)};
}

/// Complex synthesis sum_k F(k) e^{i 2 pi k j/N}, without the realness check.
template <typename Scalar>
typename BasicSpectralField<Scalar>::Vector synthesize(const BasicSpectralField<Scalar>& spec) {
  Eigen::FFT<Scalar> fft;
  fft.SetFlag(Eigen::FFT<Scalar>::Unscaled);
  typename BasicSpectralField<Scalar>::Vector out;
  fft.inv(out, spec.slots());
  return out;
}

template <typename Scalar>
BasicRealField<Scalar> to_real(const BasicSpectralField<Scalar>& spec) {
  const auto full = synthesize(spec);
  const Scalar residue = full.imag().cwiseAbs().maxCoeff();
  if (!(residue < imag_residue_tol<Scalar>())) {
    throw Error(ErrorCode::NonSymmetricSpectrum,
                "imaginary residue " + std::to_string(static_cast<double>(residue)) +
                    " exceeds tolerance");
  }
  return {spec.grid(), full.real()};
}

/// output(j) = f((j - m) mod N); an exact permutation.
template <typename Scalar>
BasicRealField<Scalar> shift(const BasicRealField<Scalar>& f, std::int64_t m) {
  const auto n = static_cast<std::int64_t>(f.size());
  typename BasicRealField<Scalar>::Vector out(f.size());
  for (std::int64_t j = 0; j < n; ++j) {
    out[j] = f.values()[((j - m) % n + n) % n];
  }
  return {f.grid(), std::move(out)};
}

/// Rectangle-rule approximation of the L2(S^1) inner product.
template <typename Scalar>
Scalar inner_product(const BasicRealField<Scalar>& f, const BasicRealField<Scalar>& g) {
  require_same_grid(f.grid(), g.grid());
  return f.values().dot(g.values()) / static_cast<Scalar>(f.size());
}

/// Shortest distance between two angles on the unit-circumference circle.
inline double circle_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), 1.0);
  return std::min(d, 1.0 - d);
}

}  // namespace nod
