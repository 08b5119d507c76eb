#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <variant>
#include <vector>

namespace qnls {

using complex = std::complex<double>;

/// Periodic uniform grid on [-L/2, L/2)^dim with n samples per axis.
///
/// Grids are cheap handles: copies share the wavenumber tables and the FFT
/// plans. Samples are stored row-major (last axis fastest).
class Grid {
 public:
  Grid(int dim, std::size_t n, double length);

  int dim() const;
  std::size_t n() const;
  double length() const;
  double spacing() const;
  std::size_t size() const;
  double cell_volume() const;

  /// Centered coordinate of index i along any axis: -L/2 + i*spacing.
  double coordinate(std::size_t i) const;
  /// 2π/L times the signed FFT frequency of index i; index n/2 is the Nyquist
  /// mode and carries frequency -n/2.
  double wavenumber(std::size_t i) const;
  std::span<const double> coordinates() const;
  std::span<const double> wavenumbers() const;
  /// |k|² per flat index.
  std::span<const double> k_squared() const;
  /// |x|² per flat index.
  std::span<const double> x_squared() const;
  /// Per-axis index of a flat index.
  std::size_t axis_index(std::size_t flat, int axis) const;

  /// Unnormalized forward DFT, in place.
  void forward(std::span<complex> data) const;
  /// Inverse DFT including the 1/n^dim factor, in place.
  void inverse(std::span<complex> data) const;

  bool operator==(const Grid& other) const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

Grid make_grid(int dim, std::size_t n, double length);

/// Complex samples on a grid.
class Field {
 public:
  explicit Field(Grid grid);
  Field(Grid grid, std::vector<complex> values);

  const Grid& grid() const { return grid_; }
  std::span<const complex> values() const { return values_; }
  std::span<complex> values() { return values_; }
  std::size_t size() const { return values_.size(); }
  complex operator[](std::size_t i) const { return values_[i]; }
  complex& operator[](std::size_t i) { return values_[i]; }

  bool all_finite() const;

 private:
  Grid grid_;
  std::vector<complex> values_;
};

// ---------------------------------------------------------------- spectral ops

Field spectral_laplacian(const Field& f);
/// Laplacian of real samples (used for Δh(|u|²)).
std::vector<double> spectral_laplacian(const Grid& grid, std::span<const double> values);
/// Per-axis spectral derivatives ∂_j f.
std::vector<std::vector<complex>> spectral_gradient(const Field& f);
/// Per-axis spectral derivatives of real samples.
std::vector<std::vector<double>> spectral_gradient(const Grid& grid, std::span<const double> values);

/// ∫|∇f|² via Parseval.
double gradient_norm_sq(const Field& f);
double gradient_norm_sq(const Grid& grid, std::span<const double> values);

enum class Weight { One, AbsX2 };
/// ∫|f|² or ∫|x|²|f|² on centered coordinates.
double moment(const Field& f, Weight weight);

/// Fraction of mass within the outermost 10% of the box along any axis
/// (|x_j| >= 0.45 L).
double boundary_mass_fraction(const Field& f);

/// Fraction of Σ|û|² carried by modes with some |frequency| > n/4.
double spectral_tail_fraction(const Field& f);

// --------------------------------------------------------------- initial data

/// A e^{-|x|²/(2σ²)} e^{i b |x|²}
struct GaussianSpec {
  double amplitude = 1.0;
  double sigma = 1.0;
  double chirp = 0.0;
};

/// A sech^power(x/scale); one dimension only.
struct SechSpec {
  double amplitude = 1.0;
  double scale = 1.0;
  double power = 1.0;
};

/// c * w(|x|) from a tabulated radial profile (linear interpolation, zero past
/// the last node), optionally chirped by e^{i b |x|²}.
struct ProfileSpec {
  double scale = 1.0;
  std::vector<double> radius;
  std::vector<double> values;
  double chirp = 0.0;
};

using InitialSpec = std::variant<GaussianSpec, SechSpec, ProfileSpec>;

Field synthesize_initial(const Grid& grid, const InitialSpec& spec);

}  // namespace qnls
