#pragma once
// Periodic-box fields, discrete Fourier transforms, spectral derivatives and
// the inverse-Laplacian multiplier shared by every solver in the lab.
//
// Transform convention, fixed project-wide: forward is unnormalized
// (sum of f(x) e^{-ik.x} over grid points), inverse carries 1/cell_count.
// Wavenumbers are k = 2*pi*m/box_length with integer m in [-n/2, n/2).
#include <array>
#include <complex>
#include <cstddef>
#include <vector>

namespace mflab {

struct GridSpec {
  int dim = 3;
  int n = 32;  // points per axis
  double box_length = 1.0;
  double dealias_fraction = 2.0 / 3.0;

  // Throws std::invalid_argument when outside the supported family:
  // dim in {1,2,3}, even n >= 8 factoring over {2,3,5} with at least one 2,
  // positive box, dealias_fraction in (0,1].
  void validate() const;

  std::size_t cell_count() const;
  double spacing() const { return box_length / n; }
  double cell_volume() const;

  // axis index in [0,n) -> signed integer mode in [-n/2, n/2)
  int mode(int index) const { return index <= n / 2 - 1 ? index : index - n; }
  double wavenumber(int index) const;
  // largest |m| kept by the dealiasing mask
  int max_kept_mode() const;

  bool operator==(const GridSpec&) const = default;
};

struct ScalarField {
  GridSpec grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g);

  double& at(int i, int j = 0, int k = 0);
  double at(int i, int j = 0, int k = 0) const;

  double integral() const;  // midpoint rule; exact for band-limited fields
  double min_value() const;
  double max_value() const;
  // Scales to unit integral. Density use sites require values >= -1e-12.
  void normalize_density();
};

struct VectorField {
  GridSpec grid;
  std::array<std::vector<double>, 3> comp;  // comp[c] empty for c >= dim

  VectorField() = default;
  explicit VectorField(const GridSpec& g);
  double max_abs() const;
};

struct WaveField {
  GridSpec grid;
  double hbar = 1.0;
  std::vector<std::complex<double>> values;

  WaveField() = default;
  WaveField(const GridSpec& g, double hbar_);

  double norm_l2() const;  // sqrt(cell_volume * sum |psi|^2)
  void normalize();
};

// Flat index <-> axis indices (row major, x slowest).
std::size_t flat_index(const GridSpec& g, int i, int j, int k);
std::array<int, 3> axis_indices(const GridSpec& g, std::size_t flat);
// Coordinates of a grid point (box is [0, L)^dim, point i at i*h).
std::array<double, 3> grid_point(const GridSpec& g, std::size_t flat);

// --- transforms ----------------------------------------------------------
void fft_forward_inplace(const GridSpec& g, std::vector<std::complex<double>>& a);
void fft_inverse_inplace(const GridSpec& g, std::vector<std::complex<double>>& a);

std::vector<std::complex<double>> forward_transform(const ScalarField& f);
std::vector<std::complex<double>> forward_transform(const WaveField& f);
// Inverse of forward_transform for real fields; imaginary parts are dropped
// (they are round-off for spectra of real data).
ScalarField inverse_transform_real(const GridSpec& g, std::vector<std::complex<double>> spectrum);
WaveField inverse_transform_wave(const GridSpec& g, double hbar, std::vector<std::complex<double>> spectrum);

// Zeroes every mode with any |m_axis| > max_kept_mode().
void apply_dealias(const GridSpec& g, std::vector<std::complex<double>>& spectrum);
ScalarField dealias(const ScalarField& f);

// --- spectral operators ----------------------------------------------------
// Exact derivative of the trigonometric interpolant, dealiased per grid
// settings; the unpaired Nyquist mode is dropped from odd-order multipliers.
VectorField spectral_gradient(const ScalarField& f);
// Unmasked complex gradient (quantum observables must keep the full band).
std::array<std::vector<std::complex<double>>, 3> wave_gradient(const WaveField& psi);

// phi with hat(phi)(k) = hat(source)(k)/|k|^2, hat(phi)(0) = 0, so that
// -Laplacian(phi) = source - mean(source)  (neutralizing background).
ScalarField poisson_solve(const ScalarField& source);

// Dealiased spectral divergence, same mask and Nyquist policy as the gradient.
ScalarField spectral_divergence(const VectorField& v);

// The one shared evaluation of grad(V * rho) used by the fluid force, the
// quantum force and every particle-grid coupling.
VectorField coulomb_force_field(const ScalarField& rho);

// --- quadrature-style helpers ----------------------------------------------
// cell_volume * sum(a*b)
double inner(const ScalarField& a, const ScalarField& b);
// cell-weighted L2 norm squared of spectrum-side data (Parseval partner)
double spectral_norm_sq(const GridSpec& g, const std::vector<std::complex<double>>& spectrum);

}  // namespace mflab
