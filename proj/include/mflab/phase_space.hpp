#pragma once
// One-dimensional phase-space views of wave states: the quasi-probability
// transform built from spectrally shifted correlations, its nonnegative
// Gaussian smoothing, and moment diagnostics tying both back to wave data.
#include <vector>

#include "mflab/grid.hpp"

namespace mflab {

struct PhaseSpaceField {
  GridSpec grid;      // spatial axis, dim 1
  int xi_points = 0;  // velocity axis size, even, factors {2,3,5}
  double xi_max = 0.0;
  double hbar = 0.0;
  // row major: values[i * xi_points + l], xi ascending
  std::vector<double> values;

  double dxi() const { return 2.0 * xi_max / xi_points; }
  double xi_value(int l) const { return -xi_max + l * dxi(); }
  double at(int i, int l) const { return values[static_cast<std::size_t>(i) * xi_points + l]; }
  double mass() const;  // cell * dxi * sum
};

// W(x, xi) on the n-by-xi_points grid with xi in [-xi_max, xi_max). The xi
// column integral reproduces |psi|^2 exactly; the unpaired separation mode
// keeps only its real contribution so the output is real to round-off
// (checked, std::runtime_error). Input errors: states with more than 1e-6 of
// their momentum mass at |hbar k| >= xi_max (the window would alias them),
// and xi spacing below pi * hbar / box_length (the separation window would
// exceed one period of the correlation and wrap around the box).
PhaseSpaceField wigner_transform(const WaveField& psi, int xi_points, double xi_max);

// Gaussian phase-space smoothing of the transform at the natural widths
// (variance hbar/2 per axis): nonnegative up to round-off, same mass.
PhaseSpaceField husimi_transform(const WaveField& psi, int xi_points, double xi_max);

// integral over xi: length-n position density
std::vector<double> position_marginal(const PhaseSpaceField& w);
// integral over x: length-xi_points velocity density
std::vector<double> momentum_marginal(const PhaseSpaceField& w);

// cell * dxi * sum of W^2; equals 1/(2 pi hbar) on pure unit-mass states
double phase_space_purity(const PhaseSpaceField& w);

struct SecondMomentCheck {
  double via_phase_space = 0.0;  // integral of xi^2 W
  double via_gradient = 0.0;     // hbar^2 integral |d_x psi|^2
  double rel_gap = 0.0;
};
// Two independent routes to the velocity second moment; large gaps mean the
// window or the grid clipped the state.
SecondMomentCheck second_moment_check(const WaveField& psi, int xi_points, double xi_max);

// integral of W(x, xi) (xi - u(x))^2: phase-space route to the modulated
// kinetic energy; u has one value per spatial point.
double monokinetic_concentration(const PhaseSpaceField& w, const std::vector<double>& u);

}  // namespace mflab
