#pragma once
// Self-consistent wave evolution on the periodic box: kinetic transport in
// spectrum, potential kicks from the instantaneous charge against the
// neutralizing background, Strang-ordered so each step is time symmetric.
#include <vector>

#include "mflab/grid.hpp"

namespace mflab {

struct HartreeState {
  WaveField psi;
  double time = 0.0;
  double coupling = 1.0;  // multiplies the self-consistent potential; 0 = free

  // Blow-up guard fixed at construction: a step that finds
  // max |psi|^2 above this (or non-finite data) throws std::runtime_error.
  double guard_density = 0.0;

  // coupling * (V * |psi|^2), valid only while potential_valid; any external
  // edit of psi must clear the flag.
  std::vector<double> potential;
  bool potential_valid = false;

  // When false, the second half kick reuses the step-entry potential instead
  // of the post-drift one: first-order variant kept for comparison runs.
  bool refresh_half_kick = true;

  explicit HartreeState(WaveField psi0, double coupling_ = 1.0);
};

// One Strang step: half kick, full spectral drift, half kick with the
// refreshed potential. Exactly one potential solve per step after the first.
// Preserves the L2 norm to round-off.
void hartree_step(HartreeState& s, double dt);

ScalarField density(const WaveField& psi);  // |psi|^2
// J = hbar * Im(conj(psi) grad psi)
VectorField current(const WaveField& psi);

struct HartreeEnergy {
  double kinetic = 0.0;                 // (hbar^2/2) sum |k|^2 |psi_hat|^2, the drift's form
  double kinetic_gradient_route = 0.0;  // (hbar^2/2) integral |grad psi|^2, independent route
  double potential = 0.0;               // (coupling/2) <rho, V * rho>
  double total = 0.0;                   // kinetic + potential
};
HartreeEnergy hartree_energy(const HartreeState& s);

// Max-norm defect of (rho_after - rho_before)/dt + div of the averaged
// current; second order in dt for smooth evolutions.
double continuity_residual(const HartreeState& before, const HartreeState& after, double dt);

// sum |k|^4 |psi_hat|^2 with Parseval weights: the discrete integral of
// |Laplacian psi|^2, a resolution budget for semiclassical states.
double spectral_fourth_moment(const WaveField& psi);

}  // namespace mflab
