#pragma once
// How far a wave state sits from a given fluid state, measured in the
// energy-weighted distances that close under a Gronwall argument: kinetic
// mismatch against the transport velocity plus interaction-weighted density
// gaps, and the corresponding growth-envelope check.
#include <vector>

#include "mflab/euler_poisson.hpp"
#include "mflab/grid.hpp"

namespace mflab {

// integral of sum_c |hbar d_c psi - i u_c psi|^2  (no 1/2)
double kinetic_modulated(const WaveField& psi, const VectorField& u);

// double integral of V(x-y) rho(x) rho(y): Parseval sum over k != 0 of
// |rho_hat|^2/|k|^2 with the cell weight
double coulomb_self_pairing(const ScalarField& rho);

// double integral of V(x-y) (a-b)(x) (a-b)(y); requires equal masses
// (mismatch above 1e-8 is an input error)
double potential_gap(const ScalarField& a, const ScalarField& b);

// kinetic_modulated against fluid.u plus potential_gap(|psi|^2, fluid.rho)
double g_functional(const WaveField& psi, const FluidState& fluid);

// g_functional minus (1/n_particles) * coulomb_self_pairing(|psi|^2): the
// size-corrected distance controlling factorized particle states
double factorized_modulated_energy(const WaveField& psi, const FluidState& fluid,
                                   int n_particles);

// potential_gap with the k-sum damped by exp(-eps |k|^2); eps < 0 selects the
// default (2h)^2. Monotone decreasing in eps, equals potential_gap at eps = 0.
double heat_weak_norm(const ScalarField& a, const ScalarField& b, double eps = -1.0);

struct GronwallCheck {
  bool violated = false;
  double first_violation_time = std::numeric_limits<double>::quiet_NaN();
  double max_ratio = 0.0;  // max over samples of value / envelope
};

// Envelope values[0] e^{lambda (t-t0)} + defect (e^{lambda (t-t0)} - 1)/lambda
// (defect * (t-t0) when lambda = 0), compared pointwise against the series.
GronwallCheck gronwall_monitor(const std::vector<double>& times,
                               const std::vector<double>& values, double lambda,
                               double defect);

}  // namespace mflab
