#pragma once
// Pressureless fluid with self-consistent repulsive forcing on the periodic
// box. Spectral space derivatives with 2/3-rule products, classical RK4 in
// time. Loss of smoothness is expected physics here, so the module carries a
// regularity monitor instead of trusting the integrator to stay sane.
#include <array>
#include <cmath>

#include "mflab/grid.hpp"

namespace mflab {

struct FluidState {
  ScalarField rho;
  VectorField u;
  double time = 0.0;
  // set (never cleared) when a step produces non-finite data
  bool blown_up = false;

  FluidState() = default;
  FluidState(ScalarField rho_, VectorField u_);
};

struct FluidDerivative {
  ScalarField drho;
  VectorField du;
};

// drho = -div(rho u), du = -(u.grad)u - grad(V * rho)
FluidDerivative euler_poisson_rhs(const FluidState& s);

// One RK4 step. Enforces dt <= cfl * h / max(|u|_inf, 1) and flags the state
// instead of throwing when the result stops being finite. No-op on a state
// already flagged.
void euler_poisson_step(FluidState& s, double dt, double cfl = 0.5);

struct FluidEnergy {
  double kinetic = 0.0;    // (1/2) integral rho |u|^2
  double potential = 0.0;  // (1/2) <rho, V * rho>
  double total = 0.0;
};
FluidEnergy fluid_energy(const FluidState& s);

// integral of rho u, conserved by the dynamics
std::array<double, 3> fluid_momentum(const FluidState& s);

struct RegularityReport {
  double grad_u_inf = 0.0;            // max |d_j u_i|
  double laplacian_div_u_inf = 0.0;   // max |Laplacian(div u)|
  double rho_inf = 0.0;
};
RegularityReport regularity_report(const FluidState& s);

// Watches the velocity gradient and latches the first time it leaves the
// smooth regime; a flag well before non-finite data is the useful signal.
struct RegularityMonitor {
  explicit RegularityMonitor(double threshold_);
  double threshold;
  bool flagged = false;
  double first_flag_time = std::numeric_limits<double>::quiet_NaN();
  RegularityReport last;

  void observe(const FluidState& s);
};

// psi = sqrt(max(rho, floor)) exp(i phase / hbar), L2-normalized; the wave
// picture of monokinetic fluid data.
WaveField wkb_initializer(const ScalarField& rho, const ScalarField& phase, double hbar,
                          double floor = 1e-30);

}  // namespace mflab
