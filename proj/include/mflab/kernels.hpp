#pragma once
// Coulomb interaction kernel, heat-kernel smoothing, the single-scale
// smoothed potential, and compactly supported mollification of its gradient.
#include <array>

#include "mflab/quadrature.hpp"

namespace mflab {

// 1/(4 pi |z|); throws std::domain_error at z = 0.
double coulomb(double dist);
double coulomb(const std::array<double, 3>& z);

// G_r(x) = (2 pi r)^{-3/2} exp(-|x|^2 / (2r)), unit mass on R^3.
double heat_kernel(double dist, double r);

struct KernelEval {
  double value = 0.0;
  int quadrature_nodes = 0;
  double error_estimate = 0.0;
};

// Smoothed Coulomb potential at smoothing scale eta:
//   V_eta(z) = (G_eta * V)(z) = integral over r in [eta/2, inf) of G_{2r}(z) dr,
// evaluated adaptively in log r. V_eta(0) = v0/sqrt(eta).
KernelEval fdll_value(double dist, double eta);

// v0/sqrt(eta) with v0 fixed once by an independent radial quadrature and
// cross-checked against (2 pi)^{-3/2} before first use.
double v_eta_at_zero(double eta);

// Radial C-infinity bump supported in |y| <= epsilon with unit mass.
struct Mollifier {
  explicit Mollifier(double epsilon);

  double epsilon;

  // zeta_epsilon(|y|), zero for dist >= epsilon
  double density(double dist) const;
  // mass inside radius s, reaches 1 at s >= epsilon
  double enclosed_mass(double s) const;

  // 4 * integral of zeta(y)/|y|^2; independent of epsilon
  static double constant_c();
};

// grad(V * zeta_epsilon)(z). Radial symmetry gives the shell form
// -z * M(|z|) / (4 pi |z|^3); exact Coulomb gradient once |z| >= epsilon.
std::array<double, 3> mollified_gradient(const std::array<double, 3>& z, double epsilon);

}  // namespace mflab
