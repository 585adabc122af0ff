#pragma once
// Named initial-data profiles: nonnegative normalized densities and smooth
// periodic phases, selected by name + numeric parameters (the shape the
// config file carries). Phase profiles also expose their analytic gradient
// so solver initialization does not depend on spectral differentiation.
#include <map>
#include <string>

#include "mflab/grid.hpp"

namespace mflab {

struct ProfileSpec {
  std::string name;
  std::map<std::string, double> params;
};

// Densities: "uniform"; "gaussian" (sigma, floor_weight, center_x/y/z);
// "gaussian_pair" (sigma, separation, floor_weight). Gaussians are
// periodized by image summation and mixed with floor_weight of the uniform
// density so the result is strictly positive; output integrates to 1.
// Unknown names or parameter keys are input errors.
ScalarField build_density(const GridSpec& g, const ProfileSpec& p);

// Phases: "zero"; "quadratic_bump" (amplitude, radius, center_x/y/z), the
// expanding-flow profile S = (a/2)|x-c|^2 T(|x-c|/R) with a smooth compactly
// supported taper T, T(0)=1, so S is exactly quadratic at the center and
// exactly zero outside radius R (< L/2, keeping S periodic and C-infinity).
ScalarField build_phase(const GridSpec& g, const ProfileSpec& p);

// Analytic gradient of build_phase for the same spec.
VectorField phase_velocity(const GridSpec& g, const ProfileSpec& p);

}  // namespace mflab
