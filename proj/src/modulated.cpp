#include "mflab/modulated.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "mflab/hartree.hpp"

namespace mflab {

namespace {

// shared k-space quadratic form: sum over k != 0 of w(|k|^2) |delta_hat|^2
double spectral_pairing(const GridSpec& g, const std::vector<std::complex<double>>& spec,
                        double eps) {
  std::vector<double> k2(g.n);
  for (int i = 0; i < g.n; ++i) k2[i] = g.wavenumber(i) * g.wavenumber(i);
  double acc = 0.0;
  const std::size_t cells = g.cell_count();
  for (std::size_t f = 0; f < cells; ++f) {
    const auto idx = axis_indices(g, f);
    double ksq = 0.0;
    for (int d = 0; d < g.dim; ++d) ksq += k2[idx[d]];
    if (ksq == 0.0) continue;
    acc += std::norm(spec[f]) * std::exp(-eps * ksq) / ksq;
  }
  return acc * g.cell_volume() / static_cast<double>(cells);
}

std::vector<std::complex<double>> difference_spectrum(const ScalarField& a,
                                                      const ScalarField& b,
                                                      const char* who) {
  if (!(a.grid == b.grid)) throw std::invalid_argument(std::string(who) + ": grids differ");
  if (std::abs(a.integral() - b.integral()) > 1e-8)
    throw std::invalid_argument(std::string(who) + ": inputs carry different mass");
  ScalarField delta(a.grid);
  for (std::size_t i = 0; i < delta.values.size(); ++i)
    delta.values[i] = a.values[i] - b.values[i];
  return forward_transform(delta);
}

}  // namespace

double kinetic_modulated(const WaveField& psi, const VectorField& u) {
  if (!(psi.grid == u.grid))
    throw std::invalid_argument("kinetic_modulated: psi and u grids differ");
  const auto grad = wave_gradient(psi);
  double acc = 0.0;
  for (int c = 0; c < psi.grid.dim; ++c)
    for (std::size_t i = 0; i < psi.values.size(); ++i)
      acc += std::norm(psi.hbar * grad[c][i] -
                       std::complex<double>(0.0, u.comp[c][i]) * psi.values[i]);
  return acc * psi.grid.cell_volume();
}

double coulomb_self_pairing(const ScalarField& rho) {
  return spectral_pairing(rho.grid, forward_transform(rho), 0.0);
}

double potential_gap(const ScalarField& a, const ScalarField& b) {
  return spectral_pairing(a.grid, difference_spectrum(a, b, "potential_gap"), 0.0);
}

double g_functional(const WaveField& psi, const FluidState& fluid) {
  return kinetic_modulated(psi, fluid.u) + potential_gap(density(psi), fluid.rho);
}

double factorized_modulated_energy(const WaveField& psi, const FluidState& fluid,
                                   int n_particles) {
  if (n_particles < 1)
    throw std::invalid_argument("factorized_modulated_energy: need at least one particle");
  return g_functional(psi, fluid) -
         coulomb_self_pairing(density(psi)) / static_cast<double>(n_particles);
}

double heat_weak_norm(const ScalarField& a, const ScalarField& b, double eps) {
  if (eps < 0.0) {
    const double h2 = 2.0 * a.grid.spacing();
    eps = h2 * h2;
  }
  return spectral_pairing(a.grid, difference_spectrum(a, b, "heat_weak_norm"), eps);
}

GronwallCheck gronwall_monitor(const std::vector<double>& times,
                               const std::vector<double>& values, double lambda,
                               double defect) {
  if (times.size() != values.size() || times.empty())
    throw std::invalid_argument("gronwall_monitor: need matching nonempty series");
  if (lambda < 0.0 || defect < 0.0)
    throw std::invalid_argument("gronwall_monitor: lambda and defect must be nonnegative");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw std::invalid_argument("gronwall_monitor: times must increase");

  GronwallCheck out;
  const double t0 = times[0];
  const double g0 = values[0];
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double dt = times[i] - t0;
    const double growth = (lambda > 0.0) ? std::expm1(lambda * dt) / lambda : dt;
    const double envelope = g0 * (1.0 + lambda * growth) + defect * growth;
    if (envelope <= 0.0) continue;  // degenerate start; nothing to bound yet
    const double ratio = values[i] / envelope;
    out.max_ratio = std::max(out.max_ratio, ratio);
    if (ratio > 1.0 && !out.violated) {
      out.violated = true;
      out.first_violation_time = times[i];
    }
  }
  return out;
}

}  // namespace mflab
