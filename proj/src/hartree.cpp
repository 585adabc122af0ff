#include "mflab/hartree.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

namespace mflab {

namespace {

double max_density(const WaveField& psi) {
  double m = 0.0;
  for (const auto& z : psi.values) {
    const double d = std::norm(z);
    if (!std::isfinite(d)) return std::numeric_limits<double>::infinity();
    m = std::max(m, d);
  }
  return m;
}

// coupling * poisson_solve(|psi|^2) as raw values
std::vector<double> self_potential(const WaveField& psi, double coupling) {
  ScalarField rho = density(psi);
  if (coupling == 0.0) return std::vector<double>(rho.values.size(), 0.0);
  ScalarField phi = poisson_solve(rho);
  for (auto& v : phi.values) v *= coupling;
  return std::move(phi.values);
}

void half_kick(WaveField& psi, const std::vector<double>& w, double dt) {
  const double scale = -0.5 * dt / psi.hbar;
  for (std::size_t i = 0; i < psi.values.size(); ++i)
    psi.values[i] *= std::polar(1.0, scale * w[i]);
}

void full_drift(WaveField& psi, double dt) {
  const GridSpec& g = psi.grid;
  auto spec = forward_transform(psi);
  std::vector<double> k2(g.n);
  for (int i = 0; i < g.n; ++i) k2[i] = g.wavenumber(i) * g.wavenumber(i);
  const double scale = -0.5 * psi.hbar * dt;
  const std::size_t cells = g.cell_count();
  for (std::size_t f = 0; f < cells; ++f) {
    const auto idx = axis_indices(g, f);
    double ksq = 0.0;
    for (int d = 0; d < g.dim; ++d) ksq += k2[idx[d]];
    spec[f] *= std::polar(1.0, scale * ksq);
  }
  fft_inverse_inplace(g, spec);
  psi.values = std::move(spec);
}

}  // namespace

HartreeState::HartreeState(WaveField psi0, double coupling_)
    : psi(std::move(psi0)), coupling(coupling_) {
  psi.grid.validate();
  guard_density = 1e6 * std::max(max_density(psi), 1e-300);
}

void hartree_step(HartreeState& s, double dt) {
  if (!(dt != 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("hartree_step: dt must be finite and nonzero");
  const double peak = max_density(s.psi);
  if (!std::isfinite(peak) || peak > s.guard_density)
    throw std::runtime_error("hartree_step: density blow-up guard tripped");

  if (!s.potential_valid) {
    s.potential = self_potential(s.psi, s.coupling);
    s.potential_valid = true;
  }
  half_kick(s.psi, s.potential, dt);
  full_drift(s.psi, dt);
  if (s.refresh_half_kick) {
    // kicks leave |psi|^2 unchanged, so this potential is already the one the
    // next step must open with
    s.potential = self_potential(s.psi, s.coupling);
    half_kick(s.psi, s.potential, dt);
  } else {
    half_kick(s.psi, s.potential, dt);
    s.potential_valid = false;  // the drift made the entry potential stale
  }
  s.time += dt;
}

ScalarField density(const WaveField& psi) {
  ScalarField rho(psi.grid);
  for (std::size_t i = 0; i < psi.values.size(); ++i) rho.values[i] = std::norm(psi.values[i]);
  return rho;
}

VectorField current(const WaveField& psi) {
  const auto grad = wave_gradient(psi);
  VectorField j(psi.grid);
  for (int c = 0; c < psi.grid.dim; ++c)
    for (std::size_t i = 0; i < psi.values.size(); ++i)
      j.comp[c][i] = psi.hbar * std::imag(std::conj(psi.values[i]) * grad[c][i]);
  return j;
}

HartreeEnergy hartree_energy(const HartreeState& s) {
  const WaveField& psi = s.psi;
  const GridSpec& g = psi.grid;
  HartreeEnergy e;

  auto spec = forward_transform(psi);
  std::vector<double> k2(g.n);
  for (int i = 0; i < g.n; ++i) k2[i] = g.wavenumber(i) * g.wavenumber(i);
  double acc = 0.0;
  const std::size_t cells = g.cell_count();
  for (std::size_t f = 0; f < cells; ++f) {
    const auto idx = axis_indices(g, f);
    double ksq = 0.0;
    for (int d = 0; d < g.dim; ++d) ksq += k2[idx[d]];
    acc += ksq * std::norm(spec[f]);
  }
  e.kinetic = 0.5 * psi.hbar * psi.hbar * acc * g.cell_volume() / static_cast<double>(cells);

  const auto grad = wave_gradient(psi);
  double gacc = 0.0;
  for (int c = 0; c < g.dim; ++c)
    for (const auto& z : grad[c]) gacc += std::norm(z);
  e.kinetic_gradient_route = 0.5 * psi.hbar * psi.hbar * gacc * g.cell_volume();

  ScalarField rho = density(psi);
  e.potential = 0.5 * s.coupling * inner(rho, poisson_solve(rho));
  e.total = e.kinetic + e.potential;
  return e;
}

double continuity_residual(const HartreeState& before, const HartreeState& after, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("continuity_residual: dt must be positive");
  ScalarField rho0 = density(before.psi);
  ScalarField rho1 = density(after.psi);
  VectorField j0 = current(before.psi);
  VectorField j1 = current(after.psi);
  for (int c = 0; c < j0.grid.dim; ++c)
    for (std::size_t i = 0; i < j0.comp[c].size(); ++i)
      j0.comp[c][i] = 0.5 * (j0.comp[c][i] + j1.comp[c][i]);
  ScalarField div = spectral_divergence(j0);
  double worst = 0.0;
  for (std::size_t i = 0; i < div.values.size(); ++i)
    worst = std::max(worst,
                     std::abs((rho1.values[i] - rho0.values[i]) / dt + div.values[i]));
  return worst;
}

double spectral_fourth_moment(const WaveField& psi) {
  const GridSpec& g = psi.grid;
  auto spec = forward_transform(psi);
  std::vector<double> k2(g.n);
  for (int i = 0; i < g.n; ++i) k2[i] = g.wavenumber(i) * g.wavenumber(i);
  double acc = 0.0;
  const std::size_t cells = g.cell_count();
  for (std::size_t f = 0; f < cells; ++f) {
    const auto idx = axis_indices(g, f);
    double ksq = 0.0;
    for (int d = 0; d < g.dim; ++d) ksq += k2[idx[d]];
    acc += ksq * ksq * std::norm(spec[f]);
  }
  return acc * g.cell_volume() / static_cast<double>(cells);
}

}  // namespace mflab
