#include "mflab/euler_poisson.hpp"

#include <complex>
#include <limits>
#include <stdexcept>

namespace mflab {

namespace {

bool all_finite(const FluidState& s) {
  for (double v : s.rho.values)
    if (!std::isfinite(v)) return false;
  for (int c = 0; c < s.u.grid.dim; ++c)
    for (double v : s.u.comp[c])
      if (!std::isfinite(v)) return false;
  return true;
}

double max_speed(const FluidState& s) { return s.u.max_abs(); }

// s := s + w * d
void accumulate(FluidState& s, const FluidDerivative& d, double w) {
  for (std::size_t i = 0; i < s.rho.values.size(); ++i) s.rho.values[i] += w * d.drho.values[i];
  for (int c = 0; c < s.u.grid.dim; ++c)
    for (std::size_t i = 0; i < s.u.comp[c].size(); ++i)
      s.u.comp[c][i] += w * d.du.comp[c][i];
}

}  // namespace

FluidState::FluidState(ScalarField rho_, VectorField u_)
    : rho(std::move(rho_)), u(std::move(u_)) {
  if (!(rho.grid == u.grid)) throw std::invalid_argument("FluidState: rho and u grids differ");
  rho.grid.validate();
}

FluidDerivative euler_poisson_rhs(const FluidState& s) {
  const GridSpec& g = s.rho.grid;
  const std::size_t cells = g.cell_count();

  VectorField flux(g);
  for (int c = 0; c < g.dim; ++c)
    for (std::size_t i = 0; i < cells; ++i) flux.comp[c][i] = s.rho.values[i] * s.u.comp[c][i];

  FluidDerivative d;
  d.drho = spectral_divergence(flux);
  for (auto& v : d.drho.values) v = -v;

  const VectorField force = coulomb_force_field(s.rho);

  d.du = VectorField(g);
  ScalarField comp(g);
  for (int c = 0; c < g.dim; ++c) {
    comp.values = s.u.comp[c];
    const VectorField grad_uc = spectral_gradient(comp);
    ScalarField adv(g);
    for (int dd = 0; dd < g.dim; ++dd)
      for (std::size_t i = 0; i < cells; ++i)
        adv.values[i] += s.u.comp[dd][i] * grad_uc.comp[dd][i];
    adv = dealias(adv);
    for (std::size_t i = 0; i < cells; ++i)
      d.du.comp[c][i] = -adv.values[i] - force.comp[c][i];
  }
  return d;
}

void euler_poisson_step(FluidState& s, double dt, double cfl) {
  if (s.blown_up) return;
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("euler_poisson_step: dt must be positive and finite");
  const double limit = cfl * s.rho.grid.spacing() / std::max(max_speed(s), 1.0);
  if (dt > limit)
    throw std::invalid_argument("euler_poisson_step: dt violates the advective limit");

  const FluidDerivative k1 = euler_poisson_rhs(s);
  FluidState s2 = s;
  accumulate(s2, k1, 0.5 * dt);
  const FluidDerivative k2 = euler_poisson_rhs(s2);
  FluidState s3 = s;
  accumulate(s3, k2, 0.5 * dt);
  const FluidDerivative k3 = euler_poisson_rhs(s3);
  FluidState s4 = s;
  accumulate(s4, k3, dt);
  const FluidDerivative k4 = euler_poisson_rhs(s4);

  accumulate(s, k1, dt / 6.0);
  accumulate(s, k2, dt / 3.0);
  accumulate(s, k3, dt / 3.0);
  accumulate(s, k4, dt / 6.0);
  s.time += dt;
  if (!all_finite(s)) s.blown_up = true;
}

FluidEnergy fluid_energy(const FluidState& s) {
  const GridSpec& g = s.rho.grid;
  FluidEnergy e;
  double kin = 0.0;
  for (int c = 0; c < g.dim; ++c)
    for (std::size_t i = 0; i < s.rho.values.size(); ++i)
      kin += s.rho.values[i] * s.u.comp[c][i] * s.u.comp[c][i];
  e.kinetic = 0.5 * kin * g.cell_volume();
  e.potential = 0.5 * inner(s.rho, poisson_solve(s.rho));
  e.total = e.kinetic + e.potential;
  return e;
}

std::array<double, 3> fluid_momentum(const FluidState& s) {
  std::array<double, 3> p{0.0, 0.0, 0.0};
  for (int c = 0; c < s.u.grid.dim; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.rho.values.size(); ++i)
      acc += s.rho.values[i] * s.u.comp[c][i];
    p[c] = acc * s.rho.grid.cell_volume();
  }
  return p;
}

RegularityReport regularity_report(const FluidState& s) {
  const GridSpec& g = s.rho.grid;
  RegularityReport r;
  r.rho_inf = std::max(std::abs(s.rho.max_value()), std::abs(s.rho.min_value()));

  ScalarField comp(g);
  ScalarField div(g);
  for (int c = 0; c < g.dim; ++c) {
    comp.values = s.u.comp[c];
    const VectorField grad = spectral_gradient(comp);
    for (int dd = 0; dd < g.dim; ++dd)
      for (double v : grad.comp[dd]) r.grad_u_inf = std::max(r.grad_u_inf, std::abs(v));
    for (std::size_t i = 0; i < div.values.size(); ++i) div.values[i] += grad.comp[c][i];
  }

  // Laplacian of div u through the spectrum; same band limit as the gradient
  auto spec = forward_transform(div);
  std::vector<double> k2(g.n);
  for (int i = 0; i < g.n; ++i) k2[i] = g.wavenumber(i) * g.wavenumber(i);
  for (std::size_t f = 0; f < spec.size(); ++f) {
    const auto idx = axis_indices(g, f);
    double ksq = 0.0;
    for (int d = 0; d < g.dim; ++d) ksq += k2[idx[d]];
    spec[f] *= -ksq;
  }
  ScalarField lap = inverse_transform_real(g, std::move(spec));
  for (double v : lap.values) r.laplacian_div_u_inf = std::max(r.laplacian_div_u_inf, std::abs(v));
  return r;
}

RegularityMonitor::RegularityMonitor(double threshold_) : threshold(threshold_) {
  if (!(threshold > 0.0)) throw std::invalid_argument("RegularityMonitor: threshold must be positive");
}

void RegularityMonitor::observe(const FluidState& s) {
  last = regularity_report(s);
  const bool bad = !std::isfinite(last.grad_u_inf) || last.grad_u_inf > threshold;
  if (bad && !flagged) {
    flagged = true;
    first_flag_time = s.time;
  }
}

WaveField wkb_initializer(const ScalarField& rho, const ScalarField& phase, double hbar,
                          double floor) {
  if (!(rho.grid == phase.grid))
    throw std::invalid_argument("wkb_initializer: rho and phase grids differ");
  if (!(floor > 0.0)) throw std::invalid_argument("wkb_initializer: floor must be positive");
  WaveField psi(rho.grid, hbar);
  for (std::size_t i = 0; i < rho.values.size(); ++i)
    psi.values[i] = std::polar(std::sqrt(std::max(rho.values[i], floor)),
                               phase.values[i] / hbar);
  psi.normalize();
  return psi;
}

}  // namespace mflab
