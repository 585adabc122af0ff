#include "mflab/phase_space.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace mflab {

namespace {

constexpr double kPi = 3.14159265358979323846264338328;
constexpr double kTwoPi = 2.0 * kPi;

GridSpec xi_axis_spec(int xi_points) {
  GridSpec a;
  a.dim = 1;
  a.n = xi_points;
  a.box_length = 1.0;
  return a;
}

void validate_window(const WaveField& psi, int xi_points, double xi_max) {
  if (psi.grid.dim != 1)
    throw std::invalid_argument("phase space transforms need a one-dimensional state");
  psi.grid.validate();
  xi_axis_spec(xi_points).validate();  // same size family as spatial grids
  if (!(xi_max > 0.0)) throw std::invalid_argument("xi_max must be positive");

  // the correlation psi(x + hbar w/2) conj(psi(x - hbar w/2)) is periodic in w
  // with period 2 L / hbar, so the separation window xi_points * (pi / xi_max)
  // may span at most one period; equivalently dxi >= pi hbar / L, half the
  // box momentum quantum (equality is the exact single-period analysis)
  if (xi_points * kPi * psi.hbar >
      2.0 * xi_max * psi.grid.box_length * (1.0 + 1e-9))
    throw std::invalid_argument(
        "xi spacing below pi*hbar/box_length wraps the separation window");

  // momentum mass the window cannot represent
  auto spec = forward_transform(psi);
  double total = 0.0, outside = 0.0;
  for (int i = 0; i < psi.grid.n; ++i) {
    const double p = std::norm(spec[i]);
    total += p;
    if (std::abs(psi.hbar * psi.grid.wavenumber(i)) >= xi_max) outside += p;
  }
  if (total <= 0.0) throw std::invalid_argument("phase space transform of a zero state");
  if (outside > 1e-6 * total)
    throw std::invalid_argument("xi_max clips the state's momentum support");
}

// psi translated by delta through the spectrum
std::vector<std::complex<double>> shifted_field(const GridSpec& g,
                                                const std::vector<std::complex<double>>& spec,
                                                double delta) {
  std::vector<std::complex<double>> out(spec.size());
  for (int i = 0; i < g.n; ++i)
    out[i] = spec[i] * std::polar(1.0, g.wavenumber(i) * delta);
  fft_inverse_inplace(g, out);
  return out;
}

}  // namespace

double PhaseSpaceField::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.cell_volume() * dxi();
}

PhaseSpaceField wigner_transform(const WaveField& psi, int xi_points, double xi_max) {
  validate_window(psi, xi_points, xi_max);
  const GridSpec& g = psi.grid;
  const int n = g.n;
  const int m_count = xi_points;
  const double dw = kPi / xi_max;  // separation step dual to the xi grid

  const auto spec = forward_transform(psi);

  // shifted copies psi(x + hbar w_m / 2) for every separation index, plus the
  // +m_count/2 partner the periodic mode set does not carry
  std::vector<std::vector<std::complex<double>>> shifts(m_count);
  const GridSpec xi_spec = xi_axis_spec(m_count);
  for (int j = 0; j < m_count; ++j) {
    const int m = xi_spec.mode(j);
    shifts[j] = shifted_field(g, spec, 0.5 * psi.hbar * m * dw);
  }
  const auto shift_plus = shifted_field(g, spec, 0.25 * psi.hbar * m_count * dw);

  PhaseSpaceField w;
  w.grid = g;
  w.xi_points = xi_points;
  w.xi_max = xi_max;
  w.hbar = psi.hbar;
  w.values.assign(static_cast<std::size_t>(n) * m_count, 0.0);

  std::vector<std::complex<double>> row(m_count);
  double worst_im = 0.0, worst_re = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m_count; ++j) {
      const int m = xi_spec.mode(j);
      if (m == -m_count / 2) {
        // this separation has no conjugate partner in the mode set; its real
        // part is what keeps the transform exactly real and columns unbiased
        const std::complex<double> c = shifts[j][i] * std::conj(shift_plus[i]);
        row[j] = c.real();
        continue;
      }
      const int jm = (j == 0) ? 0 : m_count - j;  // storage slot of -m
      row[j] = shifts[j][i] * std::conj(shifts[jm][i]);
    }
    fft_forward_inplace(xi_spec, row);
    for (int l = 0; l < m_count; ++l) {
      const int mode = xi_spec.mode(l);
      const std::complex<double> val = row[l] * (dw / kTwoPi);
      worst_im = std::max(worst_im, std::abs(val.imag()));
      worst_re = std::max(worst_re, std::abs(val.real()));
      w.values[static_cast<std::size_t>(i) * m_count + (mode + m_count / 2)] = val.real();
    }
  }
  if (worst_im > 1e-10 * std::max(worst_re, 1e-300))
    throw std::runtime_error("wigner_transform: transform failed to come out real");
  return w;
}

PhaseSpaceField husimi_transform(const WaveField& psi, int xi_points, double xi_max) {
  PhaseSpaceField w = wigner_transform(psi, xi_points, xi_max);
  const int n = w.grid.n;
  const int m_count = xi_points;
  const GridSpec xi_spec = xi_axis_spec(m_count);

  std::vector<std::complex<double>> work(w.values.begin(), w.values.end());

  // transform along x (stride m_count), then along xi (contiguous rows)
  std::vector<std::complex<double>> col(n);
  for (int l = 0; l < m_count; ++l) {
    for (int i = 0; i < n; ++i) col[i] = work[static_cast<std::size_t>(i) * m_count + l];
    fft_forward_inplace(w.grid, col);
    for (int i = 0; i < n; ++i) work[static_cast<std::size_t>(i) * m_count + l] = col[i];
  }
  std::vector<std::complex<double>> row(m_count);
  const double xi_span = 2.0 * xi_max;
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < m_count; ++l) row[l] = work[static_cast<std::size_t>(i) * m_count + l];
    fft_forward_inplace(xi_spec, row);
    for (int l = 0; l < m_count; ++l) {
      const double kx = w.grid.wavenumber(i);
      const double kxi = kTwoPi * xi_spec.mode(l) / xi_span;
      row[l] *= std::exp(-0.25 * w.hbar * (kx * kx + kxi * kxi));
    }
    fft_inverse_inplace(xi_spec, row);
    for (int l = 0; l < m_count; ++l) work[static_cast<std::size_t>(i) * m_count + l] = row[l];
  }
  for (int l = 0; l < m_count; ++l) {
    for (int i = 0; i < n; ++i) col[i] = work[static_cast<std::size_t>(i) * m_count + l];
    fft_inverse_inplace(w.grid, col);
    for (int i = 0; i < n; ++i) work[static_cast<std::size_t>(i) * m_count + l] = col[i];
  }
  for (std::size_t i = 0; i < w.values.size(); ++i) w.values[i] = work[i].real();
  return w;
}

std::vector<double> position_marginal(const PhaseSpaceField& w) {
  std::vector<double> out(w.grid.n, 0.0);
  for (int i = 0; i < w.grid.n; ++i) {
    double s = 0.0;
    for (int l = 0; l < w.xi_points; ++l) s += w.at(i, l);
    out[i] = s * w.dxi();
  }
  return out;
}

std::vector<double> momentum_marginal(const PhaseSpaceField& w) {
  std::vector<double> out(w.xi_points, 0.0);
  for (int l = 0; l < w.xi_points; ++l) {
    double s = 0.0;
    for (int i = 0; i < w.grid.n; ++i) s += w.at(i, l);
    out[l] = s * w.grid.cell_volume();
  }
  return out;
}

double phase_space_purity(const PhaseSpaceField& w) {
  double s = 0.0;
  for (double v : w.values) s += v * v;
  return s * w.grid.cell_volume() * w.dxi();
}

SecondMomentCheck second_moment_check(const WaveField& psi, int xi_points, double xi_max) {
  SecondMomentCheck out;
  const PhaseSpaceField w = wigner_transform(psi, xi_points, xi_max);
  double acc = 0.0;
  for (int i = 0; i < w.grid.n; ++i)
    for (int l = 0; l < w.xi_points; ++l) {
      const double xi = w.xi_value(l);
      acc += w.at(i, l) * xi * xi;
    }
  out.via_phase_space = acc * w.grid.cell_volume() * w.dxi();

  const auto grad = wave_gradient(psi);
  double gacc = 0.0;
  for (const auto& z : grad[0]) gacc += std::norm(z);
  out.via_gradient = psi.hbar * psi.hbar * gacc * psi.grid.cell_volume();

  out.rel_gap = std::abs(out.via_phase_space - out.via_gradient) /
                std::max(std::abs(out.via_gradient), 1e-300);
  return out;
}

double monokinetic_concentration(const PhaseSpaceField& w, const std::vector<double>& u) {
  if (u.size() != static_cast<std::size_t>(w.grid.n))
    throw std::invalid_argument("monokinetic_concentration: u must have one value per point");
  double acc = 0.0;
  for (int i = 0; i < w.grid.n; ++i)
    for (int l = 0; l < w.xi_points; ++l) {
      const double d = w.xi_value(l) - u[i];
      acc += w.at(i, l) * d * d;
    }
  return acc * w.grid.cell_volume() * w.dxi();
}

}  // namespace mflab
