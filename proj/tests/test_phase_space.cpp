#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <vector>

#include "mflab/euler_poisson.hpp"
#include "mflab/grid.hpp"
#include "mflab/hartree.hpp"
#include "mflab/modulated.hpp"
#include "mflab/phase_space.hpp"
#include "mflab/util.hpp"

using namespace mflab;

namespace {

constexpr double kPi = 3.14159265358979323846264338328;

GridSpec grid1(int n, double L) {
  GridSpec g;
  g.dim = 1;
  g.n = n;
  g.box_length = L;
  return g;
}

WaveField centered_gaussian(const GridSpec& g, double hbar, double sigma) {
  WaveField psi(g, hbar);
  for (int i = 0; i < g.n; ++i) {
    const double x = i * g.spacing() - 0.5 * g.box_length;
    psi.values[i] = std::exp(-x * x / (4.0 * sigma * sigma));
  }
  psi.normalize();
  return psi;
}

}  // namespace

TEST_CASE("gaussian state reproduces the closed-form phase-space profile") {
  // the box leaves ample room for the separation reach hbar * M * dw / 4,
  // keeping box-edge correlations at the far tails of the state
  const double sigma = 1.0, hbar = 0.7;
  GridSpec g = grid1(480, 60.0);
  WaveField psi = centered_gaussian(g, hbar, sigma);
  PhaseSpaceField w = wigner_transform(psi, 128, 4.0);

  double worst = 0.0;
  for (int i = 0; i < g.n; ++i) {
    const double x = i * g.spacing() - 30.0;
    for (int l = 0; l < w.xi_points; ++l) {
      const double xi = w.xi_value(l);
      const double expect = std::exp(-x * x / (2.0 * sigma * sigma)) *
                            std::exp(-2.0 * sigma * sigma * xi * xi / (hbar * hbar)) /
                            (kPi * hbar);
      worst = std::max(worst, std::abs(w.at(i, l) - expect));
    }
  }
  CHECK(worst < 1e-6);
  CHECK(w.mass() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("plane wave concentrates on a single velocity column") {
  const double L = 2.0 * kPi, hbar = 0.5;
  GridSpec g = grid1(64, L);
  WaveField psi(g, hbar);
  const int m0 = 4;
  for (int i = 0; i < g.n; ++i)
    psi.values[i] = std::polar(1.0, m0 * 2.0 * kPi * i / g.n);
  psi.normalize();

  const int M = 64;
  const double xi_max = 8.0;
  PhaseSpaceField w = wigner_transform(psi, M, xi_max);
  const double dxi = w.dxi();
  const int target = static_cast<int>(std::lround((hbar * m0 - (-xi_max)) / dxi));
  const double peak = 1.0 / (L * dxi);

  for (int i = 0; i < g.n; ++i)
    for (int l = 0; l < M; ++l) {
      if (l == target)
        CHECK(w.at(i, l) == doctest::Approx(peak).epsilon(1e-10));
      else
        CHECK(std::abs(w.at(i, l)) < 1e-10 * peak);
    }
}

TEST_CASE("velocity integral recovers the position density exactly") {
  GridSpec g = grid1(192, 24.0);
  WaveField psi = centered_gaussian(g, 0.6, 1.3);
  // give it structure: phase modulation plus an amplitude ripple
  for (int i = 0; i < g.n; ++i) {
    const double c = 2.0 * kPi * i / g.n;
    psi.values[i] *= (1.0 + 0.2 * std::cos(c)) *
                     std::polar(1.0, 0.5 * std::sin(2.0 * c));
  }
  psi.normalize();

  PhaseSpaceField w = wigner_transform(psi, 128, 6.0);
  const ScalarField rho = density(psi);
  const auto marg = position_marginal(w);
  double worst = 0.0;
  for (int i = 0; i < g.n; ++i)
    worst = std::max(worst, std::abs(marg[i] - rho.values[i]));
  CHECK(worst < 1e-8);
  CHECK(w.mass() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("pure states have the universal squared mass") {
  for (double hbar : {0.7, 0.35}) {
    GridSpec g = grid1(480, 60.0);
    WaveField psi = centered_gaussian(g, hbar, 1.1);
    PhaseSpaceField w = wigner_transform(psi, 128, 4.0);
    CHECK(phase_space_purity(w) ==
          doctest::Approx(1.0 / (2.0 * kPi * hbar)).epsilon(1e-6));
  }
}

TEST_CASE("transform is quadratic in the state") {
  GridSpec g = grid1(96, 12.0);
  WaveField psi = centered_gaussian(g, 0.5, 0.9);
  PhaseSpaceField w1 = wigner_transform(psi, 48, 4.0);
  const std::complex<double> c(0.6, -0.8);  // |c| = 1 keeps the window check happy
  WaveField scaled = psi;
  for (auto& z : scaled.values) z *= 2.0 * c;
  PhaseSpaceField w2 = wigner_transform(scaled, 48, 4.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < w1.values.size(); ++i)
    worst = std::max(worst, std::abs(w2.values[i] - 4.0 * w1.values[i]));
  CHECK(worst < 1e-12 * 4.0 / (2.0 * kPi * 0.5));
  CHECK(w2.mass() == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("smoothing removes interference negativity but keeps mass") {
  // two well-separated humps: the raw transform oscillates deeply negative
  // between them, the smoothed one must not
  const double hbar = 0.5, sigma = 0.8, a = 3.0;
  GridSpec g = grid1(192, 24.0);
  WaveField psi(g, hbar);
  for (int i = 0; i < g.n; ++i) {
    const double x = i * g.spacing() - 12.0;
    psi.values[i] = std::exp(-(x - a) * (x - a) / (4.0 * sigma * sigma)) +
                    std::exp(-(x + a) * (x + a) / (4.0 * sigma * sigma));
  }
  psi.normalize();

  PhaseSpaceField w = wigner_transform(psi, 128, 4.5);
  double wmin = 0.0, wmax = 0.0;
  for (double v : w.values) {
    wmin = std::min(wmin, v);
    wmax = std::max(wmax, v);
  }
  CHECK(wmin < -0.1 * wmax);  // genuine interference

  PhaseSpaceField h = husimi_transform(psi, 128, 4.5);
  double hmin = 0.0;
  for (double v : h.values) hmin = std::min(hmin, v);
  CHECK(hmin >= -1e-10);
  CHECK(h.mass() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("both velocity-moment routes agree for a family of states") {
  GridSpec g = grid1(480, 60.0);
  int checked = 0;
  for (double hbar : {0.7, 0.35}) {
    // correlations decay on the scale sigma / hbar, so the smaller hbar needs
    // the longer separation window; both reaches stay well inside the box
    const int m_pts = hbar > 0.5 ? 144 : 256;
    for (double sigma : {0.8, 1.2, 2.0}) {
      WaveField psi = centered_gaussian(g, hbar, sigma);
      if (checked % 2 == 1) {  // half the family carries a drift
        for (int i = 0; i < g.n; ++i)
          psi.values[i] *= std::polar(1.0, 2.0 * (2.0 * kPi * i / g.n));
      }
      psi.normalize();
      SecondMomentCheck chk = second_moment_check(psi, m_pts, 6.0);
      CHECK(chk.rel_gap < 1e-6);
      ++checked;
    }
  }
  CHECK(checked == 6);
}

TEST_CASE("smoothing adds exactly half hbar of velocity variance") {
  GridSpec g = grid1(480, 60.0);
  for (double hbar : {0.6, 0.3}) {
    WaveField psi = centered_gaussian(g, hbar, 1.0);
    PhaseSpaceField w = wigner_transform(psi, 128, 4.0);
    PhaseSpaceField h = husimi_transform(psi, 128, 4.0);
    auto moment2 = [](const PhaseSpaceField& f) {
      double acc = 0.0;
      for (int i = 0; i < f.grid.n; ++i)
        for (int l = 0; l < f.xi_points; ++l)
          acc += f.at(i, l) * f.xi_value(l) * f.xi_value(l);
      return acc * f.grid.cell_volume() * f.dxi();
    };
    const double offset = moment2(h) - moment2(w);
    CHECK(offset == doctest::Approx(0.5 * hbar).epsilon(1e-6));
  }
}

TEST_CASE("phase-space route to the modulated kinetic energy") {
  GridSpec g = grid1(480, 60.0);
  const double hbar = 0.35;
  ScalarField rho(g), phase(g);
  for (int i = 0; i < g.n; ++i) {
    const double x = i * g.spacing() - 30.0;
    rho.values[i] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
    phase.values[i] =
        0.3 * (g.box_length / (2.0 * kPi)) * std::sin(2.0 * kPi * i / g.n);
  }
  rho.normalize_density();
  WaveField psi = wkb_initializer(rho, phase, hbar);
  const VectorField u = spectral_gradient(phase);

  PhaseSpaceField w = wigner_transform(psi, 128, 4.0);
  const double via_ps = monokinetic_concentration(w, u.comp[0]);
  const double via_wave = kinetic_modulated(psi, u);
  CHECK(via_ps == doctest::Approx(via_wave).epsilon(1e-6));
}

TEST_CASE("smoothed marginal converges to the density linearly in hbar") {
  GridSpec g = grid1(480, 60.0);
  ScalarField rho(g);
  for (int i = 0; i < g.n; ++i) {
    const double x = i * g.spacing() - 30.0;
    rho.values[i] = std::exp(-x * x / 2.0);
  }
  rho.normalize_density();
  ScalarField zero_phase(g);

  std::vector<double> lh, ld;
  for (double hbar : {0.4, 0.2, 0.1, 0.05}) {
    WaveField psi = wkb_initializer(rho, zero_phase, hbar);
    PhaseSpaceField h = husimi_transform(psi, 96, 3.0);
    const auto marg = position_marginal(h);
    double l1 = 0.0;
    for (int i = 0; i < g.n; ++i) l1 += std::abs(marg[i] - rho.values[i]);
    l1 *= g.spacing();
    lh.push_back(std::log(hbar));
    ld.push_back(std::log(l1));
  }
  const LineFit fit = fit_line(lh, ld);
  CHECK(fit.slope >= 0.9);
}

TEST_CASE("window and shape misuse are input errors") {
  GridSpec g = grid1(64, 2.0 * kPi);
  WaveField psi(g, 0.5);
  for (int i = 0; i < g.n; ++i) psi.values[i] = std::polar(1.0, 4.0 * (2.0 * kPi * i / g.n));
  psi.normalize();
  CHECK_THROWS_AS(wigner_transform(psi, 64, 1.0), std::invalid_argument);  // clips hbar*k = 2
  CHECK_THROWS_AS(wigner_transform(psi, 63, 8.0), std::invalid_argument);  // odd axis
  CHECK_THROWS_AS(wigner_transform(psi, 64, -1.0), std::invalid_argument);
  // dxi below pi*hbar/L: the separation window would wrap around the box
  CHECK_THROWS_AS(wigner_transform(psi, 128, 8.0), std::invalid_argument);

  GridSpec g3;
  g3.dim = 3;
  g3.n = 8;
  g3.box_length = 1.0;
  WaveField psi3(g3, 0.5);
  psi3.values[0] = 1.0;
  CHECK_THROWS_AS(wigner_transform(psi3, 64, 8.0), std::invalid_argument);

  WaveField zero(g, 0.5);
  CHECK_THROWS_AS(wigner_transform(zero, 64, 8.0), std::invalid_argument);
}
