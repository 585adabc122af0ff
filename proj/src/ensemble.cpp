#include "mflab/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mflab/kernels.hpp"

namespace mflab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kFourPi = 4.0 * kPi;

// --- periodic kernel table ---------------------------------------------------
// The torus Green function of -Laplacian (Fourier coefficients 1/|k|^2 over
// k != 0) splits into the 27 nearest bare images plus a residual that is
// smooth on the folded octant. The residual is tabulated once at box length 1
// on the lattice i/64, i = 0..34, which covers the octant [0, 1/2]^3 plus the
// two extra planes a Catmull-Rom stencil needs at the top edge; values at a
// general box rescale as V(d; L) = V(d/L; 1)/L.
//
// Table entries come from a direct Ewald sum: residual = (k-space part on
// modes 0 < |m|_inf <= 7) + (real-space erf corrections over |n|_inf <= 2)
// - 1/(4 alpha). With alpha = 10 both truncation tails are below 1e-21.
struct PairTable {
  static constexpr int kNodes = 35;
  static constexpr int kRes = 64;  // table nodes sit on the 1/64 lattice
  static constexpr double kAlpha = 10.0;
  std::vector<double> residual;

  PairTable() : residual(std::size_t(kNodes) * kNodes * kNodes) {
    const double kappa = std::sqrt(kAlpha);

    GridSpec g;
    g.dim = 3;
    g.n = kRes;
    g.box_length = 1.0;
    std::vector<std::complex<double>> spectrum(g.cell_count());
    for (int i = 0; i < kRes; ++i)
      for (int j = 0; j < kRes; ++j)
        for (int k = 0; k < kRes; ++k) {
          int mx = g.mode(i), my = g.mode(j), mz = g.mode(k);
          int m_inf = std::max({std::abs(mx), std::abs(my), std::abs(mz)});
          if (m_inf == 0 || m_inf > 7) continue;
          double k2 = 4.0 * kPi * kPi * double(mx * mx + my * my + mz * mz);
          spectrum[flat_index(g, i, j, k)] = std::exp(-k2 / (4.0 * kAlpha)) / k2;
        }
    fft_inverse_inplace(g, spectrum);
    const double cells = double(g.cell_count());

    for (int i = 0; i < kNodes; ++i)
      for (int j = 0; j < kNodes; ++j)
        for (int k = 0; k < kNodes; ++k) {
          const double u[3] = {i / double(kRes), j / double(kRes), k / double(kRes)};
          double real_part = 0.0;
          for (int nx = -2; nx <= 2; ++nx)
            for (int ny = -2; ny <= 2; ++ny)
              for (int nz = -2; nz <= 2; ++nz) {
                double dx = u[0] + nx, dy = u[1] + ny, dz = u[2] + nz;
                double r = std::sqrt(dx * dx + dy * dy + dz * dz);
                int shell = std::max({std::abs(nx), std::abs(ny), std::abs(nz)});
                if (shell <= 1) {
                  // bare image subtracted here: erfc/r - 1/r = -erf/r,
                  // analytic through r = 0
                  real_part += r > 0.0 ? -std::erf(kappa * r) / (kFourPi * r)
                                       : -kappa / (2.0 * kPi * std::sqrt(kPi));
                } else {
                  real_part += std::erfc(kappa * r) / (kFourPi * r);
                }
              }
          double k_part = cells * spectrum[flat_index(g, i, j, k)].real();
          residual[(std::size_t(i) * kNodes + j) * kNodes + k] =
              k_part + real_part - 1.0 / (4.0 * kAlpha);
        }
  }

  double node(int i, int j, int k) const {
    // even reflection about 0 supplies the stencil row below the axis
    if (i < 0) i = -i;
    if (j < 0) j = -j;
    if (k < 0) k = -k;
    return residual[(std::size_t(i) * kNodes + j) * kNodes + k];
  }
};

const PairTable& pair_table() {
  static const PairTable table;
  return table;
}

// Catmull-Rom weights on one axis: fraction t between nodes b and b+1.
struct CrAxis {
  int base = 0;
  double w[4];
  double dw[4];
};

CrAxis cr_axis(double s) {
  // s in [0, 1/2] in box units; node spacing 1/kRes
  double tt = s * PairTable::kRes;
  int b = int(tt);
  if (b > PairTable::kRes / 2 - 1) b = PairTable::kRes / 2 - 1;
  double t = tt - b;
  CrAxis a;
  a.base = b;
  a.w[0] = 0.5 * ((-t + 2.0) * t - 1.0) * t;
  a.w[1] = 0.5 * ((3.0 * t - 5.0) * t * t + 2.0);
  a.w[2] = 0.5 * (((-3.0 * t + 4.0) * t + 1.0) * t);
  a.w[3] = 0.5 * (t - 1.0) * t * t;
  a.dw[0] = 0.5 * (-3.0 * t * t + 4.0 * t - 1.0);
  a.dw[1] = 0.5 * (9.0 * t * t - 10.0 * t);
  a.dw[2] = 0.5 * (-9.0 * t * t + 8.0 * t + 1.0);
  a.dw[3] = 0.5 * (3.0 * t * t - 2.0 * t);
  return a;
}

double table_value(const double s[3]) {
  const PairTable& tab = pair_table();
  CrAxis ax = cr_axis(s[0]), ay = cr_axis(s[1]), az = cr_axis(s[2]);
  double sum = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        sum += ax.w[i] * ay.w[j] * az.w[k] *
               tab.node(ax.base - 1 + i, ay.base - 1 + j, az.base - 1 + k);
  return sum;
}

void table_value_gradient(const double s[3], double& value, double grad[3]) {
  const PairTable& tab = pair_table();
  CrAxis ax = cr_axis(s[0]), ay = cr_axis(s[1]), az = cr_axis(s[2]);
  value = 0.0;
  grad[0] = grad[1] = grad[2] = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) {
        double p = tab.node(ax.base - 1 + i, ay.base - 1 + j, az.base - 1 + k);
        value += ax.w[i] * ay.w[j] * az.w[k] * p;
        grad[0] += ax.dw[i] * ay.w[j] * az.w[k] * p;
        grad[1] += ax.w[i] * ay.dw[j] * az.w[k] * p;
        grad[2] += ax.w[i] * ay.w[j] * az.dw[k] * p;
      }
  for (int a = 0; a < 3; ++a) grad[a] *= PairTable::kRes;
}

// Minimum image in box units together with the fold signs that map the
// octant gradient back to the original displacement.
struct Folded {
  double s[3];    // |min image| / L, inside [0, 1/2]
  double sign[3]; // 0 on a coordinate that folded from exactly 0
  double r;       // |min image| / L
};

Folded fold_displacement(double box_length, const Vec3& d) {
  Folded f;
  double r2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    double x = d[a] / box_length;
    x -= std::round(x);
    f.sign[a] = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    f.s[a] = std::abs(x);
    r2 += f.s[a] * f.s[a];
  }
  f.r = std::sqrt(r2);
  return f;
}

double bare_images_value(const double s[3]) {
  double sum = 0.0;
  for (int nx = -1; nx <= 1; ++nx)
    for (int ny = -1; ny <= 1; ++ny)
      for (int nz = -1; nz <= 1; ++nz) {
        double dx = s[0] + nx, dy = s[1] + ny, dz = s[2] + nz;
        sum += 1.0 / (kFourPi * std::sqrt(dx * dx + dy * dy + dz * dz));
      }
  return sum;
}

void bare_images_gradient(const double s[3], double grad[3]) {
  grad[0] = grad[1] = grad[2] = 0.0;
  for (int nx = -1; nx <= 1; ++nx)
    for (int ny = -1; ny <= 1; ++ny)
      for (int nz = -1; nz <= 1; ++nz) {
        double dx = s[0] + nx, dy = s[1] + ny, dz = s[2] + nz;
        double r2 = dx * dx + dy * dy + dz * dz;
        double scale = -1.0 / (kFourPi * r2 * std::sqrt(r2));
        grad[0] += scale * dx;
        grad[1] += scale * dy;
        grad[2] += scale * dz;
      }
}

Vec3 bare_gradient(const Vec3& d) {
  double r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
  double scale = -1.0 / (kFourPi * r2 * std::sqrt(r2));
  return {scale * d[0], scale * d[1], scale * d[2]};
}

// --- shared checks -----------------------------------------------------------
void check_shapes(const ParticleSystem& ps) {
  if (ps.n < 1 || ps.n > 4096)
    throw std::invalid_argument("ParticleSystem: n must lie in [1, 4096], got " +
                                std::to_string(ps.n));
  if (!(ps.box_length > 0.0) || !std::isfinite(ps.box_length))
    throw std::invalid_argument("ParticleSystem: box_length must be positive");
  if (ps.positions.size() != std::size_t(ps.n) ||
      ps.velocities.size() != std::size_t(ps.n))
    throw std::invalid_argument("ParticleSystem: array sizes do not match n");
  if (ps.attractive && !ps.free_space)
    throw std::invalid_argument(
        "ParticleSystem: attractive coupling exists only in free space");
}

std::string pair_text(int j, int k, double dist, double time) {
  return "particles " + std::to_string(j) + " and " + std::to_string(k) +
         " at distance " + std::to_string(dist) + " (time " +
         std::to_string(time) + ")";
}

struct ForcePass {
  std::vector<Vec3> force;
  double min_dist = std::numeric_limits<double>::infinity();
};

ForcePass force_pass(const ParticleSystem& ps) {
  check_shapes(ps);
  ForcePass out;
  out.force.assign(ps.positions.size(), Vec3{0.0, 0.0, 0.0});
  const double collapse = 1e-10 * ps.box_length;
  const double scale = (ps.attractive ? -1.0 : 1.0) / double(ps.n);
  for (int j = 0; j < ps.n; ++j)
    for (int k = j + 1; k < ps.n; ++k) {
      Vec3 d = {ps.positions[j][0] - ps.positions[k][0],
                ps.positions[j][1] - ps.positions[k][1],
                ps.positions[j][2] - ps.positions[k][2]};
      Vec3 g;
      double dist;
      if (ps.free_space) {
        dist = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        if (dist < collapse)
          throw std::runtime_error("mean_field_forces: near collision, " +
                                   pair_text(j, k, dist, ps.time));
        g = bare_gradient(d);
      } else {
        Folded f = fold_displacement(ps.box_length, d);
        dist = f.r * ps.box_length;
        if (dist < collapse)
          throw std::runtime_error("mean_field_forces: near collision, " +
                                   pair_text(j, k, dist, ps.time));
        double tab_grad[3], tab_val;
        table_value_gradient(f.s, tab_val, tab_grad);
        double img_grad[3];
        bare_images_gradient(f.s, img_grad);
        double inv_l2 = 1.0 / (ps.box_length * ps.box_length);
        for (int a = 0; a < 3; ++a)
          g[a] = f.sign[a] * (img_grad[a] + tab_grad[a]) * inv_l2;
      }
      if (dist < out.min_dist) out.min_dist = dist;
      // F_j = -(1/n) grad V(q_j - q_k); the mirrored pair contributes the
      // exact negation, so the pair's net momentum change is zero bitwise
      for (int a = 0; a < 3; ++a) {
        out.force[j][a] -= scale * g[a];
        out.force[k][a] += scale * g[a];
      }
    }
  return out;
}

double lattice_sum_potential(const ParticleSystem& ps) {
  // (1/n) sum_{j<k} V, the interaction part of the conserved energy
  const double sign = ps.attractive ? -1.0 : 1.0;
  double sum = 0.0;
  for (int j = 0; j < ps.n; ++j)
    for (int k = j + 1; k < ps.n; ++k) {
      Vec3 d = {ps.positions[j][0] - ps.positions[k][0],
                ps.positions[j][1] - ps.positions[k][1],
                ps.positions[j][2] - ps.positions[k][2]};
      if (ps.free_space) {
        sum += coulomb(d);
      } else {
        sum += pair_potential(ps.box_length, d);
      }
    }
  return sign * sum / double(ps.n);
}

// --- order-6 Lagrange interpolation -------------------------------------------
struct Stencil {
  int index[3][6];
  double weight[3][6];
  int count[3];
};

void lagrange_weights(double t, double w[6]) {
  // nodes -2..3 around the cell, degree-5 exactness
  static const double node[6] = {-2.0, -1.0, 0.0, 1.0, 2.0, 3.0};
  for (int m = 0; m < 6; ++m) {
    double num = 1.0, den = 1.0;
    for (int l = 0; l < 6; ++l) {
      if (l == m) continue;
      num *= t - node[l];
      den *= node[m] - node[l];
    }
    w[m] = num / den;
  }
}

Stencil build_stencil(const GridSpec& g, const Vec3& x) {
  Stencil st;
  const double h = g.spacing();
  for (int a = 0; a < 3; ++a) {
    if (a >= g.dim) {
      st.count[a] = 1;
      st.index[a][0] = 0;
      st.weight[a][0] = 1.0;
      continue;
    }
    if (!std::isfinite(x[a]))
      throw std::invalid_argument("interpolate: non-finite coordinate");
    double cell = x[a] / h;
    double base = std::floor(cell);
    double t = cell - base;
    long b = long(base) % g.n;
    if (b < 0) b += g.n;
    st.count[a] = 6;
    lagrange_weights(t, st.weight[a]);
    for (int m = 0; m < 6; ++m) {
      int idx = int((b + m - 2 + 2L * g.n) % g.n);
      st.index[a][m] = idx;
    }
  }
  return st;
}

double apply_stencil(const GridSpec& g, const std::vector<double>& values,
                     const Stencil& st) {
  double sum = 0.0;
  for (int i = 0; i < st.count[0]; ++i)
    for (int j = 0; j < st.count[1]; ++j) {
      double wij = st.weight[0][i] * st.weight[1][j];
      for (int k = 0; k < st.count[2]; ++k)
        sum += wij * st.weight[2][k] *
               values[flat_index(g, st.index[0][i], st.index[1][j], st.index[2][k])];
    }
  return sum;
}

// --- configuration functional helpers -----------------------------------------
void check_configuration_inputs(const ParticleSystem& ps, const ScalarField& rho) {
  check_shapes(ps);
  if (ps.free_space)
    throw std::invalid_argument(
        "configuration functionals need the periodic kernel; free_space systems "
        "have no matching density pairing");
  rho.grid.validate();
  if (rho.grid.dim != 3)
    throw std::invalid_argument("configuration functionals: rho must be 3-d");
  if (std::abs(rho.grid.box_length - ps.box_length) >
      1e-12 * ps.box_length)
    throw std::invalid_argument("configuration functionals: box lengths differ");
  double mass = rho.integral();
  if (std::abs(mass - 1.0) > 1e-6)
    throw std::invalid_argument(
        "configuration functionals: rho must integrate to 1, got " +
        std::to_string(mass));
}

double pair_sum_or_throw(const ParticleSystem& ps) {
  // sum_{j != k} V(x_j - x_k) = 2 sum_{j<k}; coincident pairs are singular
  const double collapse = 1e-10 * ps.box_length;
  double sum = 0.0;
  for (int j = 0; j < ps.n; ++j)
    for (int k = j + 1; k < ps.n; ++k) {
      Vec3 d = {ps.positions[j][0] - ps.positions[k][0],
                ps.positions[j][1] - ps.positions[k][1],
                ps.positions[j][2] - ps.positions[k][2]};
      Folded f = fold_displacement(ps.box_length, d);
      if (f.r * ps.box_length < collapse)
        throw std::runtime_error("configuration functionals: singular configuration, " +
                                 pair_text(j, k, f.r * ps.box_length, ps.time));
      sum += 2.0 * pair_potential(ps.box_length, d);
    }
  return sum;
}

double f_prime_pair_sum(const ParticleSystem& ps, const std::vector<Vec3>& u_at) {
  const double collapse = 1e-10 * ps.box_length;
  double sum = 0.0;
  for (int j = 0; j < ps.n; ++j)
    for (int k = j + 1; k < ps.n; ++k) {
      Vec3 d = {ps.positions[j][0] - ps.positions[k][0],
                ps.positions[j][1] - ps.positions[k][1],
                ps.positions[j][2] - ps.positions[k][2]};
      Folded f = fold_displacement(ps.box_length, d);
      if (f.r * ps.box_length < collapse)
        throw std::runtime_error("configuration functionals: singular configuration, " +
                                 pair_text(j, k, f.r * ps.box_length, ps.time));
      Vec3 g = pair_gradient(ps.box_length, d);
      double du[3] = {u_at[j][0] - u_at[k][0], u_at[j][1] - u_at[k][1],
                      u_at[j][2] - u_at[k][2]};
      sum += 2.0 * (du[0] * g[0] + du[1] * g[1] + du[2] * g[2]);
    }
  return sum;
}

double f_n_from_phi(const ParticleSystem& ps, const ScalarField& rho,
                    const ScalarField& phi) {
  double pair = pair_sum_or_throw(ps);
  double conv = 0.0;
  for (const Vec3& x : ps.positions) conv += interpolate_scalar(phi, x);
  double self = inner(rho, phi);
  double n = double(ps.n);
  return pair - 2.0 * n * conv + n * n * self;
}

double f_prime_from_phi(const ParticleSystem& ps, const ScalarField& rho,
                        const VectorField& u, const VectorField& grad_phi) {
  if (!(u.grid == rho.grid))
    throw std::invalid_argument("configuration functionals: u and rho grids differ");
  std::vector<Vec3> u_at(ps.positions.size());
  for (std::size_t j = 0; j < ps.positions.size(); ++j)
    u_at[j] = interpolate_vector(u, ps.positions[j]);

  double pair = f_prime_pair_sum(ps, u_at);

  // div(V * (u rho)) via one Poisson solve per component
  VectorField flux_potential(rho.grid);
  for (int c = 0; c < 3; ++c) {
    ScalarField m(rho.grid);
    for (std::size_t i = 0; i < m.values.size(); ++i)
      m.values[i] = rho.values[i] * u.comp[c][i];
    flux_potential.comp[c] = poisson_solve(m).values;
  }
  ScalarField div_flux = spectral_divergence(flux_potential);

  double middle = 0.0;
  for (std::size_t j = 0; j < ps.positions.size(); ++j) {
    Vec3 gp = interpolate_vector(grad_phi, ps.positions[j]);
    middle += u_at[j][0] * gp[0] + u_at[j][1] * gp[1] + u_at[j][2] * gp[2];
    middle -= interpolate_scalar(div_flux, ps.positions[j]);
  }

  double paired = 0.0;
  for (std::size_t i = 0; i < rho.values.size(); ++i)
    paired += rho.values[i] * (u.comp[0][i] * grad_phi.comp[0][i] +
                               u.comp[1][i] * grad_phi.comp[1][i] +
                               u.comp[2][i] * grad_phi.comp[2][i]);
  paired *= rho.grid.cell_volume();

  double n = double(ps.n);
  return pair - 2.0 * n * middle + 2.0 * n * n * paired;
}

}  // namespace

// --- ParticleSystem ----------------------------------------------------------
void ParticleSystem::validate() const {
  check_shapes(*this);
  for (const Vec3& p : positions)
    for (int a = 0; a < 3; ++a) {
      if (!std::isfinite(p[a]))
        throw std::invalid_argument("ParticleSystem: non-finite position");
      if (!free_space && (p[a] < 0.0 || p[a] >= box_length))
        throw std::invalid_argument("ParticleSystem: position outside the box");
    }
  for (const Vec3& v : velocities)
    for (int a = 0; a < 3; ++a)
      if (!std::isfinite(v[a]))
        throw std::invalid_argument("ParticleSystem: non-finite velocity");
  if (!std::isfinite(time))
    throw std::invalid_argument("ParticleSystem: non-finite time");
  if (n > 1 && !(min_pair_distance() > 0.0))
    throw std::invalid_argument("ParticleSystem: coincident positions");
}

double ParticleSystem::min_pair_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      Vec3 d = {positions[j][0] - positions[k][0],
                positions[j][1] - positions[k][1],
                positions[j][2] - positions[k][2]};
      double r;
      if (free_space) {
        r = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
      } else {
        r = fold_displacement(box_length, d).r * box_length;
      }
      if (r < best) best = r;
    }
  return best;
}

// --- pair kernel -------------------------------------------------------------
double pair_potential(double box_length, const Vec3& d) {
  if (!(box_length > 0.0))
    throw std::invalid_argument("pair_potential: box_length must be positive");
  Folded f = fold_displacement(box_length, d);
  return (bare_images_value(f.s) + table_value(f.s)) / box_length;
}

Vec3 pair_gradient(double box_length, const Vec3& d) {
  if (!(box_length > 0.0))
    throw std::invalid_argument("pair_gradient: box_length must be positive");
  Folded f = fold_displacement(box_length, d);
  double tab_val, tab_grad[3], img_grad[3];
  table_value_gradient(f.s, tab_val, tab_grad);
  bare_images_gradient(f.s, img_grad);
  double inv_l2 = 1.0 / (box_length * box_length);
  return {f.sign[0] * (img_grad[0] + tab_grad[0]) * inv_l2,
          f.sign[1] * (img_grad[1] + tab_grad[1]) * inv_l2,
          f.sign[2] * (img_grad[2] + tab_grad[2]) * inv_l2};
}

// --- forces and stepping -----------------------------------------------------
std::vector<Vec3> mean_field_forces(const ParticleSystem& ps) {
  return force_pass(ps).force;
}

void nbody_step(ParticleSystem& ps, double dt, const StepGuard& guard) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("nbody_step: dt must be positive and finite");
  if (!ps.force_cache_valid) {
    ForcePass pass = force_pass(ps);
    ps.force_cache = std::move(pass.force);
    ps.min_distance_cache = pass.min_dist;
    ps.force_cache_valid = true;
  }
  double c = guard.collision_c < 0.0 ? std::sqrt(kFourPi * double(ps.n))
                                     : guard.collision_c;
  double limit = guard.dt_max;
  if (ps.n > 1)
    limit = std::min(limit, c * std::pow(ps.min_distance_cache, 1.5));
  if (dt > limit * (1.0 + 1e-12))
    throw std::invalid_argument("nbody_step: dt " + std::to_string(dt) +
                                " exceeds the step guard " + std::to_string(limit));

  const double half = 0.5 * dt;
  ps.force_cache_valid = false;  // invalid while positions are mid-update
  for (int j = 0; j < ps.n; ++j)
    for (int a = 0; a < 3; ++a) {
      double x = ps.positions[j][a] +
                 dt * (ps.velocities[j][a] + half * ps.force_cache[j][a]);
      if (!ps.free_space) x -= ps.box_length * std::floor(x / ps.box_length);
      ps.positions[j][a] = x;
    }
  ForcePass after = force_pass(ps);
  for (int j = 0; j < ps.n; ++j)
    for (int a = 0; a < 3; ++a)
      ps.velocities[j][a] += half * (ps.force_cache[j][a] + after.force[j][a]);
  ps.force_cache = std::move(after.force);
  ps.min_distance_cache = after.min_dist;
  ps.force_cache_valid = true;
  ps.time += dt;
}

double classical_energy(const ParticleSystem& ps) {
  check_shapes(ps);
  double kinetic = 0.0;
  for (const Vec3& v : ps.velocities)
    kinetic += 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return kinetic + lattice_sum_potential(ps);
}

// --- configuration functionals ----------------------------------------------
double configuration_f_n(const ParticleSystem& ps, const ScalarField& rho) {
  check_configuration_inputs(ps, rho);
  ScalarField phi = poisson_solve(rho);
  return f_n_from_phi(ps, rho, phi);
}

double configuration_f_prime_n(const ParticleSystem& ps, const ScalarField& rho,
                               const VectorField& u) {
  check_configuration_inputs(ps, rho);
  ScalarField phi = poisson_solve(rho);
  VectorField grad_phi = spectral_gradient(phi);
  return f_prime_from_phi(ps, rho, u, grad_phi);
}

ConfigurationEnergy configuration_energy(const ParticleSystem& ps,
                                         const ScalarField& rho,
                                         const VectorField& u) {
  check_configuration_inputs(ps, rho);
  ScalarField phi = poisson_solve(rho);
  VectorField grad_phi = spectral_gradient(phi);

  ConfigurationEnergy out;
  out.f_n = f_n_from_phi(ps, rho, phi);
  out.f_prime_n = f_prime_from_phi(ps, rho, u, grad_phi);

  double kin = 0.0;
  for (std::size_t j = 0; j < ps.positions.size(); ++j) {
    Vec3 uj = interpolate_vector(u, ps.positions[j]);
    double dx = ps.velocities[j][0] - uj[0];
    double dy = ps.velocities[j][1] - uj[1];
    double dz = ps.velocities[j][2] - uj[2];
    kin += dx * dx + dy * dy + dz * dz;
  }
  out.kinetic_modulated = kin / double(ps.n);
  out.total_modulated_per_particle =
      out.kinetic_modulated + out.f_n / (double(ps.n) * double(ps.n));
  out.f_n_negative_part = std::max(0.0, -out.f_n);
  return out;
}

// --- off-grid evaluation -----------------------------------------------------
double interpolate_scalar(const ScalarField& f, const Vec3& x) {
  if (f.values.size() != f.grid.cell_count())
    throw std::invalid_argument("interpolate_scalar: field size mismatch");
  Stencil st = build_stencil(f.grid, x);
  return apply_stencil(f.grid, f.values, st);
}

Vec3 interpolate_vector(const VectorField& f, const Vec3& x) {
  Stencil st = build_stencil(f.grid, x);
  Vec3 out = {0.0, 0.0, 0.0};
  for (int c = 0; c < f.grid.dim; ++c) {
    if (f.comp[c].size() != f.grid.cell_count())
      throw std::invalid_argument("interpolate_vector: field size mismatch");
    out[c] = apply_stencil(f.grid, f.comp[c], st);
  }
  return out;
}

// --- sampling ----------------------------------------------------------------
namespace {

// F(t) = f0 t + (f1 - f0) t^2 / 2 inverted on [0,1] for tau in [0, (f0+f1)/2];
// conjugate form avoids cancellation for any sign of f1 - f0.
double invert_linear_cell(double f0, double f1, double tau) {
  double disc = f0 * f0 + 2.0 * (f1 - f0) * tau;
  double den = f0 + std::sqrt(std::max(disc, 0.0));
  if (den <= 0.0) return 0.5;  // only reachable for an all-zero cell
  double t = 2.0 * tau / den;
  return std::min(std::max(t, 0.0), 1.0 - 1e-16);
}

// Cell masses of a periodic piecewise-linear node density, then one draw.
double draw_axis(const std::vector<double>& nodes, double pick, int& cell,
                 double& frac) {
  int n = int(nodes.size());
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += 0.5 * (nodes[i] + nodes[(i + 1) % n]);
  double tau = pick * total;
  double cum = 0.0;
  cell = n - 1;
  for (int i = 0; i < n; ++i) {
    double mass = 0.5 * (nodes[i] + nodes[(i + 1) % n]);
    if (tau < cum + mass || i == n - 1) {
      cell = i;
      tau -= cum;
      break;
    }
    cum += mass;
  }
  frac = invert_linear_cell(nodes[cell], nodes[(cell + 1) % n],
                            std::min(tau, 0.5 * (nodes[cell] + nodes[(cell + 1) % n])));
  return total;
}

}  // namespace

DensitySampler::DensitySampler(const ScalarField& rho) : grid_(rho.grid) {
  grid_.validate();
  if (rho.values.size() != grid_.cell_count())
    throw std::invalid_argument("DensitySampler: field size mismatch");
  double total = 0.0;
  for (double v : rho.values) {
    if (!(v >= 0.0))
      throw std::invalid_argument("DensitySampler: density has negative nodes");
    total += v;
  }
  if (!(total > 0.0))
    throw std::invalid_argument("DensitySampler: density has zero mass");

  values_ = rho.values;
  const int n = grid_.n;
  marginal_x_.assign(n, 0.0);
  if (grid_.dim == 3) marginal_xy_.assign(std::size_t(n) * n, 0.0);
  for (std::size_t flat = 0; flat < rho.values.size(); ++flat) {
    std::array<int, 3> idx = axis_indices(grid_, flat);
    marginal_x_[idx[0]] += rho.values[flat];
    if (grid_.dim == 3)
      marginal_xy_[std::size_t(idx[0]) * n + idx[1]] += rho.values[flat];
  }
}

Vec3 DensitySampler::draw(Rng& rng) const {
  const int n = grid_.n;
  const double h = grid_.spacing();
  Vec3 out = {0.0, 0.0, 0.0};

  int ix;
  double tx;
  draw_axis(marginal_x_, rng.next_double(), ix, tx);
  out[0] = h * (ix + tx);
  if (grid_.dim == 1) return out;

  const int ix1 = (ix + 1) % n;
  std::vector<double> nodes(n);
  if (grid_.dim == 2) {
    for (int j = 0; j < n; ++j)
      nodes[j] = (1.0 - tx) * values_[flat_index(grid_, ix, j, 0)] +
                 tx * values_[flat_index(grid_, ix1, j, 0)];
  } else {
    for (int j = 0; j < n; ++j)
      nodes[j] = (1.0 - tx) * marginal_xy_[std::size_t(ix) * n + j] +
                 tx * marginal_xy_[std::size_t(ix1) * n + j];
  }
  int iy;
  double ty;
  draw_axis(nodes, rng.next_double(), iy, ty);
  out[1] = h * (iy + ty);
  if (grid_.dim == 2) return out;

  const int iy1 = (iy + 1) % n;
  const double w00 = (1.0 - tx) * (1.0 - ty), w01 = (1.0 - tx) * ty;
  const double w10 = tx * (1.0 - ty), w11 = tx * ty;
  for (int k = 0; k < n; ++k)
    nodes[k] = w00 * values_[flat_index(grid_, ix, iy, k)] +
               w01 * values_[flat_index(grid_, ix, iy1, k)] +
               w10 * values_[flat_index(grid_, ix1, iy, k)] +
               w11 * values_[flat_index(grid_, ix1, iy1, k)];
  int iz;
  double tz;
  draw_axis(nodes, rng.next_double(), iz, tz);
  out[2] = h * (iz + tz);
  return out;
}

std::vector<Vec3> sample_positions(const ScalarField& rho, int count, Rng& rng) {
  if (count < 0) throw std::invalid_argument("sample_positions: negative count");
  DensitySampler sampler(rho);
  std::vector<Vec3> out;
  out.reserve(std::size_t(count));
  for (int i = 0; i < count; ++i) out.push_back(sampler.draw(rng));
  return out;
}

// --- scaling diagnostics -----------------------------------------------------
SerfatyReport serfaty_diagnostics(const std::vector<SerfatySample>& samples) {
  if (samples.empty())
    throw std::invalid_argument("serfaty_diagnostics: no samples");
  std::vector<int> ns;
  for (const SerfatySample& s : samples) {
    if (s.n < 1) throw std::invalid_argument("serfaty_diagnostics: n must be >= 1");
    if (!std::isfinite(s.f_n) || !std::isfinite(s.f_prime_n) ||
        !std::isfinite(s.grad_u_inf) || s.grad_u_inf < 0.0)
      throw std::invalid_argument("serfaty_diagnostics: non-finite sample");
    ns.push_back(s.n);
  }
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  if (ns.size() < 3)
    throw std::invalid_argument(
        "serfaty_diagnostics: need at least 3 distinct particle counts");
  if (double(ns.back()) < 10.0 * double(ns.front()) * (1.0 - 1e-12))
    throw std::invalid_argument(
        "serfaty_diagnostics: particle counts must span at least one decade");

  SerfatyReport report;
  report.n_values = ns;

  std::vector<double> ratios;
  for (const SerfatySample& s : samples)
    if (s.f_n > 0.0 && s.grad_u_inf > 0.0)
      ratios.push_back(std::abs(s.f_prime_n) / (s.grad_u_inf * s.f_n));
  if (!ratios.empty()) {
    std::sort(ratios.begin(), ratios.end());
    std::size_t idx = std::size_t(std::ceil(0.9 * double(ratios.size())));
    report.c_fit = ratios[std::min(idx == 0 ? 0 : idx - 1, ratios.size() - 1)];
  }

  report.max_abs_f_prime.assign(ns.size(), 0.0);
  report.max_negative_part.assign(ns.size(), 0.0);
  std::vector<double> max_residual(ns.size(), 0.0);
  for (const SerfatySample& s : samples) {
    std::size_t slot =
        std::size_t(std::lower_bound(ns.begin(), ns.end(), s.n) - ns.begin());
    double neg = std::max(0.0, -s.f_n);
    double res = std::max(0.0, std::abs(s.f_prime_n) -
                                   report.c_fit * s.grad_u_inf * s.f_n);
    report.max_abs_f_prime[slot] =
        std::max(report.max_abs_f_prime[slot], std::abs(s.f_prime_n));
    report.max_negative_part[slot] = std::max(report.max_negative_part[slot], neg);
    max_residual[slot] = std::max(max_residual[slot], res);
  }

  auto fit_exponent = [&](const std::vector<double>& maxima, double& slope,
                          bool& defined) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < ns.size(); ++i)
      if (maxima[i] > 0.0) {
        lx.push_back(std::log(double(ns[i])));
        ly.push_back(std::log(maxima[i]));
      }
    if (lx.size() < 3) {
      slope = std::numeric_limits<double>::quiet_NaN();
      defined = false;
      return;
    }
    slope = fit_line(lx, ly).slope;
    defined = true;
  };
  fit_exponent(report.max_negative_part, report.exponent_a, report.a_defined);
  fit_exponent(max_residual, report.exponent_b, report.b_defined);
  report.a_within_bound =
      !report.a_defined || report.exponent_a <= 4.0 / 3.0 + 0.15;
  report.b_within_bound =
      !report.b_defined || report.exponent_b <= 5.0 / 3.0 + 0.15;
  return report;
}

}  // namespace mflab
