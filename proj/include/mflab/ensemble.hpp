#pragma once
// Classical N-particle dynamics with mean-field-scaled Coulomb coupling on
// the periodic box, plus the configuration functionals that compare an
// empirical measure against a fluid density. The pair interaction is the
// zero-mean Green function of -Laplacian on the torus, so particle sums,
// grid convolutions and spectral pairings all share one kernel.
#include <array>
#include <cstdint>
#include <vector>

#include "mflab/grid.hpp"
#include "mflab/util.hpp"

namespace mflab {

using Vec3 = std::array<double, 3>;

struct ParticleSystem {
  int n = 0;
  double box_length = 1.0;
  // Drop the periodic images and use the bare 1/(4 pi r) kernel. Closed-form
  // oracles (two-body orbits, inverse-square law) live in this mode; the
  // configuration functionals refuse it.
  bool free_space = false;
  // Flip the interaction sign (gravitating pair instead of repelling charges).
  // Only meaningful with free_space; validate() rejects the combination with
  // periodic images.
  bool attractive = false;
  double time = 0.0;
  std::uint64_t seed = 0;
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;

  // Forces at the current positions, kept by nbody_step so consecutive steps
  // pay one force pass each. Any manual edit of positions or mode flags must
  // clear force_cache_valid.
  std::vector<Vec3> force_cache;
  double min_distance_cache = 0.0;
  bool force_cache_valid = false;

  // Checks: 1 <= n <= 4096 with matching array sizes, finite data,
  // coordinates inside [0, box_length) unless free_space, pairwise distinct
  // positions, and the attractive/free_space coupling rule above.
  void validate() const;

  // Smallest pairwise distance (minimum-image metric unless free_space).
  double min_pair_distance() const;
};

// --- pair kernel -------------------------------------------------------------
// Zero-mean periodic Coulomb kernel: Fourier coefficients 1/|k|^2 over k != 0,
// the same multiplier poisson_solve applies on the grid. Evaluated as the 27
// nearest bare images plus a smooth tabulated remainder, so values hold at
// arbitrary points, not just grid nodes. The displacement is folded to its
// minimum image internally; the kernel is exactly even and its gradient
// exactly odd under d -> -d.
double pair_potential(double box_length, const Vec3& d);
Vec3 pair_gradient(double box_length, const Vec3& d);

// --- forces and stepping -----------------------------------------------------
// F_j = -(1/n) sum_{k != j} grad V(q_j - q_k). Each unordered pair is
// evaluated once and applied with opposite signs, so Newton's third law holds
// bitwise and the total force vanishes to round-off.
// Errors: any pair distance below 1e-10 * box_length -> std::runtime_error
// naming the pair (near collision).
std::vector<Vec3> mean_field_forces(const ParticleSystem& ps);

struct StepGuard {
  double dt_max = 0.05;
  // Scale for the close-encounter limit dt <= c * min_pair_distance^(3/2).
  // Negative means the free-fall default sqrt(4 pi n).
  double collision_c = -1.0;
};

// One velocity-Verlet step. Throws std::invalid_argument when dt exceeds
// min(dt_max, c * min_pair_distance^(3/2)) at the current positions, and
// std::runtime_error when either force pass detects a near collision.
// Periodic positions are wrapped back into [0, box_length).
void nbody_step(ParticleSystem& ps, double dt, const StepGuard& guard = {});

// sum_j |v_j|^2 / 2 + (1/n) sum_{j<k} V(q_j - q_k); the conserved quantity of
// the mean-field scaling.
double classical_energy(const ParticleSystem& ps);

// --- configuration functionals ----------------------------------------------
// F_N = sum_{j != k} V(x_j - x_k) - 2 N sum_j (V * rho)(x_j) + N^2 <rho, V * rho>.
// Off-diagonal pair sum exact via the pair kernel; (V * rho) by grid Poisson
// solve sampled with order-6 interpolation; the double integral spectrally.
// rho must be a probability density on the matching box. Errors: free_space
// systems, mismatched boxes, rho not normalized -> std::invalid_argument;
// coincident particles -> std::runtime_error (singular configuration).
double configuration_f_n(const ParticleSystem& ps, const ScalarField& rho);

// Same three-term structure with kernel (u(x) - u(y)) . grad V(x - y):
// sum_{j != k} (u_j - u_k) . grad V(x_j - x_k)
//   - 2 N sum_j [ u(x_j) . grad(V * rho)(x_j) - div(V * (u rho))(x_j) ]
//   + 2 N^2 <rho u, grad(V * rho)>.
// Identically zero for constant u.
double configuration_f_prime_n(const ParticleSystem& ps, const ScalarField& rho,
                               const VectorField& u);

struct ConfigurationEnergy {
  double f_n = 0.0;
  double f_prime_n = 0.0;
  // (1/n) sum_j |v_j - u(x_j)|^2, the particle-side modulated kinetic term.
  double kinetic_modulated = 0.0;
  // kinetic_modulated + f_n / n^2
  double total_modulated_per_particle = 0.0;
  // max(0, -f_n): how far the configuration dips below zero.
  double f_n_negative_part = 0.0;
};

// Bundles the functionals above over shared Poisson solves.
ConfigurationEnergy configuration_energy(const ParticleSystem& ps,
                                         const ScalarField& rho,
                                         const VectorField& u);

// --- off-grid evaluation -----------------------------------------------------
// Order-6 tensor-product Lagrange interpolation of periodic grid data.
// Coordinates may be any finite values; they wrap periodically.
double interpolate_scalar(const ScalarField& f, const Vec3& x);
Vec3 interpolate_vector(const VectorField& f, const Vec3& x);

// --- sampling ----------------------------------------------------------------
// Draws positions iid from the piecewise-(multi)linear interpolant of a
// nonnegative grid density: exact inverse-CDF per axis through the
// conditional decomposition, no rejection, no accept loops. Construction
// costs one pass over the grid; draws cost O(n) each.
// Errors: negative nodes or zero total mass -> std::invalid_argument.
class DensitySampler {
 public:
  explicit DensitySampler(const ScalarField& rho);
  Vec3 draw(Rng& rng) const;

 private:
  GridSpec grid_;
  std::vector<double> marginal_x_;   // node sums over the trailing axes
  std::vector<double> marginal_xy_;  // dim 3 only: node sums over z
  std::vector<double> values_;       // node density, kept for the conditionals
};

std::vector<Vec3> sample_positions(const ScalarField& rho, int count, Rng& rng);

// --- scaling diagnostics -----------------------------------------------------
struct SerfatySample {
  int n = 0;
  double f_n = 0.0;
  double f_prime_n = 0.0;
  double grad_u_inf = 0.0;  // sup norm of the velocity gradient for this run
};

struct SerfatyReport {
  std::vector<int> n_values;               // ascending
  std::vector<double> max_abs_f_prime;     // per n, max over samples
  std::vector<double> max_negative_part;   // per n, max over samples of (F_N)_-
  // c_fit: 90th percentile of |F'_N| / (grad_u_inf * F_N) over samples with
  // F_N > 0; zero when no such sample exists.
  double c_fit = 0.0;
  // Log-log slopes of max_negative_part ~ N^a and of the positive residual
  // max(0, |F'_N| - c_fit * grad_u_inf * F_N) ~ N^b. A slope is undefined
  // (NaN, defined flag false) when fewer than 3 of the per-n maxima are
  // positive.
  double exponent_a = 0.0;
  double exponent_b = 0.0;
  bool a_defined = false;
  bool b_defined = false;
  // Defined exponents compared against 4/3 + 0.15 and 5/3 + 0.15; an
  // undefined exponent passes vacuously.
  bool a_within_bound = true;
  bool b_within_bound = true;
};

// Pre: samples cover >= 3 distinct n spanning at least one decade
// (max/min >= 10), all entries finite; otherwise std::invalid_argument.
SerfatyReport serfaty_diagnostics(const std::vector<SerfatySample>& samples);

}  // namespace mflab
