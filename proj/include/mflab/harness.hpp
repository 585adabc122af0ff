#pragma once
// Orchestration: wave and fluid runs from configured initial data, coupled
// wave/fluid comparisons, particle-versus-fluid comparisons, parameter
// sweeps with deterministic seeding and worker-pool parallelism, CSV and
// report persistence, and small text formats for saved states.
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "mflab/config.hpp"
#include "mflab/ensemble.hpp"
#include "mflab/euler_poisson.hpp"
#include "mflab/grid.hpp"
#include "mflab/modulated.hpp"

namespace mflab {

inline constexpr const char* kLabVersion = "1.0.0";

// One run's sampled diagnostics. Column order is fixed per run kind and
// documented in the README; rows[i] aligns with columns. A truncated series
// kept every sample recorded before the stop and carries the stop time.
struct DiagnosticSeries {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  bool truncated = false;
  double horizon_time = std::numeric_limits<double>::quiet_NaN();
  std::string note;

  int column(const std::string& name) const;  // invalid_argument when absent
  std::vector<double> column_values(const std::string& name) const;
};

// Wave run alone: time, mass, kinetic, potential, total, continuity_residual.
// final_state, when given, receives the wave field where the run stopped.
DiagnosticSeries run_hartree(const ExperimentConfig& cfg, double hbar,
                             WaveField* final_state = nullptr);

// Fluid run alone: time, mass, momentum_x/y/z, energy, grad_u_inf,
// laplacian_div_u_inf, blown_up. final_state as above.
DiagnosticSeries run_fluid(const ExperimentConfig& cfg,
                           FluidState* final_state = nullptr);

// Wave and fluid evolved side by side from matched data (wave starts as
// sqrt(rho_in) e^{i phase / hbar}): time, g_total, g_kinetic, g_potential,
// continuity_residual, wave_mass, wave_energy, fluid_energy, grad_u_inf,
// monokinetic_concentration (1-d grids, else nan), envelope (the monitored
// exponential from the first g_total value and the configured growth rate).
DiagnosticSeries run_coupled(const ExperimentConfig& cfg, double hbar);

// Particles sampled from rho_in with velocities u_in (one draw index per
// independent sampling), evolved against the fluid: time, classical_energy,
// kinetic_modulated, f_n_over_n2, total_modulated_per_particle,
// min_pair_distance, f_n, f_prime_n, grad_u_inf, then one column per battery
// test function. Needs a 3-d grid. Density-coupled columns are nan in
// free-space mode.
DiagnosticSeries run_nbody_vs_fluid(const ExperimentConfig& cfg, int n_particles,
                                    int draw);

// Fixed battery of smooth test functions for the weak-seminorm proxy:
// three low-order trigonometric modes and two periodized Gaussian bumps.
std::vector<std::string> battery_names();
// |<empirical measure - rho, phi_m>| per battery member; the empirical side
// is evaluated analytically at the particle positions, the field side by
// grid quadrature.
std::vector<double> battery_values(const std::vector<Vec3>& positions,
                                   const ScalarField& rho);

// Envelope check for a coupled series: g_total against its first value grown
// at the given exponential rate.
GronwallCheck coupled_envelope_check(const DiagnosticSeries& series,
                                     double growth_rate);

struct RateFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double r_squared = std::numeric_limits<double>::quiet_NaN();
  // raw parameter range the fit covers; conclusions do not extrapolate
  double x_min = std::numeric_limits<double>::quiet_NaN();
  double x_max = std::numeric_limits<double>::quiet_NaN();
  int points = 0;
  bool defined = false;
};

struct SweepRun {
  std::string id;      // file stem of the per-run CSV
  std::string kind;    // "coupled" or "nbody"
  double parameter;    // hbar or particle count
  int draw = 0;
  DiagnosticSeries series;
  bool failed = false;
  std::string failure;
};

struct SweepResult {
  std::vector<SweepRun> runs;

  struct SummaryRow {
    std::string kind;
    double parameter;
    std::string diagnostic;
    double value;
  };
  std::vector<SummaryRow> summary;

  // log-log fits of terminal (or stated) diagnostics against the sweep
  // parameter, keyed by diagnostic name
  std::map<std::string, RateFit> fitted_rates;

  SerfatyReport serfaty;
  bool serfaty_defined = false;

  std::vector<std::string> failure_ledger;  // "run id: reason" per failure
};

// Runs every coupled run (one per hbar) and every particle run (draws_per_n
// per particle count) on the worker pool; aggregation is order-independent
// and bitwise identical to serial execution. Requires at least 3 values on
// each sweep axis. Child failures land in the ledger, never propagate.
SweepResult sweep(const ExperimentConfig& cfg);

// CSV with metadata columns (run_id, version, config_hash) on every row.
std::string series_csv_text(const ExperimentConfig& cfg, const SweepRun& run);
std::string summary_csv_text(const ExperimentConfig& cfg, const SweepResult& r);
std::string report_text(const ExperimentConfig& cfg, const SweepResult& r);

// Creates output_dir, writes one CSV per run plus summary.csv, report.txt
// and config.ini (the canonical text the hash covers).
void write_sweep_outputs(const ExperimentConfig& cfg, const SweepResult& r);

// Plain-text state files (full precision, round-tripping).
void write_wave_field(const std::string& path, const WaveField& psi);
WaveField read_wave_field(const std::string& path);
void write_fluid_state(const std::string& path, const FluidState& s);
FluidState read_fluid_state(const std::string& path);

}  // namespace mflab
