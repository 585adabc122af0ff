#include "mflab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mflab/hartree.hpp"
#include "mflab/phase_space.hpp"
#include "mflab/profiles.hpp"
#include "mflab/util.hpp"

namespace mflab {

namespace {

constexpr double kPi = 3.14159265358979323846264338328;
const double kNan = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

long long step_count(const ExperimentConfig& cfg) {
  long long steps = std::llround(cfg.t_final / cfg.dt);
  return steps < 1 ? 1 : steps;
}

bool sample_step(const ExperimentConfig& cfg, long long step, long long steps) {
  return step % cfg.sample_every == 0 || step == steps;
}

struct InitialData {
  ScalarField rho;
  ScalarField phase;
  VectorField u;
};

InitialData initial_data(const ExperimentConfig& cfg) {
  InitialData d;
  d.rho = build_density(cfg.grid, cfg.initial_density);
  d.phase = build_phase(cfg.grid, cfg.initial_phase);
  d.u = phase_velocity(cfg.grid, cfg.initial_phase);
  return d;
}

// one periodized gaussian axis factor, sup-normalized
double pg_axis(double x, double c, double w, double L) {
  double sum = 0.0;
  for (int j = -2; j <= 2; ++j) {
    double z = x - c - j * L;
    sum += std::exp(-0.5 * z * z / (w * w));
  }
  return sum;
}

struct Battery {
  std::vector<std::string> names;
  std::vector<std::function<double(const Vec3&)>> eval;
  std::vector<ScalarField> fields;  // eval sampled on the grid
};

Battery make_battery(const GridSpec& g, bool with_fields = true) {
  if (g.dim != 3)
    throw std::invalid_argument("battery_values: needs a 3-d grid");
  const double L = g.box_length;
  const double k1 = 2.0 * kPi / L;
  Battery b;
  b.names = {"trig_x", "trig_y", "trig_diag", "bump_center", "bump_offset"};
  b.eval.push_back([k1](const Vec3& x) { return std::cos(k1 * x[0]); });
  b.eval.push_back([k1](const Vec3& x) { return std::sin(k1 * x[1]); });
  b.eval.push_back(
      [k1](const Vec3& x) { return std::cos(k1 * (x[0] + x[1] + x[2])); });
  b.eval.push_back([L](const Vec3& x) {
    return pg_axis(x[0], 0.5 * L, L / 8.0, L) * pg_axis(x[1], 0.5 * L, L / 8.0, L) *
           pg_axis(x[2], 0.5 * L, L / 8.0, L);
  });
  b.eval.push_back([L](const Vec3& x) {
    return pg_axis(x[0], 0.25 * L, L / 6.0, L) *
           pg_axis(x[1], 0.375 * L, L / 6.0, L) *
           pg_axis(x[2], 0.625 * L, L / 6.0, L);
  });
  if (with_fields) {
    for (const auto& f : b.eval) {
      ScalarField field(g);
      for (std::size_t flat = 0; flat < field.values.size(); ++flat) {
        std::array<double, 3> p = grid_point(g, flat);
        field.values[flat] = f({p[0], p[1], p[2]});
      }
      b.fields.push_back(std::move(field));
    }
  }
  return b;
}

std::vector<double> battery_gaps(const Battery& b,
                                 const std::vector<Vec3>& positions,
                                 const ScalarField& rho) {
  if (!(rho.grid == b.fields.front().grid))
    throw std::invalid_argument("battery_values: rho grid mismatch");
  std::vector<double> out;
  for (std::size_t m = 0; m < b.eval.size(); ++m) {
    double emp = 0.0;
    for (const Vec3& x : positions) emp += b.eval[m](x);
    emp /= double(positions.size());
    out.push_back(std::abs(emp - inner(b.fields[m], rho)));
  }
  return out;
}

}  // namespace

int DiagnosticSeries::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return int(i);
  throw std::invalid_argument("series has no column '" + name + "'");
}

std::vector<double> DiagnosticSeries::column_values(const std::string& name) const {
  int c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[std::size_t(c)]);
  return out;
}

DiagnosticSeries run_hartree(const ExperimentConfig& cfg, double hbar,
                             WaveField* final_state) {
  cfg.validate();
  if (!(hbar > 0.0) || !std::isfinite(hbar))
    throw std::invalid_argument("run_hartree: hbar must be positive");
  InitialData in = initial_data(cfg);
  HartreeState hs(wkb_initializer(in.rho, in.phase, hbar));
  hs.refresh_half_kick = cfg.self_consistent_halves;

  DiagnosticSeries out;
  out.columns = {"time", "mass", "kinetic", "potential", "total",
                 "continuity_residual"};
  auto record = [&out, &hs](double resid) {
    HartreeEnergy e = hartree_energy(hs);
    double mass = hs.psi.norm_l2();
    mass *= mass;
    out.rows.push_back({hs.time, mass, e.kinetic, e.potential, e.total, resid});
  };
  record(kNan);

  const long long steps = step_count(cfg);
  for (long long step = 1; step <= steps; ++step) {
    const bool sampling = sample_step(cfg, step, steps);
    HartreeState prev = hs;
    try {
      hartree_step(hs, cfg.dt);
    } catch (const std::runtime_error& e) {
      out.truncated = true;
      out.horizon_time = hs.time;
      out.note = e.what();
      break;
    }
    if (sampling) record(continuity_residual(prev, hs, cfg.dt));
  }
  if (final_state) *final_state = hs.psi;
  return out;
}

DiagnosticSeries run_fluid(const ExperimentConfig& cfg,
                           FluidState* final_state) {
  cfg.validate();
  InitialData in = initial_data(cfg);
  FluidState fs(in.rho, in.u);

  DiagnosticSeries out;
  out.columns = {"time",   "mass",        "momentum_x",
                 "momentum_y", "momentum_z", "energy",
                 "grad_u_inf", "laplacian_div_u_inf", "blown_up"};
  auto record = [&out, &fs]() {
    FluidEnergy e = fluid_energy(fs);
    std::array<double, 3> mom = fluid_momentum(fs);
    RegularityReport rr = regularity_report(fs);
    out.rows.push_back({fs.time, fs.rho.integral(), mom[0], mom[1], mom[2],
                        e.total, rr.grad_u_inf, rr.laplacian_div_u_inf,
                        fs.blown_up ? 1.0 : 0.0});
  };
  record();

  const long long steps = step_count(cfg);
  for (long long step = 1; step <= steps; ++step) {
    try {
      euler_poisson_step(fs, cfg.dt);
    } catch (const std::invalid_argument& e) {
      out.truncated = true;
      out.horizon_time = fs.time;
      out.note = e.what();
      break;
    }
    if (fs.blown_up) {
      record();
      out.truncated = true;
      out.horizon_time = fs.time;
      out.note = "fluid blow-up";
      break;
    }
    if (sample_step(cfg, step, steps)) record();
  }
  if (final_state) *final_state = fs;
  return out;
}

DiagnosticSeries run_coupled(const ExperimentConfig& cfg, double hbar) {
  cfg.validate();
  if (!(hbar > 0.0) || !std::isfinite(hbar))
    throw std::invalid_argument("run_coupled: hbar must be positive");
  InitialData in = initial_data(cfg);
  HartreeState hs(wkb_initializer(in.rho, in.phase, hbar));
  hs.refresh_half_kick = cfg.self_consistent_halves;
  FluidState fs(in.rho, in.u);
  const GridSpec& g = cfg.grid;

  DiagnosticSeries out;
  out.columns = {"time",       "g_total",     "g_kinetic",
                 "g_potential", "continuity_residual", "wave_mass",
                 "wave_energy", "fluid_energy", "grad_u_inf",
                 "monokinetic_concentration", "envelope"};
  double g0 = kNan;
  auto record = [&](double resid) {
    double gk = kinetic_modulated(hs.psi, fs.u);
    double gp = potential_gap(density(hs.psi), fs.rho);
    double gt = gk + gp;
    if (std::isnan(g0)) g0 = gt;
    double mono = kNan;
    if (g.dim == 1) {
      const double xi_max = hbar * kPi * g.n / g.box_length;
      PhaseSpaceField w = wigner_transform(hs.psi, g.n, xi_max);
      mono = monokinetic_concentration(w, fs.u.comp[0]);
    }
    double mass = hs.psi.norm_l2();
    mass *= mass;
    out.rows.push_back({hs.time, gt, gk, gp, resid, mass,
                        hartree_energy(hs).total, fluid_energy(fs).total,
                        regularity_report(fs).grad_u_inf, mono,
                        g0 * std::exp(cfg.gronwall_c * hs.time)});
  };
  record(kNan);

  const long long steps = step_count(cfg);
  for (long long step = 1; step <= steps; ++step) {
    const bool sampling = sample_step(cfg, step, steps);
    HartreeState prev = hs;
    try {
      hartree_step(hs, cfg.dt);
      euler_poisson_step(fs, cfg.dt);
    } catch (const std::exception& e) {
      out.truncated = true;
      out.horizon_time = std::min(hs.time, fs.time);
      out.note = e.what();
      break;
    }
    if (fs.blown_up) {
      out.truncated = true;
      out.horizon_time = fs.time;
      out.note = "fluid blow-up";
      break;
    }
    if (sampling) record(continuity_residual(prev, hs, cfg.dt));
  }
  return out;
}

DiagnosticSeries run_nbody_vs_fluid(const ExperimentConfig& cfg, int n_particles,
                                    int draw) {
  cfg.validate();
  if (cfg.grid.dim != 3)
    throw std::invalid_argument("run_nbody_vs_fluid: needs a 3-d grid");
  if (draw < 0) throw std::invalid_argument("run_nbody_vs_fluid: draw must be >= 0");
  StepGuard guard;
  if (cfg.dt > guard.dt_max)
    throw std::invalid_argument(
        "run_nbody_vs_fluid: dt exceeds the particle step cap");

  InitialData in = initial_data(cfg);
  Rng rng = Rng(cfg.seed).fork(fnv1a64("nbody")).fork(std::uint64_t(n_particles))
                .fork(std::uint64_t(draw));
  ParticleSystem ps;
  ps.n = n_particles;
  ps.box_length = cfg.grid.box_length;
  ps.free_space = cfg.free_space_images;
  ps.seed = cfg.seed;
  ps.positions = sample_positions(in.rho, n_particles, rng);
  ps.velocities.resize(ps.positions.size());
  for (std::size_t j = 0; j < ps.positions.size(); ++j)
    ps.velocities[j] = interpolate_vector(in.u, ps.positions[j]);
  ps.validate();

  FluidState fs(in.rho, in.u);
  Battery battery = make_battery(cfg.grid);

  DiagnosticSeries out;
  out.columns = {"time",
                 "classical_energy",
                 "kinetic_modulated",
                 "f_n_over_n2",
                 "total_modulated_per_particle",
                 "min_pair_distance",
                 "f_n",
                 "f_prime_n",
                 "grad_u_inf"};
  for (const std::string& name : battery.names)
    out.columns.push_back("battery_" + name);

  auto record = [&]() {
    std::vector<double> row;
    row.push_back(ps.time);
    row.push_back(classical_energy(ps));
    if (ps.free_space) {
      // density-coupled functionals are defined through the torus kernel
      double kin = 0.0;
      for (std::size_t j = 0; j < ps.positions.size(); ++j) {
        Vec3 uj = interpolate_vector(fs.u, ps.positions[j]);
        for (int a = 0; a < 3; ++a) {
          double dv = ps.velocities[j][a] - uj[a];
          kin += dv * dv;
        }
      }
      kin /= double(ps.n);
      row.insert(row.end(), {kin, kNan, kNan, ps.min_pair_distance(), kNan, kNan});
    } else {
      ConfigurationEnergy ce = configuration_energy(ps, fs.rho, fs.u);
      double n2 = double(ps.n) * double(ps.n);
      row.insert(row.end(),
                 {ce.kinetic_modulated, ce.f_n / n2,
                  ce.total_modulated_per_particle, ps.min_pair_distance(),
                  ce.f_n, ce.f_prime_n});
    }
    row.push_back(regularity_report(fs).grad_u_inf);
    for (double v : battery_gaps(battery, ps.positions, fs.rho)) row.push_back(v);
    out.rows.push_back(std::move(row));
  };
  record();

  const long long steps = step_count(cfg);
  for (long long step = 1; step <= steps; ++step) {
    try {
      nbody_step(ps, cfg.dt, guard);
      euler_poisson_step(fs, cfg.dt);
    } catch (const std::exception& e) {
      out.truncated = true;
      out.horizon_time = std::min(ps.time, fs.time);
      out.note = e.what();
      break;
    }
    if (fs.blown_up) {
      out.truncated = true;
      out.horizon_time = fs.time;
      out.note = "fluid blow-up";
      break;
    }
    if (sample_step(cfg, step, steps)) record();
  }
  return out;
}

std::vector<std::string> battery_names() {
  GridSpec g;  // any valid 3-d grid: names do not depend on geometry
  return make_battery(g, false).names;
}

std::vector<double> battery_values(const std::vector<Vec3>& positions,
                                   const ScalarField& rho) {
  if (positions.empty())
    throw std::invalid_argument("battery_values: empty configuration");
  return battery_gaps(make_battery(rho.grid), positions, rho);
}

GronwallCheck coupled_envelope_check(const DiagnosticSeries& series,
                                     double growth_rate) {
  return gronwall_monitor(series.column_values("time"),
                          series.column_values("g_total"), growth_rate, 0.0);
}

namespace {

RateFit fit_loglog(const std::vector<std::pair<double, double>>& pts) {
  RateFit f;
  std::vector<double> lx, ly;
  double x_min = 0.0, x_max = 0.0;
  for (const auto& p : pts) {
    if (!(p.first > 0.0) || !(p.second > 0.0) || !std::isfinite(p.second))
      continue;
    if (lx.empty() || p.first < x_min) x_min = p.first;
    if (lx.empty() || p.first > x_max) x_max = p.first;
    lx.push_back(std::log(p.first));
    ly.push_back(std::log(p.second));
  }
  if (lx.size() < 3) return f;
  try {
    LineFit lf = fit_line(lx, ly);
    f.slope = lf.slope;
    f.intercept = lf.intercept;
    f.r_squared = lf.r_squared;
    f.x_min = x_min;
    f.x_max = x_max;
    f.points = int(lx.size());
    f.defined = true;
  } catch (const std::invalid_argument&) {
    // degenerate abscissae: leave undefined
  }
  return f;
}

double terminal(const DiagnosticSeries& s, const std::string& col) {
  if (s.rows.empty()) return kNan;
  return s.rows.back()[std::size_t(s.column(col))];
}

double initial(const DiagnosticSeries& s, const std::string& col) {
  if (s.rows.empty()) return kNan;
  return s.rows.front()[std::size_t(s.column(col))];
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNan;
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / double(v.size());
}

}  // namespace

SweepResult sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.hbar_list.size() < 3)
    throw std::invalid_argument("sweep: hbar_list needs at least 3 values");
  if (cfg.n_list.size() < 3)
    throw std::invalid_argument("sweep: n_list needs at least 3 values");

  struct Job {
    std::string kind;
    double hbar = 0.0;
    int n = 0;
    int draw = 0;
  };
  std::vector<Job> jobs;
  for (double h : cfg.hbar_list) jobs.push_back({"coupled", h, 0, 0});
  for (int n : cfg.n_list)
    for (int d = 0; d < cfg.draws_per_n; ++d) jobs.push_back({"nbody", 0.0, n, d});

  SweepResult result;
  result.runs.resize(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const Job& job = jobs[i];
      SweepRun& run = result.runs[i];
      run.kind = job.kind;
      if (job.kind == "coupled") {
        run.parameter = job.hbar;
        run.id = "coupled_h" + fmt_short(job.hbar);
      } else {
        run.parameter = double(job.n);
        run.draw = job.draw;
        run.id = "nbody_n" + std::to_string(job.n) + "_d" + std::to_string(job.draw);
      }
      try {
        run.series = job.kind == "coupled"
                         ? run_coupled(cfg, job.hbar)
                         : run_nbody_vs_fluid(cfg, job.n, job.draw);
      } catch (const std::exception& e) {
        run.failed = true;
        run.failure = e.what();
      }
    }
  });

  for (const SweepRun& run : result.runs) {
    if (run.failed)
      result.failure_ledger.push_back(run.id + ": " + run.failure);
    else if (run.series.truncated)
      result.failure_ledger.push_back(run.id + ": truncated at t=" +
                                      fmt_short(run.series.horizon_time) + ": " +
                                      run.series.note);
  }

  // coupled aggregates and the hbar fit
  std::vector<std::pair<double, double>> g_pts;
  for (const SweepRun& run : result.runs) {
    if (run.kind != "coupled" || run.failed || run.series.rows.empty()) continue;
    double gt = terminal(run.series, "g_total");
    GronwallCheck env = coupled_envelope_check(run.series, cfg.gronwall_c);
    result.summary.push_back({"coupled", run.parameter, "g_total_terminal", gt});
    result.summary.push_back(
        {"coupled", run.parameter, "g_kinetic_terminal",
         terminal(run.series, "g_kinetic")});
    result.summary.push_back(
        {"coupled", run.parameter, "g_potential_terminal",
         terminal(run.series, "g_potential")});
    result.summary.push_back(
        {"coupled", run.parameter, "gronwall_max_ratio", env.max_ratio});
    result.summary.push_back(
        {"coupled", run.parameter, "gronwall_violated", env.violated ? 1.0 : 0.0});
    if (!run.series.truncated) g_pts.push_back({run.parameter, gt});
  }
  result.fitted_rates["g_total_terminal_vs_hbar"] = fit_loglog(g_pts);

  // particle aggregates: means over draws at each n, then fits over n
  const std::vector<std::string> bat = battery_names();
  std::vector<std::pair<double, double>> total_pts, fn0_pts;
  std::vector<std::vector<std::pair<double, double>>> bat_pts(bat.size());
  std::vector<SerfatySample> serfaty_samples;
  for (int n : cfg.n_list) {
    std::vector<double> totals, fn0s;
    std::vector<std::vector<double>> bats(bat.size());
    for (const SweepRun& run : result.runs) {
      if (run.kind != "nbody" || run.failed || int(run.parameter) != n) continue;
      if (run.series.rows.empty()) continue;
      fn0s.push_back(initial(run.series, "f_n_over_n2"));
      if (!run.series.truncated) {
        totals.push_back(terminal(run.series, "total_modulated_per_particle"));
        for (std::size_t m = 0; m < bat.size(); ++m)
          bats[m].push_back(terminal(run.series, "battery_" + bat[m]));
      }
      int cf = run.series.column("f_n");
      int cfp = run.series.column("f_prime_n");
      int cg = run.series.column("grad_u_inf");
      for (const auto& row : run.series.rows) {
        if (std::isnan(row[std::size_t(cf)])) continue;
        serfaty_samples.push_back(
            {n, row[std::size_t(cf)], row[std::size_t(cfp)], row[std::size_t(cg)]});
      }
    }
    double total_mean = mean_of(totals);
    double fn0_mean = mean_of(fn0s);
    result.summary.push_back(
        {"nbody", double(n), "total_modulated_terminal_mean", total_mean});
    result.summary.push_back(
        {"nbody", double(n), "f_n_over_n2_initial_mean", fn0_mean});
    for (std::size_t m = 0; m < bat.size(); ++m) {
      double bm = mean_of(bats[m]);
      result.summary.push_back(
          {"nbody", double(n), "battery_" + bat[m] + "_terminal_mean", bm});
      if (!std::isnan(bm)) bat_pts[m].push_back({double(n), bm});
    }
    if (!std::isnan(total_mean)) total_pts.push_back({double(n), total_mean});
    if (!std::isnan(fn0_mean))
      fn0_pts.push_back({double(n), std::abs(fn0_mean)});
  }
  result.fitted_rates["total_modulated_terminal_vs_n"] = fit_loglog(total_pts);
  result.fitted_rates["abs_f_n_over_n2_initial_vs_n"] = fit_loglog(fn0_pts);
  for (std::size_t m = 0; m < bat.size(); ++m)
    result.fitted_rates["battery_" + bat[m] + "_terminal_vs_n"] =
        fit_loglog(bat_pts[m]);

  // configuration scaling report needs >= 3 distinct n spanning a decade
  std::vector<int> distinct;
  for (const SerfatySample& s : serfaty_samples)
    if (std::find(distinct.begin(), distinct.end(), s.n) == distinct.end())
      distinct.push_back(s.n);
  if (distinct.size() >= 3) {
    auto [lo, hi] = std::minmax_element(distinct.begin(), distinct.end());
    if (double(*hi) >= 10.0 * double(*lo) * (1.0 - 1e-12)) {
      result.serfaty = serfaty_diagnostics(serfaty_samples);
      result.serfaty_defined = true;
    }
  }
  return result;
}

std::string series_csv_text(const ExperimentConfig& cfg, const SweepRun& run) {
  std::ostringstream out;
  const std::string hash = config_hash(cfg);
  out << "run_id,version,config_hash";
  for (const std::string& c : run.series.columns) out << ',' << c;
  out << '\n';
  for (const auto& row : run.series.rows) {
    out << run.id << ',' << kLabVersion << ',' << hash;
    for (double v : row) out << ',' << fmt17(v);
    out << '\n';
  }
  return out.str();
}

std::string summary_csv_text(const ExperimentConfig& cfg, const SweepResult& r) {
  std::ostringstream out;
  const std::string hash = config_hash(cfg);
  out << "run_id,version,config_hash,kind,parameter,diagnostic,value\n";
  for (const auto& row : r.summary)
    out << "sweep," << kLabVersion << ',' << hash << ',' << row.kind << ','
        << fmt17(row.parameter) << ',' << row.diagnostic << ','
        << fmt17(row.value) << '\n';
  return out.str();
}

std::string report_text(const ExperimentConfig& cfg, const SweepResult& r) {
  std::ostringstream out;
  out << "mean-field laboratory sweep report\n";
  out << "version: " << kLabVersion << "\n";
  out << "config hash: " << config_hash(cfg) << "\n";
  out << "grid: n=" << cfg.grid.n << " dim=" << cfg.grid.dim
      << " box_length=" << fmt_short(cfg.grid.box_length) << "\n";
  out << "time: t_final=" << fmt_short(cfg.t_final) << " dt=" << fmt_short(cfg.dt)
      << " sample_every=" << cfg.sample_every << "\n";
  out << "seed: " << cfg.seed << "  draws_per_n: " << cfg.draws_per_n << "\n\n";

  out << "runs:\n";
  for (const SweepRun& run : r.runs) {
    out << "  " << run.id << ": ";
    if (run.failed) {
      out << "FAILED: " << run.failure << "\n";
      continue;
    }
    if (run.series.truncated)
      out << "truncated at t=" << fmt_short(run.series.horizon_time) << " ("
          << run.series.note << ")";
    else
      out << "ok";
    if (!run.series.rows.empty())
      out << ", " << run.series.rows.size() << " samples to t="
          << fmt_short(run.series.rows.back().front());
    out << "\n";
  }

  out << "\nlog-log fits (valid only inside the stated parameter range):\n";
  for (const auto& kv : r.fitted_rates) {
    out << "  " << kv.first << ": ";
    if (!kv.second.defined) {
      out << "undefined (fewer than 3 positive points)\n";
      continue;
    }
    out << "slope=" << fmt_short(kv.second.slope)
        << " intercept=" << fmt_short(kv.second.intercept)
        << " r2=" << fmt_short(kv.second.r_squared)
        << " points=" << kv.second.points << " range=["
        << fmt_short(kv.second.x_min) << ", " << fmt_short(kv.second.x_max)
        << "]\n";
  }

  out << "\nconfiguration scaling:\n";
  if (!r.serfaty_defined) {
    out << "  not computed (needs >= 3 particle counts spanning a decade)\n";
  } else {
    const SerfatyReport& s = r.serfaty;
    out << "  c_fit=" << fmt_short(s.c_fit) << "\n";
    out << "  exponent_a=" << (s.a_defined ? fmt_short(s.exponent_a) : "undefined")
        << " within bound: " << (s.a_within_bound ? "yes" : "NO") << "\n";
    out << "  exponent_b=" << (s.b_defined ? fmt_short(s.exponent_b) : "undefined")
        << " within bound: " << (s.b_within_bound ? "yes" : "NO") << "\n";
  }

  out << "\nfailures:\n";
  if (r.failure_ledger.empty()) {
    out << "  none\n";
  } else {
    for (const std::string& f : r.failure_ledger) out << "  " << f << "\n";
  }
  return out.str();
}

void write_sweep_outputs(const ExperimentConfig& cfg, const SweepResult& r) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  auto write_file = [](const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
  };
  for (const SweepRun& run : r.runs)
    write_file(fs::path(cfg.output_dir) / (run.id + ".csv"),
               series_csv_text(cfg, run));
  write_file(fs::path(cfg.output_dir) / "summary.csv", summary_csv_text(cfg, r));
  write_file(fs::path(cfg.output_dir) / "report.txt", report_text(cfg, r));
  write_file(fs::path(cfg.output_dir) / "config.ini", canonical_config_text(cfg));
}

namespace {

void expect_token(std::istream& in, const std::string& want,
                  const std::string& what) {
  std::string got;
  in >> got;
  if (got != want)
    throw std::invalid_argument("state file: expected " + what + " '" + want +
                                "', got '" + got + "'");
}

GridSpec read_grid_header(std::istream& in, const char* magic) {
  expect_token(in, magic, "magic");
  expect_token(in, "1", "format version");
  GridSpec g;
  expect_token(in, "dim", "field");
  in >> g.dim;
  expect_token(in, "n", "field");
  in >> g.n;
  expect_token(in, "box_length", "field");
  in >> g.box_length;
  if (!in) throw std::invalid_argument("state file: malformed header");
  g.validate();
  return g;
}

}  // namespace

void write_wave_field(const std::string& path, const WaveField& psi) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const GridSpec& g = psi.grid;
  out << "mflab-wave 1\n";
  out << "dim " << g.dim << "\nn " << g.n << "\nbox_length "
      << fmt17(g.box_length) << "\nhbar " << fmt17(psi.hbar) << "\n";
  for (const std::complex<double>& v : psi.values)
    out << fmt17(v.real()) << ' ' << fmt17(v.imag()) << '\n';
}

WaveField read_wave_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("state file: cannot open " + path);
  GridSpec g = read_grid_header(in, "mflab-wave");
  expect_token(in, "hbar", "field");
  double hbar = 0.0;
  in >> hbar;
  if (!in || !(hbar > 0.0))
    throw std::invalid_argument("state file: bad hbar");
  WaveField psi(g, hbar);
  for (std::size_t i = 0; i < psi.values.size(); ++i) {
    double re = 0.0, im = 0.0;
    in >> re >> im;
    if (!in) throw std::invalid_argument("state file: truncated wave data");
    psi.values[i] = {re, im};
  }
  return psi;
}

void write_fluid_state(const std::string& path, const FluidState& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const GridSpec& g = s.rho.grid;
  out << "mflab-fluid 1\n";
  out << "dim " << g.dim << "\nn " << g.n << "\nbox_length "
      << fmt17(g.box_length) << "\ntime " << fmt17(s.time) << "\nblown_up "
      << (s.blown_up ? 1 : 0) << "\n";
  for (std::size_t i = 0; i < s.rho.values.size(); ++i) {
    out << fmt17(s.rho.values[i]);
    for (int c = 0; c < g.dim; ++c) out << ' ' << fmt17(s.u.comp[c][i]);
    out << '\n';
  }
}

FluidState read_fluid_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("state file: cannot open " + path);
  GridSpec g = read_grid_header(in, "mflab-fluid");
  expect_token(in, "time", "field");
  double time = 0.0;
  in >> time;
  expect_token(in, "blown_up", "field");
  int blown = 0;
  in >> blown;
  if (!in) throw std::invalid_argument("state file: malformed header");
  ScalarField rho(g);
  VectorField u(g);
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    in >> rho.values[i];
    for (int c = 0; c < g.dim; ++c) in >> u.comp[c][i];
    if (!in) throw std::invalid_argument("state file: truncated fluid data");
  }
  FluidState s(std::move(rho), std::move(u));
  s.time = time;
  s.blown_up = blown != 0;
  return s;
}

}  // namespace mflab
