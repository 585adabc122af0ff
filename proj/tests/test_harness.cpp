// Runner, sweep, and serialization tests: diagnostic series shapes,
// conservation columns, truncation paths, byte-level determinism across
// repeats and worker counts, config parsing, and state-file round trips.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "mflab/config.hpp"
#include "mflab/harness.hpp"
#include "mflab/hartree.hpp"
#include "mflab/profiles.hpp"

using namespace mflab;

namespace {

ExperimentConfig small_config(int dim, int n, double box) {
  ExperimentConfig cfg;
  cfg.grid.dim = dim;
  cfg.grid.n = n;
  cfg.grid.box_length = box;
  cfg.hbar_list = {0.5, 0.25, 0.125};
  cfg.n_list = {4, 8, 16};
  cfg.t_final = 0.02;
  cfg.dt = 0.005;
  cfg.sample_every = 2;
  cfg.initial_density.name = "gaussian";
  cfg.initial_phase.name = "quadratic_bump";
  cfg.seed = 7;
  cfg.draws_per_n = 2;
  return cfg;
}

std::string valid_ini() {
  return "[grid]\n"
         "n = 16\n"
         "dim = 3\n"
         "box_length = 1.0\n"
         "[sweep]\n"
         "hbar_list = 0.5, 0.25, 0.125\n"
         "n_list = 4 8 16\n"
         "[time]\n"
         "t_final = 0.02\n"
         "dt = 0.005\n"
         "sample_every = 2\n"
         "[initial_density]\n"
         "profile = gaussian\n"
         "sigma = 0.0625\n"
         "[initial_phase]\n"
         "profile = quadratic_bump\n"
         "amplitude = 0.1\n"
         "[run]\n"
         "seed = 7\n"
         "output_dir = out\n"
         "draws_per_n = 2\n";
}

double l2_gap(const WaveField& a, const WaveField& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    sum += std::norm(a.values[i] - b.values[i]);
  return std::sqrt(sum * a.grid.cell_volume());
}

std::filesystem::path temp_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() / ("mflab_" + tag);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config: parse, canonical round trip, hash") {
  ExperimentConfig c = parse_config(valid_ini());
  CHECK(c.grid.n == 16);
  CHECK(c.grid.dim == 3);
  CHECK(c.grid.box_length == 1.0);
  CHECK(c.hbar_list == std::vector<double>{0.5, 0.25, 0.125});
  CHECK(c.n_list == std::vector<int>{4, 8, 16});
  CHECK(c.t_final == 0.02);
  CHECK(c.dt == 0.005);
  CHECK(c.sample_every == 2);
  CHECK(c.initial_density.name == "gaussian");
  CHECK(c.initial_density.params.at("sigma") == 0.0625);
  CHECK(c.initial_phase.name == "quadratic_bump");
  CHECK(c.seed == 7);
  CHECK(c.draws_per_n == 2);
  CHECK(c.free_space_images == false);
  CHECK(c.self_consistent_halves == true);

  // canonical text is a fixed point of parse + serialize
  std::string canon = canonical_config_text(c);
  ExperimentConfig c2 = parse_config(canon);
  CHECK(canonical_config_text(c2) == canon);
  CHECK(config_hash(c2) == config_hash(c));
  CHECK(config_hash(c).size() == 16);
  for (char ch : config_hash(c)) CHECK(std::isxdigit(static_cast<unsigned char>(ch)));

  // any semantic change moves the hash
  ExperimentConfig c3 = c;
  c3.seed = 8;
  CHECK(config_hash(c3) != config_hash(c));

  // defaults: sigma injected for gaussian densities, box/16
  ExperimentConfig cdef = parse_config(
      "[grid]\nn = 16\nbox_length = 2.0\n"
      "[sweep]\nhbar_list = 0.5 0.25 0.125\nn_list = 4 8 16\n"
      "[time]\nt_final = 0.1\ndt = 0.01\n");
  CHECK(cdef.initial_density.name == "gaussian");
  CHECK(cdef.initial_density.params.at("sigma") == doctest::Approx(0.125));
  CHECK(cdef.initial_phase.name == "quadratic_bump");
  CHECK(cdef.grid.dim == 3);
}

TEST_CASE("config: rejected inputs") {
  auto bad = [](const std::string& text) {
    CHECK_THROWS_AS(parse_config(text), std::invalid_argument);
  };
  const std::string ok = valid_ini();
  bad(ok + "[bogus]\nx = 1\n");                       // unknown section
  bad(ok + "[grid]\nspacing = 3\n");                  // unknown key
  bad(ok + "[run]\nseed = 9\n");                      // duplicate key
  bad("n = 16\n" + ok);                               // key before any section
  bad(ok + "[run]\ngronwall_c = fast\n");             // not a number
  bad(ok + "[run]\ndraws_per_n = 3x\n");              // trailing characters
  bad(ok + "[run]\nfree_space_images = maybe\n");     // not a bool
  bad(ok + "[grid\nn = 8\n");                         // unterminated header
  bad(ok + "[run]\nforce =\n");                       // empty value

  // required keys
  bad("[sweep]\nhbar_list = 0.5 0.25 0.125\nn_list = 4 8 16\n"
      "[time]\nt_final = 1\ndt = 0.1\n");             // grid missing
  bad("[grid]\nn = 16\nbox_length = 1\n"
      "[sweep]\nn_list = 4 8 16\n"
      "[time]\nt_final = 1\ndt = 0.1\n");             // hbar_list missing
  bad("[grid]\nn = 16\nbox_length = 1\n"
      "[sweep]\nhbar_list = 0.5 0.25 0.125\nn_list = 4 8 16\n"
      "[time]\ndt = 0.1\n");                          // t_final missing

  // invariant violations
  auto swap_line = [&ok](const std::string& from, const std::string& to) {
    std::string s = ok;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  bad(swap_line("hbar_list = 0.5, 0.25, 0.125", "hbar_list = 0.25, 0.5, 0.125"));
  bad(swap_line("hbar_list = 0.5, 0.25, 0.125", "hbar_list = 0.5, -0.25, 0.125"));
  bad(swap_line("n_list = 4 8 16", "n_list = 4 16 8"));
  bad(swap_line("n_list = 4 8 16", "n_list = 0 8 16"));
  bad(swap_line("n_list = 4 8 16", "n_list = 4 8 5000"));
  bad(swap_line("dt = 0.005", "dt = 0.5"));           // dt > t_final
  bad(swap_line("sample_every = 2", "sample_every = 0"));
  bad(swap_line("profile = gaussian", "profile = ring"));
  bad(swap_line("sigma = 0.0625", "sigma = 0.2"));    // box < 16 sigma
  bad(swap_line("output_dir = out", "output_dir ="));
  bad(swap_line("draws_per_n = 2", "draws_per_n = 0"));
  bad(swap_line("seed = 7", "gronwall_c = -1\nseed = 7"));

  CHECK_THROWS_AS(load_config("/definitely/not/here.ini"), std::invalid_argument);
}

TEST_CASE("diagnostic series: column lookup") {
  DiagnosticSeries s;
  s.columns = {"time", "mass"};
  s.rows = {{0.0, 1.0}, {0.5, 2.0}};
  CHECK(s.column("mass") == 1);
  CHECK(s.column_values("time") == std::vector<double>{0.0, 0.5});
  CHECK_THROWS_AS(s.column("energy"), std::invalid_argument);
}

TEST_CASE("hartree runner: cadence, conservation, determinism") {
  ExperimentConfig cfg = small_config(1, 64, 1.0);
  cfg.t_final = 0.01;
  cfg.dt = 0.001;
  cfg.sample_every = 2;
  DiagnosticSeries s = run_hartree(cfg, 0.5);

  // rows: t=0 plus every 2nd of 10 steps
  CHECK(s.rows.size() == 6);
  CHECK(!s.truncated);
  auto times = s.column_values("time");
  CHECK(times.front() == 0.0);
  CHECK(times.back() == doctest::Approx(0.01).epsilon(1e-12));
  for (double m : s.column_values("mass"))
    CHECK(m == doctest::Approx(1.0).epsilon(1e-11));
  // splitting drifts the energy at O(dt^2) while conserving mass exactly
  auto total = s.column_values("total");
  for (double e : total)
    CHECK(e == doctest::Approx(total.front()).epsilon(1e-5));
  auto resid = s.column_values("continuity_residual");
  CHECK(std::isnan(resid.front()));
  for (std::size_t i = 1; i < resid.size(); ++i) {
    CHECK(std::isfinite(resid[i]));
    CHECK(resid[i] >= 0.0);
  }

  CHECK_THROWS_AS(run_hartree(cfg, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(run_hartree(cfg, -1.0), std::invalid_argument);
}

TEST_CASE("fluid runner: conservation and cfl truncation") {
  ExperimentConfig cfg = small_config(1, 64, 1.0);
  cfg.initial_phase.name = "zero";
  cfg.t_final = 0.04;
  cfg.dt = 0.004;
  cfg.sample_every = 1;
  DiagnosticSeries s = run_fluid(cfg);
  CHECK(!s.truncated);
  CHECK(s.rows.size() == 11);
  for (double m : s.column_values("mass"))
    CHECK(m == doctest::Approx(1.0).epsilon(1e-12));
  for (double p : s.column_values("momentum_x"))
    CHECK(std::abs(p) < 1e-8);
  auto e = s.column_values("energy");
  for (double v : e) CHECK(v == doctest::Approx(e.front()).epsilon(1e-6));
  for (double b : s.column_values("blown_up")) CHECK(b == 0.0);

  // dt above the advective limit: the first step refuses and the series
  // truncates at the initial time instead of propagating the throw
  ExperimentConfig hot = cfg;
  hot.dt = 0.009;
  hot.t_final = 0.036;
  DiagnosticSeries t = run_fluid(hot);
  CHECK(t.truncated);
  CHECK(t.rows.size() == 1);
  CHECK(t.horizon_time == 0.0);
  CHECK(!t.note.empty());
}

TEST_CASE("coupled runner: uniform equilibrium stays flat") {
  ExperimentConfig cfg = small_config(1, 32, 1.0);
  cfg.initial_density.name = "uniform";
  cfg.initial_phase.name = "zero";
  cfg.t_final = 0.02;
  cfg.dt = 0.002;
  cfg.sample_every = 1;
  DiagnosticSeries s = run_coupled(cfg, 0.5);
  CHECK(!s.truncated);
  CHECK(s.rows.size() == 11);
  for (double g : s.column_values("g_total")) CHECK(std::abs(g) < 1e-12);
  for (double g : s.column_values("g_kinetic")) CHECK(std::abs(g) < 1e-12);
  for (double g : s.column_values("g_potential")) CHECK(std::abs(g) < 1e-13);
  for (double m : s.column_values("wave_mass"))
    CHECK(m == doctest::Approx(1.0).epsilon(1e-12));
  for (double g : s.column_values("grad_u_inf")) CHECK(std::abs(g) < 1e-12);
  for (double m : s.column_values("monokinetic_concentration"))
    CHECK(std::isfinite(m));
  GronwallCheck env = coupled_envelope_check(s, cfg.gronwall_c);
  CHECK(!env.violated);
}

TEST_CASE("coupled runner: evolving run sits under its envelope") {
  ExperimentConfig cfg = small_config(1, 64, 1.0);
  cfg.t_final = 0.02;
  cfg.dt = 0.001;
  cfg.sample_every = 4;
  DiagnosticSeries s = run_coupled(cfg, 0.25);
  CHECK(!s.truncated);
  // g_total = g_kinetic + g_potential holds bitwise, column by column
  int ct = s.column("g_total"), ck = s.column("g_kinetic"),
      cp = s.column("g_potential");
  for (const auto& row : s.rows) {
    CHECK(row[ct] == row[ck] + row[cp]);
    CHECK(row[ck] >= 0.0);
    CHECK(row[cp] >= 0.0);
  }
  auto g = s.column_values("g_total");
  CHECK(g.front() > 0.0);  // bump phase starts off the fluid velocity exactly
  auto envelope = s.column_values("envelope");
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] <= envelope[i] * 1.0001);
  GronwallCheck env = coupled_envelope_check(s, cfg.gronwall_c);
  CHECK(!env.violated);
  CHECK(env.max_ratio <= 1.0001);
  for (double m : s.column_values("monokinetic_concentration")) {
    CHECK(std::isfinite(m));
    CHECK(m >= 0.0);
  }

  // 3-d grids have no phase-space column
  ExperimentConfig c3 = small_config(3, 16, 1.0);
  c3.t_final = 0.01;
  c3.dt = 0.005;
  DiagnosticSeries s3 = run_coupled(c3, 0.5);
  for (double m : s3.column_values("monokinetic_concentration"))
    CHECK(std::isnan(m));
}

TEST_CASE("hartree half-kick refresh: second order against frozen variant") {
  GridSpec g;
  g.dim = 1;
  g.n = 64;
  g.box_length = 1.0;
  ProfileSpec dens{"gaussian", {}};
  ProfileSpec phase{"quadratic_bump", {}};
  ScalarField rho = build_density(g, dens);
  ScalarField s0 = build_phase(g, phase);
  const double hbar = 0.5;
  const double t_end = 0.04;

  auto evolve = [&](double dt, bool refresh) {
    HartreeState hs(wkb_initializer(rho, s0, hbar));
    hs.refresh_half_kick = refresh;
    long long steps = std::llround(t_end / dt);
    for (long long i = 0; i < steps; ++i) hartree_step(hs, dt);
    return hs;
  };
  HartreeState ref = evolve(0.0005, true);
  HartreeState coarse = evolve(0.004, true);
  HartreeState frozen = evolve(0.004, false);
  CHECK(!coarse.potential_valid == false);  // refreshed potential is current
  CHECK(frozen.potential_valid == false);   // stale after the final drift
  double err_refresh = l2_gap(coarse.psi, ref.psi);
  double err_frozen = l2_gap(frozen.psi, ref.psi);
  CHECK(err_refresh < 1e-4);
  CHECK(err_frozen > 5.0 * err_refresh);
}

TEST_CASE("nbody runner: columns, determinism, free space, input errors") {
  ExperimentConfig cfg = small_config(3, 16, 1.0);
  cfg.t_final = 0.02;
  cfg.dt = 0.005;
  cfg.sample_every = 1;
  DiagnosticSeries s = run_nbody_vs_fluid(cfg, 8, 0);
  CHECK(!s.truncated);
  CHECK(s.columns.size() == 9 + battery_names().size());
  CHECK(s.rows.size() == 5);
  int ckin = s.column("kinetic_modulated"), cfn2 = s.column("f_n_over_n2"),
      ctot = s.column("total_modulated_per_particle"), cfn = s.column("f_n"),
      cmin = s.column("min_pair_distance");
  for (const auto& row : s.rows) {
    CHECK(row[ctot] ==
          doctest::Approx(row[ckin] + row[cfn2]).epsilon(1e-12));
    CHECK(row[cfn2] == doctest::Approx(row[cfn] / 64.0).epsilon(1e-12));
    CHECK(row[ckin] >= 0.0);
    CHECK(row[cmin] > 0.0);
  }
  for (const std::string& name : battery_names())
    for (double v : s.column_values("battery_" + name)) {
      CHECK(std::isfinite(v));
      CHECK(v >= 0.0);
    }

  // bitwise repeatability per (n, draw); independence across draws
  SweepRun run_a{"nbody_n8_d0", "nbody", 8.0, 0, s, false, ""};
  SweepRun run_b = run_a;
  run_b.series = run_nbody_vs_fluid(cfg, 8, 0);
  CHECK(series_csv_text(cfg, run_a) == series_csv_text(cfg, run_b));
  DiagnosticSeries other = run_nbody_vs_fluid(cfg, 8, 1);
  CHECK(other.rows.front()[1] != s.rows.front()[1]);

  // free-space images drop the torus-coupled functionals
  ExperimentConfig fre = cfg;
  fre.free_space_images = true;
  DiagnosticSeries f = run_nbody_vs_fluid(fre, 8, 0);
  CHECK(std::isnan(f.rows.front()[cfn]));
  CHECK(std::isfinite(f.rows.front()[ckin]));

  ExperimentConfig flat = small_config(1, 64, 1.0);
  CHECK_THROWS_AS(run_nbody_vs_fluid(flat, 8, 0), std::invalid_argument);
  CHECK_THROWS_AS(run_nbody_vs_fluid(cfg, 8, -1), std::invalid_argument);
  ExperimentConfig wide = cfg;
  wide.t_final = 0.12;
  wide.dt = 0.06;  // above the particle step cap
  CHECK_THROWS_AS(run_nbody_vs_fluid(wide, 8, 0), std::invalid_argument);
}

TEST_CASE("battery: uniform lattice floor") {
  CHECK(battery_names().size() == 5);
  GridSpec g;
  g.dim = 3;
  g.n = 8;
  g.box_length = 2.0;
  ScalarField rho = build_density(g, {"uniform", {}});
  std::vector<Vec3> lattice;
  for (std::size_t flat = 0; flat < g.cell_count(); ++flat) {
    auto p = grid_point(g, flat);
    lattice.push_back({p[0], p[1], p[2]});
  }
  // empirical mean over all grid nodes equals the uniform-density inner
  // product up to summation rounding
  for (double v : battery_values(lattice, rho)) CHECK(v < 1e-12);

  CHECK_THROWS_AS(battery_values({}, rho), std::invalid_argument);
  GridSpec g2 = g;
  g2.dim = 2;
  ScalarField rho2 = build_density(g2, {"uniform", {}});
  CHECK_THROWS_AS(battery_values(lattice, rho2), std::invalid_argument);
}

TEST_CASE("gronwall check on synthetic series") {
  DiagnosticSeries s;
  s.columns = {"time", "g_total"};
  for (int i = 0; i <= 10; ++i) {
    double t = 0.1 * i;
    s.rows.push_back({t, std::exp(0.5 * t)});
  }
  GronwallCheck ok = coupled_envelope_check(s, 1.0);
  CHECK(!ok.violated);
  CHECK(ok.max_ratio == doctest::Approx(1.0));
  GronwallCheck tight = coupled_envelope_check(s, 0.25);
  CHECK(tight.violated);
  CHECK(tight.first_violation_time == doctest::Approx(0.1));
  CHECK(tight.max_ratio > 1.0);
}

TEST_CASE("sweep: preconditions, aggregates, determinism, outputs") {
  ExperimentConfig cfg = small_config(3, 16, 1.0);
  cfg.output_dir = temp_dir("sweep_out").string();

  ExperimentConfig thin = cfg;
  thin.hbar_list = {0.5, 0.25};
  CHECK_THROWS_AS(sweep(thin), std::invalid_argument);
  thin = cfg;
  thin.n_list = {4, 8};
  CHECK_THROWS_AS(sweep(thin), std::invalid_argument);

  SweepResult r = sweep(cfg);
  CHECK(r.runs.size() == 3 + 3 * 2);
  CHECK(r.failure_ledger.empty());
  std::set<std::string> ids;
  for (const SweepRun& run : r.runs) {
    CHECK(!run.failed);
    CHECK(!run.series.truncated);
    ids.insert(run.id);
  }
  CHECK(ids.size() == r.runs.size());
  CHECK(ids.count("coupled_h0.5") == 1);
  CHECK(ids.count("nbody_n16_d1") == 1);

  // every fit key is present; the coupled fit has its full 3 points
  CHECK(r.fitted_rates.count("g_total_terminal_vs_hbar") == 1);
  CHECK(r.fitted_rates.count("abs_f_n_over_n2_initial_vs_n") == 1);
  CHECK(r.fitted_rates.count("total_modulated_terminal_vs_n") == 1);
  for (const std::string& name : battery_names())
    CHECK(r.fitted_rates.count("battery_" + name + "_terminal_vs_n") == 1);
  const RateFit& gf = r.fitted_rates.at("g_total_terminal_vs_hbar");
  CHECK(gf.defined);
  CHECK(gf.points == 3);
  CHECK(gf.x_min == 0.125);
  CHECK(gf.x_max == 0.5);

  // summary covers every particle count; n span below a decade leaves the
  // configuration scaling report out
  std::set<double> summary_n;
  for (const auto& row : r.summary)
    if (row.kind == "nbody") summary_n.insert(row.parameter);
  CHECK(summary_n == std::set<double>{4.0, 8.0, 16.0});
  CHECK(!r.serfaty_defined);

  // byte-for-byte repeatability, serial and threaded
  SweepResult r2 = sweep(cfg);
  CHECK(summary_csv_text(cfg, r2) == summary_csv_text(cfg, r));
  for (std::size_t i = 0; i < r.runs.size(); ++i)
    CHECK(series_csv_text(cfg, r2.runs[i]) == series_csv_text(cfg, r.runs[i]));
  setenv("LAB_WORKERS", "2", 1);
  SweepResult rp = sweep(cfg);
  setenv("LAB_WORKERS", "1", 1);
  CHECK(summary_csv_text(cfg, rp) == summary_csv_text(cfg, r));
  for (std::size_t i = 0; i < r.runs.size(); ++i)
    CHECK(series_csv_text(cfg, rp.runs[i]) == series_csv_text(cfg, r.runs[i]));

  // output directory: one csv per run plus summary, report, config echo
  write_sweep_outputs(cfg, r);
  namespace fs = std::filesystem;
  for (const SweepRun& run : r.runs)
    CHECK(fs::exists(fs::path(cfg.output_dir) / (run.id + ".csv")));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "summary.csv"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "report.txt"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "config.ini"));
  ExperimentConfig echoed =
      load_config((fs::path(cfg.output_dir) / "config.ini").string());
  CHECK(config_hash(echoed) == config_hash(cfg));
  std::ifstream rep(fs::path(cfg.output_dir) / "report.txt");
  std::string report((std::istreambuf_iterator<char>(rep)),
                     std::istreambuf_iterator<char>());
  CHECK(report.find("log-log fits") != std::string::npos);
  CHECK(report.find("configuration scaling") != std::string::npos);
  CHECK(report.find("not computed") != std::string::npos);
  CHECK(report.find(config_hash(cfg)) != std::string::npos);

  // csv rows carry the run id, version, and config hash
  std::ifstream csv(fs::path(cfg.output_dir) / (r.runs.front().id + ".csv"));
  std::string header, first_row;
  std::getline(csv, header);
  std::getline(csv, first_row);
  CHECK(header.rfind("run_id,version,config_hash,time,", 0) == 0);
  CHECK(first_row.rfind(r.runs.front().id + "," + kLabVersion + "," +
                            config_hash(cfg) + ",",
                        0) == 0);
  fs::remove_all(cfg.output_dir);
}

TEST_CASE("sweep: decade-spanning particle counts enable the scaling report") {
  ExperimentConfig cfg = small_config(3, 16, 1.0);
  cfg.n_list = {4, 8, 40};
  cfg.draws_per_n = 2;
  cfg.t_final = 0.01;
  cfg.dt = 0.005;
  SweepResult r = sweep(cfg);
  CHECK(r.failure_ledger.empty());
  CHECK(r.serfaty_defined);
  CHECK(r.serfaty.n_values.size() == 3);
  CHECK(std::isfinite(r.serfaty.c_fit));
}

TEST_CASE("state files: round trips and rejection") {
  namespace fs = std::filesystem;
  fs::path dir = temp_dir("state_files");
  fs::create_directories(dir);

  GridSpec g;
  g.dim = 1;
  g.n = 16;
  g.box_length = 2.0;
  ScalarField rho = build_density(g, {"gaussian", {{"sigma", 0.125}}});
  ScalarField ph = build_phase(g, {"quadratic_bump", {}});
  WaveField psi = wkb_initializer(rho, ph, 0.25);
  std::string wpath = (dir / "wave.txt").string();
  write_wave_field(wpath, psi);
  WaveField back = read_wave_field(wpath);
  CHECK(back.grid == psi.grid);
  CHECK(back.hbar == psi.hbar);
  REQUIRE(back.values.size() == psi.values.size());
  for (std::size_t i = 0; i < psi.values.size(); ++i)
    CHECK(back.values[i] == psi.values[i]);

  GridSpec g2;
  g2.dim = 2;
  g2.n = 8;
  g2.box_length = 1.0;
  FluidState fsave(build_density(g2, {"gaussian", {{"sigma", 0.0625}}}),
                   phase_velocity(g2, {"quadratic_bump", {}}));
  fsave.time = 0.75;
  fsave.blown_up = true;
  std::string fpath = (dir / "fluid.txt").string();
  write_fluid_state(fpath, fsave);
  FluidState fback = read_fluid_state(fpath);
  CHECK(fback.rho.grid == fsave.rho.grid);
  CHECK(fback.time == fsave.time);
  CHECK(fback.blown_up == fsave.blown_up);
  for (std::size_t i = 0; i < fsave.rho.values.size(); ++i) {
    CHECK(fback.rho.values[i] == fsave.rho.values[i]);
    CHECK(fback.u.comp[0][i] == fsave.u.comp[0][i]);
    CHECK(fback.u.comp[1][i] == fsave.u.comp[1][i]);
  }

  CHECK_THROWS_AS(read_wave_field((dir / "missing.txt").string()),
                  std::invalid_argument);
  CHECK_THROWS_AS(write_wave_field("/no_such_dir_zz/wave.txt", psi),
                  std::runtime_error);
  {
    std::ofstream bad(dir / "bad_magic.txt");
    bad << "mflab-what 1\ndim 1\nn 16\nbox_length 2\nhbar 0.25\n";
  }
  CHECK_THROWS_AS(read_wave_field((dir / "bad_magic.txt").string()),
                  std::invalid_argument);
  {
    std::ofstream cut(dir / "cut.txt");
    cut << "mflab-wave 1\ndim 1\nn 16\nbox_length 2\nhbar 0.25\n1 0\n2 0\n";
  }
  CHECK_THROWS_AS(read_wave_field((dir / "cut.txt").string()),
                  std::invalid_argument);
  {
    std::ofstream badgrid(dir / "bad_grid.txt");
    badgrid << "mflab-wave 1\ndim 1\nn 7\nbox_length 2\nhbar 0.25\n";
  }
  CHECK_THROWS_AS(read_wave_field((dir / "bad_grid.txt").string()),
                  std::invalid_argument);
  fs::remove_all(dir);
}
