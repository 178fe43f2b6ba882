// squidqct: command-line front end.
//
//   squidqct derive    <config>
//   squidqct classical <config> -o <dir>
//   squidqct qsd       <config> -o <dir> [--workers N]
//   squidqct jumps     <config> -o <dir> [--workers N]
//   squidqct spectrum  <config> -o <dir> [--ratio r] [--frames n | --until s]
//   squidqct compare   <section A> <section B> [--bins n]

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "squidqct/squidqct.hpp"

namespace fs = std::filesystem;
using namespace squidqct;

namespace {

std::string num8(double x) { return fmt_num(x, 8); }

// Files written by the current command; deleted again if the command aborts.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

  void prepare() {
    std::error_code ec;
    if (!fs::exists(dir_, ec)) {
      fs::create_directories(dir_, ec);
      if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
      created_dir_ = true;
    } else if (!fs::is_directory(dir_, ec)) {
      throw IoError("'" + dir_.string() + "' exists and is not a directory");
    }
  }

  std::string path(const std::string& name) {
    const fs::path p = dir_ / name;
    written_.push_back(p);
    return p.string();
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& p : written_) out.push_back(p.filename().string());
    return out;
  }

  void discard() {
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
    if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  bool created_dir_ = false;
};

void write_text_file(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  check_written(out, path);
}

std::set<std::string> with_circuit(std::initializer_list<const char*> extra) {
  std::set<std::string> keys = circuit_keys();
  for (const char* k : extra) keys.insert(k);
  return keys;
}

// Ordered key = value manifest.
class Manifest {
 public:
  void add(const std::string& key, const std::string& value) { lines_ += key + " = " + value + "\n"; }
  void add(const std::string& key, double value) { add(key, fmt_num(value)); }
  void section(const std::string& title) { lines_ += "\n# " + title + "\n"; }
  const std::string& text() const { return lines_; }

 private:
  std::string lines_;
};

void describe_circuit(Manifest& m, const ResolvedCircuit& rc, const DerivedParams& d) {
  m.section("circuit (SI, as configured)");
  const CircuitParams& b = rc.base;
  m.add("capacitance_f", b.C);
  m.add("inductance_h", b.L);
  m.add("resistance_ohm", b.R);
  m.add("critical_current_a", b.I_c);
  m.add("drive_current_a", b.I_d);
  m.add("drive_omega_rad_s", b.omega_d);
  m.add("bias_flux_wb", b.Phi_x);
  m.add("scale_a", rc.scaling.a);
  m.add("scale_b", rc.scaling.b);
  m.section("circuit (SI, after scaling)");
  const CircuitParams& s = rc.scaled;
  m.add("scaled_capacitance_f", s.C);
  m.add("scaled_inductance_h", s.L);
  m.add("scaled_resistance_ohm", s.R);
  m.add("scaled_critical_current_a", s.I_c);
  m.add("scaled_drive_current_a", s.I_d);
  m.add("scaled_drive_omega_rad_s", s.omega_d);
  m.add("params_digest", params_digest(s));
  m.section("derived");
  m.add("omega0_rad_s", d.omega0);
  m.add("beta", d.beta);
  m.add("zeta", d.zeta);
  m.add("q_factor", d.q_factor);
  m.add("phi_d", d.phi_d);
  m.add("omega", d.omega);
  m.add("phi_x", d.phi_x);
  m.add("Omega", d.Omega);
  m.add("j_coeff", d.j_coeff);
  m.add("x_per_phi0", d.x_per_phi0);
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// derive

int cmd_derive(const std::string& config_path) {
  const auto cfg = KeyValueConfig::load(config_path);
  const auto rc = circuit_from_config(cfg);
  const auto d = derive(rc.scaled);
  std::cout << "scale_a = " << num8(rc.scaling.a) << "\n"
            << "scale_b = " << num8(rc.scaling.b) << "\n"
            << "omega0_rad_s = " << num8(d.omega0) << "\n"
            << "beta = " << num8(d.beta) << "\n"
            << "zeta = " << num8(d.zeta) << "\n"
            << "q_factor = " << num8(d.q_factor) << "\n"
            << "phi_d = " << num8(d.phi_d) << "\n"
            << "omega = " << num8(d.omega) << "\n"
            << "phi_x = " << num8(d.phi_x) << "\n"
            << "Omega = " << num8(d.Omega) << "\n"
            << "j_coeff = " << num8(d.j_coeff) << "\n"
            << "x_per_phi0 = " << num8(d.x_per_phi0) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// classical

int cmd_classical(const std::string& config_path, OutputSet& out) {
  auto cfg = KeyValueConfig::load(config_path);
  cfg.require_known(with_circuit({"steps_per_period", "n_periods", "transient_periods", "record_stride",
                                  "initial_phi", "initial_phidot"}));
  const auto rc = circuit_from_config(cfg);
  const auto d = derive(rc.scaled);

  IntegratorConfig ic;
  ic.steps_per_period = cfg.integer_or("steps_per_period", 1000);
  ic.n_periods = cfg.integer_or("n_periods", 1100);
  ic.transient_periods = cfg.integer_or("transient_periods", 100);
  ic.record_stride = cfg.integer_or("record_stride", 10);
  ic.initial_state = {cfg.number_or("initial_phi", 0.0), cfg.number_or("initial_phidot", 0.0), 0.0};
  validate(ic);
  cfg.set("steps_per_period", std::to_string(ic.steps_per_period));
  cfg.set("n_periods", std::to_string(ic.n_periods));
  cfg.set("transient_periods", std::to_string(ic.transient_periods));
  cfg.set("record_stride", std::to_string(ic.record_stride));
  cfg.set("initial_phi", fmt_num(ic.initial_state.phi));
  cfg.set("initial_phidot", fmt_num(ic.initial_state.phidot));

  out.prepare();
  const auto t0 = std::chrono::steady_clock::now();
  const auto series = integrate_classical(d, ic);
  auto sec = classical_poincare(series, d, ic);
  const double run_seconds = seconds_since(t0);
  sec.params_digest = params_digest(rc.scaled);
  const auto flux = classical_to_flux_quanta(sec, d);

  write_classical_series(out.path("trajectory.csv"), series);
  write_section(out.path("section.csv"), sec);
  write_section(out.path("section_flux.csv"), flux);
  write_text_file(out.path("config.resolved"), cfg.to_text());
  write_text_file(out.path("plot.gp"),
                  "# Poincare section of the classical ring (gnuplot)\n"
                  "set datafile separator ','\n"
                  "set key autotitle columnhead\n"
                  "set terminal pngcairo size 900,700\n"
                  "set output 'section.png'\n"
                  "set xlabel 'flux (Phi_0)'\n"
                  "set ylabel 'd phi / d tau (Phi_0)'\n"
                  "plot 'section_flux.csv' using 1:2 with dots lc rgb 'black' notitle\n"
                  "set output 'trajectory.png'\n"
                  "set xlabel 'tau'\n"
                  "set ylabel 'phi'\n"
                  "plot 'trajectory.csv' using 1:2 with lines lw 0.5 notitle\n");

  Manifest m;
  m.add("command", "classical");
  m.add("version", SQUIDQCT_VERSION);
  m.add("config_source", config_path);
  m.add("started_utc", utc_now());
  describe_circuit(m, rc, d);
  m.section("integrator");
  m.add("scheme", "rk4_fixed_step");
  m.add("steps_per_period", std::to_string(ic.steps_per_period));
  m.add("n_periods", std::to_string(ic.n_periods));
  m.add("transient_periods", std::to_string(ic.transient_periods));
  m.add("record_stride", std::to_string(ic.record_stride));
  m.add("initial_phi", ic.initial_state.phi);
  m.add("initial_phidot", ic.initial_state.phidot);
  m.add("drive_phase", sec.drive_phase);
  m.add("section_points", std::to_string(sec.points.size()));
  m.section("timing");
  m.add("run_seconds", fmt_num(run_seconds, 4));
  m.section("files");
  std::string files;
  for (const auto& n : out.names()) files += (files.empty() ? "" : " ") + n;
  m.add("files", files + " manifest.txt");
  write_text_file(out.path("manifest.txt"), m.text());
  std::cout << "classical: " << sec.points.size() << " section points written to " << out.dir().string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// qsd / jumps

struct QuantumSettings {
  std::size_t dim = 256;
  std::string center_spec = "bias";
  double center = 0.0;
  std::size_t steps_per_period = 4096;
  std::size_t n_periods = 200;
  std::size_t transient_periods = 50;
  std::size_t record_stride = 64;
  std::uint64_t seed = 1;
  std::string seed_source = "config";
  std::size_t n_traj = 1;
  double initial_phi = 0.0;
  double initial_phidot = 0.0;
  double truncation_tol = 1e-8;
  double max_dt_norm = 1.0;
  std::size_t jump_substeps = 0;
  std::optional<std::uint64_t> baseline_seed;
};

std::uint64_t parse_seed(const std::string& text, const std::string& where) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError(where + ": expected a non-negative integer seed, got '" + text + "'");
  return v;
}

QuantumSettings quantum_settings(KeyValueConfig& cfg, const DriveSignal& drive) {
  QuantumSettings s;
  s.dim = cfg.integer_or("basis_dim", s.dim);
  if (auto c = cfg.get("basis_center")) {
    s.center_spec = *c;
  }
  if (s.center_spec == "bias") {
    s.center = drive.x_bias;
  } else if (s.center_spec == "zero") {
    s.center = 0.0;
  } else {
    s.center = cfg.number("basis_center");
  }
  s.steps_per_period = cfg.integer_or("steps_per_period", s.steps_per_period);
  s.n_periods = cfg.integer_or("n_periods", s.n_periods);
  s.transient_periods = cfg.integer_or("transient_periods", s.transient_periods);
  s.record_stride = cfg.integer_or("record_stride", std::max<std::size_t>(1, s.steps_per_period / 64));
  s.seed = cfg.integer_or("seed", s.seed);
  if (const char* env = std::getenv("SQUIDQCT_SEED"); env && *env) {
    s.seed = parse_seed(env, "SQUIDQCT_SEED");
    s.seed_source = "SQUIDQCT_SEED";
  }
  s.n_traj = cfg.integer_or("n_traj", s.n_traj);
  s.initial_phi = cfg.number_or("initial_phi", 0.0);
  s.initial_phidot = cfg.number_or("initial_phidot", 0.0);
  s.truncation_tol = cfg.number_or("truncation_tol", s.truncation_tol);
  s.max_dt_norm = cfg.number_or("max_dt_norm", s.max_dt_norm);
  s.jump_substeps = cfg.integer_or("jump_substeps", s.jump_substeps);
  if (cfg.has("baseline_seed")) s.baseline_seed = cfg.integer_or("baseline_seed", 0);

  if (s.n_traj == 0) throw ConfigError("key 'n_traj' must be at least 1");
  if (s.transient_periods >= s.n_periods) throw ConfigError("key 'transient_periods' must be smaller than n_periods");
  if (!(s.truncation_tol > 0.0)) throw ConfigError("key 'truncation_tol' must be positive");
  if (s.baseline_seed && *s.baseline_seed == s.seed) throw ConfigError("key 'baseline_seed' must differ from seed");

  // Everything resolved goes back into the config so that config.resolved replays the run.
  cfg.set("basis_dim", std::to_string(s.dim));
  cfg.set("basis_center", s.center_spec);
  cfg.set("steps_per_period", std::to_string(s.steps_per_period));
  cfg.set("n_periods", std::to_string(s.n_periods));
  cfg.set("transient_periods", std::to_string(s.transient_periods));
  cfg.set("record_stride", std::to_string(s.record_stride));
  cfg.set("seed", std::to_string(s.seed));
  cfg.set("n_traj", std::to_string(s.n_traj));
  cfg.set("initial_phi", fmt_num(s.initial_phi));
  cfg.set("initial_phidot", fmt_num(s.initial_phidot));
  cfg.set("truncation_tol", fmt_num(s.truncation_tol));
  cfg.set("max_dt_norm", fmt_num(s.max_dt_norm));
  cfg.set("jump_substeps", std::to_string(s.jump_substeps));
  return s;
}

std::string quantum_plot(Unravelling kind) {
  std::string name = to_string(kind);
  return "# Poincare section from the " + name +
         " unravelling (gnuplot)\n"
         "set datafile separator ','\n"
         "set key autotitle columnhead\n"
         "set terminal pngcairo size 900,700\n"
         "set output 'section.png'\n"
         "set xlabel '<x> (Phi_0)'\n"
         "set ylabel '<p> (Phi_0)'\n"
         "plot 'section_flux.csv' using 1:2 with points pt 7 ps 0.3 lc rgb 'black' notitle\n"
         "set output 'section_dimensionless.png'\n"
         "set xlabel '<x>'\n"
         "set ylabel '<p>'\n"
         "plot 'section.csv' using 1:2 with points pt 7 ps 0.3 lc rgb 'black' notitle\n"
         "set output 'trajectory.png'\n"
         "set xlabel 'tau'\n"
         "set ylabel '<x>'\n"
         "plot 'trajectory.csv' using 1:2 with lines lw 0.5 notitle\n";
}

int cmd_quantum(const std::string& config_path, OutputSet& out, Unravelling kind, std::size_t workers) {
  auto cfg = KeyValueConfig::load(config_path);
  cfg.require_known(with_circuit({"basis_dim", "basis_center", "steps_per_period", "n_periods",
                                  "transient_periods", "record_stride", "seed", "n_traj", "initial_phi",
                                  "initial_phidot", "truncation_tol", "max_dt_norm", "jump_substeps",
                                  "baseline_seed"}));
  const auto rc = circuit_from_config(cfg);
  const auto d = derive(rc.scaled);
  const auto drive = make_drive(d);
  const auto s = quantum_settings(cfg, drive);
  if (workers == 0) throw ConfigError("--workers must be at least 1");

  BasisOptions opt;
  opt.center = s.center;
  const auto t_build = std::chrono::steady_clock::now();
  const auto ops = build_operators(s.dim, d, opt);
  const double build_seconds = seconds_since(t_build);

  const double x0 = d.x_per_phi0 * (s.initial_phi + d.phi_x);
  const double p0 = d.x_per_phi0 * s.initial_phidot;
  QuantumState init{coherent_state(s.dim, cplx(x0, p0) / std::sqrt(2.0), s.center), 0.0};
  auto tc = aligned_config(drive, s.steps_per_period, s.n_periods, s.transient_periods, init, kind);
  tc.record_stride = s.record_stride;
  tc.truncation_tol = s.truncation_tol;
  tc.max_dt_norm = s.max_dt_norm;
  tc.jump_substeps = s.jump_substeps;
  validate(tc, ops, drive);

  out.prepare();
  const auto t_run = std::chrono::steady_clock::now();
  const auto ens = run_ensemble(ops, drive, tc, s.n_traj, s.seed, workers);
  std::optional<TrajectorySeries> baseline;
  if (s.baseline_seed)
    baseline = run_trajectory(ops, drive, tc, NoiseStream(*s.baseline_seed, noise_kind_for(kind)));
  const double run_seconds = seconds_since(t_run);

  const bool single = s.n_traj == 1;
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < s.n_traj; ++k) seeds.push_back(split_seed(s.seed, k));

  auto finish_section = [&](const TrajectorySeries& series) {
    auto sec = quantum_poincare(series);
    sec.params_digest = params_digest(rc.scaled);
    return sec;
  };

  const auto sec = finish_section(ens.runs.front());
  if (single) {
    write_trajectory(out.path("trajectory.csv"), ens.runs.front());
  } else {
    for (std::size_t k = 0; k < s.n_traj; ++k) {
      char name[48];
      std::snprintf(name, sizeof name, "trajectory_%03zu.csv", k);
      write_trajectory(out.path(name), ens.runs[k]);
    }
    write_ensemble_summary(out.path("ensemble.csv"), ens.summary);
  }
  write_section(out.path("section.csv"), sec);
  write_section(out.path("section_flux.csv"), to_flux_quanta(sec, d));
  if (baseline) {
    const auto bsec = finish_section(*baseline);
    write_section(out.path("section_baseline.csv"), bsec);
    write_section(out.path("section_flux_baseline.csv"), to_flux_quanta(bsec, d));
  }
  write_text_file(out.path("config.resolved"), cfg.to_text());
  write_text_file(out.path("plot.gp"), quantum_plot(kind));

  double max_drift = 0.0, max_var = 0.0;
  std::uint64_t total_jumps = 0;
  for (const auto& run : ens.runs) {
    for (const auto& r : run.samples) {
      max_drift = std::max(max_drift, r.norm_drift);
      max_var = std::max(max_var, r.ex_x2 - r.ex_x * r.ex_x);
    }
    total_jumps += run.samples.back().cum_jumps;
  }

  Manifest m;
  m.add("command", to_string(kind));
  m.add("version", SQUIDQCT_VERSION);
  m.add("config_source", config_path);
  m.add("started_utc", utc_now());
  describe_circuit(m, rc, d);
  m.section("basis");
  m.add("basis_dim", std::to_string(s.dim));
  m.add("basis_center", s.center);
  m.add("basis_center_spec", s.center_spec);
  m.add("x_bias", drive.x_bias);
  m.add("x_amp", drive.x_amp);
  m.section("trajectory");
  m.add("unravelling", to_string(kind));
  m.add("scheme", kind == Unravelling::qsd ? "rk4_drift_euler_maruyama_noise" : "rk4_no_jump_drift_bernoulli_jumps");
  m.add("dt", tc.dt);
  m.add("steps_per_period", std::to_string(s.steps_per_period));
  m.add("n_periods", std::to_string(s.n_periods));
  m.add("transient_periods", std::to_string(s.transient_periods));
  m.add("record_stride", std::to_string(s.record_stride));
  m.add("initial_state", "coherent");
  m.add("initial_x", x0);
  m.add("initial_p", p0);
  m.add("truncation_tol", s.truncation_tol);
  m.add("max_dt_norm", s.max_dt_norm);
  m.add("stiffness", tc.dt * hamiltonian_norm_bound(ops, drive));
  m.add("jump_substeps", std::to_string(s.jump_substeps));
  m.add("drive_phase", sec.drive_phase);
  m.section("noise");
  m.add("generator", "philox4x32_10");
  m.add("seed", std::to_string(s.seed));
  m.add("seed_source", s.seed_source);
  m.add("n_traj", std::to_string(s.n_traj));
  std::string seed_list;
  for (auto v : seeds) seed_list += (seed_list.empty() ? "" : " ") + std::to_string(v);
  m.add("trajectory_seeds", seed_list);
  m.add("workers", std::to_string(workers));
  if (baseline) {
    m.add("baseline_seed", std::to_string(*s.baseline_seed));
    m.add("baseline_section", "section_baseline.csv");
    m.add("baseline_section_flux", "section_flux_baseline.csv");
  }
  m.section("diagnostics");
  m.add("section_points", std::to_string(sec.points.size()));
  m.add("section_trajectory", "0");
  m.add("max_norm_drift", max_drift);
  m.add("max_x_variance", max_var);
  m.add("total_jumps", std::to_string(total_jumps));
  m.section("timing");
  m.add("build_seconds", fmt_num(build_seconds, 4));
  m.add("run_seconds", fmt_num(run_seconds, 4));
  m.section("files");
  std::string files;
  for (const auto& n : out.names()) files += (files.empty() ? "" : " ") + n;
  m.add("files", files + " manifest.txt");
  write_text_file(out.path("manifest.txt"), m.text());
  std::cout << to_string(kind) << ": " << s.n_traj << " trajectory(ies), " << sec.points.size()
            << " section points written to " << out.dir().string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// spectrum

int cmd_spectrum(const std::string& config_path, OutputSet& out, std::optional<double> ratio_flag,
                 std::optional<std::size_t> frames_flag, std::optional<double> until_flag) {
  auto cfg = KeyValueConfig::load(config_path);
  cfg.require_known(with_circuit({"basis_dim", "n_levels", "density_threshold", "grid_points", "schedule_ratio",
                                  "schedule_frames", "schedule_until"}));
  const auto rc = circuit_from_config(cfg);
  const auto d = derive(rc.scaled);

  const std::size_t dim = cfg.integer_or("basis_dim", 256);
  SpectrumScanConfig sc;
  sc.n_levels = cfg.integer_or("n_levels", sc.n_levels);
  sc.density_threshold = cfg.number_or("density_threshold", sc.density_threshold);
  sc.grid_points = cfg.integer_or("grid_points", sc.grid_points);

  const double ratio = ratio_flag ? *ratio_flag : cfg.number_or("schedule_ratio", 0.99);
  std::optional<double> until = until_flag;
  if (!until && cfg.has("schedule_until")) until = cfg.number("schedule_until");
  std::size_t frames = frames_flag ? *frames_flag : cfg.integer_or("schedule_frames", 1);
  if (frames_flag && until_flag) throw ConfigError("--frames and --until are mutually exclusive");
  if (until && !frames_flag) frames = frames_until(ratio, *until);
  if (frames == 0) throw ConfigError("the schedule needs at least one frame");
  const auto schedule = geometric_schedule(ratio, frames);

  cfg.set("basis_dim", std::to_string(dim));
  cfg.set("n_levels", std::to_string(sc.n_levels));
  cfg.set("density_threshold", fmt_num(sc.density_threshold));
  cfg.set("grid_points", std::to_string(sc.grid_points));
  cfg.set("schedule_ratio", fmt_num(ratio));
  cfg.set("schedule_frames", std::to_string(frames));
  if (cfg.has("schedule_until")) {
    KeyValueConfig trimmed;
    for (const auto& k : cfg.keys())
      if (k != "schedule_until") trimmed.set(k, cfg.require(k));
    cfg = trimmed;
  }

  out.prepare();
  const auto t0 = std::chrono::steady_clock::now();
  auto index = open_out(out.path("index.csv"));
  index << "frame,hbar_scale,Omega,j_coeff,x_bias,file\n";
  auto eig = open_out(out.path("eigenvalues.csv"));
  eig << "hbar_scale,level,energy,x_lo,x_hi\n";
  std::size_t warnings = 0;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    sc.hbar_scale = schedule[i];
    const auto f = spectrum_scan(rc.scaled, sc, dim);
    char name[48];
    std::snprintf(name, sizeof name, "frame_%04zu.csv", i);
    write_spectrum_frame(out.path(name), f);
    append_eigenvalues(eig, f);
    index << i << ',' << fmt_num(f.hbar_scale) << ',' << fmt_num(f.Omega) << ',' << fmt_num(f.j_coeff) << ','
          << fmt_num(f.x_bias) << ',' << name << '\n';
    for (const auto& w : f.warnings) {
      std::cerr << "warning: frame " << i << " (scale " << fmt_num(f.hbar_scale, 6) << "): " << w << "\n";
      ++warnings;
    }
  }
  check_written(index, (out.dir() / "index.csv").string());
  check_written(eig, (out.dir() / "eigenvalues.csv").string());
  const double run_seconds = seconds_since(t0);

  write_text_file(out.path("config.resolved"), cfg.to_text());
  write_text_file(
      out.path("plot.gp"),
      "# One image per frame: potential with level extents at the density threshold (gnuplot)\n"
      "set datafile separator ','\n"
      "set key autotitle columnhead\n"
      "set terminal pngcairo size 900,700\n"
      "set xlabel 'x'\n"
      "set ylabel 'energy'\n"
      "n = " + std::to_string(frames) + "\n"
      "do for [i=0:n-1] {\n"
      "  s = real(system(sprintf(\"awk -F, 'NR==%d {print $2}' index.csv\", i + 2)))\n"
      "  set output sprintf('frame_%04d.png', i)\n"
      "  set title sprintf('hbar scale %.6g', s)\n"
      "  plot sprintf('frame_%04d.csv', i) using 1:2 with lines lc rgb 'black' notitle, \\\n"
      "       'eigenvalues.csv' using (abs($1 - s) < 1e-12 * s ? $4 : NaN):3:($5 - $4):(0) "
      "with vectors nohead lc rgb 'red' notitle\n"
      "}\n");

  Manifest m;
  m.add("command", "spectrum");
  m.add("version", SQUIDQCT_VERSION);
  m.add("config_source", config_path);
  m.add("started_utc", utc_now());
  describe_circuit(m, rc, d);
  m.section("scan");
  m.add("basis_dim", std::to_string(dim));
  m.add("n_levels", std::to_string(sc.n_levels));
  m.add("density_threshold", sc.density_threshold);
  m.add("grid_points", std::to_string(sc.grid_points));
  m.add("schedule_ratio", ratio);
  m.add("schedule_frames", std::to_string(frames));
  m.add("final_hbar_scale", schedule.back());
  m.add("held_fixed", "j_coeff phi_x");
  m.add("warnings", std::to_string(warnings));
  m.section("timing");
  m.add("run_seconds", fmt_num(run_seconds, 4));
  write_text_file(out.path("manifest.txt"), m.text());
  std::cout << "spectrum: " << frames << " frame(s) written to " << out.dir().string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// compare

std::optional<std::string> manifest_value(const fs::path& manifest, const std::string& key) {
  std::error_code ec;
  if (!fs::exists(manifest, ec)) return std::nullopt;
  try {
    const auto m = KeyValueConfig::load(manifest.string());
    return m.get(key);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::string bounds_text(const SectionBounds& b) {
  return "u_min=" + fmt_num(b.u_min, 10) + " u_max=" + fmt_num(b.u_max, 10) + " v_min=" + fmt_num(b.v_min, 10) +
         " v_max=" + fmt_num(b.v_max, 10);
}

int cmd_compare(const std::string& path_a, const std::string& path_b, std::size_t bins) {
  if (bins == 0) throw ConfigError("--bins must be positive");
  const auto a = read_section(path_a);
  const auto b = read_section(path_b);
  if (a.drive_phase != b.drive_phase)
    std::cerr << "warning: drive_phase differs ('" << a.drive_phase << "' vs '" << b.drive_phase << "')\n";
  if (a.units != b.units)
    std::cerr << "warning: units differ ('" << to_string(a.units) << "' vs '" << to_string(b.units) << "')\n";
  if (a.params_digest != b.params_digest)
    std::cerr << "warning: sections come from different circuit parameters\n";

  const HistogramBins hb{bins, bins};
  const auto r = section_overlap(a, b, hb);
  std::ostringstream line;
  line << "coefficient=" << fmt_num(r.coefficient, 10) << " bins=" << bins << "x" << bins << " "
       << bounds_text(r.bounds) << " source_a=" << to_string(a.source) << " source_b=" << to_string(b.source)
       << " points_a=" << a.points.size() << " points_b=" << b.points.size();

  const fs::path dir_a = fs::path(path_a).parent_path();
  const auto key = a.units == SectionUnits::flux_quanta ? "baseline_section_flux" : "baseline_section";
  if (auto base = manifest_value(dir_a / "manifest.txt", key)) {
    const fs::path base_path = dir_a / *base;
    const auto baseline = read_section(base_path.string());
    const auto rb = section_overlap(a, baseline, hb);
    line << " baseline_coefficient=" << fmt_num(rb.coefficient, 10)
         << " delta=" << fmt_num(r.coefficient - rb.coefficient, 10) << " baseline_file=" << base_path.string();
  } else {
    line << " baseline_coefficient=none";
  }
  std::cout << line.str() << "\n";
  return 0;
}

int exit_code(ExitCode c) { return static_cast<int>(c); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-classical correspondence toolkit for the driven SQUID ring"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SQUIDQCT_VERSION);

  std::string config, out_dir, sec_a, sec_b;
  std::size_t workers = 1, bins = 128;
  std::optional<double> ratio, until;
  std::optional<std::size_t> frames;

  auto* derive_cmd = app.add_subcommand("derive", "Print the dimensionless groups of a circuit");
  derive_cmd->add_option("config", config, "Circuit config file")->required();

  auto* classical_cmd = app.add_subcommand("classical", "Integrate the RSJ equation and take its Poincare section");
  classical_cmd->add_option("config", config, "Config file")->required();
  classical_cmd->add_option("-o,--out", out_dir, "Output directory")->required();

  auto* qsd_cmd = app.add_subcommand("qsd", "Quantum state diffusion trajectories");
  auto* jumps_cmd = app.add_subcommand("jumps", "Quantum jump trajectories");
  for (auto* c : {qsd_cmd, jumps_cmd}) {
    c->add_option("config", config, "Config file")->required();
    c->add_option("-o,--out", out_dir, "Output directory")->required();
    c->add_option("-w,--workers", workers, "Trajectories run concurrently")->capture_default_str();
  }

  auto* spectrum_cmd = app.add_subcommand("spectrum", "Static spectrum while hbar is scaled down frame by frame");
  spectrum_cmd->add_option("config", config, "Config file")->required();
  spectrum_cmd->add_option("-o,--out", out_dir, "Output directory")->required();
  spectrum_cmd->add_option("--ratio", ratio, "Scale ratio between frames");
  spectrum_cmd->add_option("--frames", frames, "Number of frames");
  spectrum_cmd->add_option("--until", until, "Final hbar scale (sets the frame count)");

  auto* compare_cmd = app.add_subcommand("compare", "Histogram overlap of two section files");
  compare_cmd->add_option("a", sec_a, "First section file")->required();
  compare_cmd->add_option("b", sec_b, "Second section file")->required();
  compare_cmd->add_option("--bins", bins, "Bins per axis")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ExitCode::config);
  }

  OutputSet out{fs::path(out_dir.empty() ? "." : out_dir)};
  try {
    if (*derive_cmd) return cmd_derive(config);
    if (*classical_cmd) return cmd_classical(config, out);
    if (*qsd_cmd) return cmd_quantum(config, out, Unravelling::qsd, workers);
    if (*jumps_cmd) return cmd_quantum(config, out, Unravelling::jumps, workers);
    if (*spectrum_cmd) return cmd_spectrum(config, out, ratio, frames, until);
    if (*compare_cmd) return cmd_compare(sec_a, sec_b, bins);
  } catch (const ConfigError& e) {
    out.discard();
    std::cerr << "config error: " << e.what() << "\n";
    return exit_code(ExitCode::config);
  } catch (const NumericalAbort& e) {
    out.discard();
    std::cerr << "numerical abort: " << e.what() << "\n";
    return exit_code(ExitCode::numerical);
  } catch (const SectionError& e) {
    out.discard();
    std::cerr << "section error: " << e.what() << "\n";
    return exit_code(ExitCode::numerical);
  } catch (const IoError& e) {
    out.discard();
    std::cerr << "i/o error: " << e.what() << "\n";
    return exit_code(ExitCode::io);
  }
  return 0;
}
