// ttipt command-line tool
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ttipt/blas_guard.hpp"
#include "ttipt/experiments.hpp"
#include "ttipt/pt_io.hpp"

extern "C" void openblas_set_num_threads(int);

namespace fs = std::filesystem;
using namespace ttipt;

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  std::string variant;
  int threads = 1;
  std::string pt;
  std::string suite = "All";
  double tolerance = 0;
};

struct Context {
  RunConfig cfg;
  std::string hash;
};

Context load(const Options& o) {
  if (o.config.empty()) throw DomainError("--config is required for this command");
  Context c;
  c.cfg = load_config(o.config);
  if (!o.variant.empty()) c.cfg.pt.variant = variant_from(o.variant);
  c.hash = config_hash(c.cfg);
  return c;
}

fs::path out_path(const Options& o, const std::string& name) {
  fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create output directory '" + o.out + "': " + ec.message());
  fs::path p(name);
  return p.is_absolute() ? p : dir / p;
}

// CSV with the version/hash comment line first.
class Csv {
 public:
  Csv(const fs::path& p, const std::string& hash, const std::vector<std::string>& cols)
      : f_(p), path_(p.string()) {
    if (!f_) throw FormatError("cannot open '" + path_ + "' for writing");
    f_ << "# ttipt " << kVersion << " config " << hash << "\n";
    for (std::size_t i = 0; i < cols.size(); ++i) f_ << (i ? "," : "") << cols[i];
    f_ << "\n" << std::setprecision(12);
  }
  template <class... T>
  void row(const T&... v) {
    bool first = true;
    ((f_ << (first ? "" : ",") << v, first = false), ...);
    f_ << "\n";
  }
  void row(const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) f_ << (i ? "," : "") << v[i];
    f_ << "\n";
  }
  const std::string& path() const { return path_; }

 private:
  std::ofstream f_;
  std::string path_;
};

std::vector<std::string> default_observables(const SystemModel& m) {
  if (m.qubit_dim() == 1) return {"n", "x"};
  return {"sigma_z", "n"};
}

cmat initial_state(const RunConfig& c) {
  if (c.run.random_seed != 0) return random_density(c.model.dim(), c.run.random_seed);
  return basis_state(c.model, c.run.initial_qubit, c.run.initial_n);
}

double total_time(const RunConfig& c) { return c.run.n_steps * c.pt.dt; }

// Chain length from the light cone of a hard-cutoff chain, with margin.
int auto_chain_modes(double omega_max, double omega_r, double T) {
  const double v = std::sqrt(std::max(omega_r * (omega_max - omega_r), 1e-12));
  return static_cast<int>(std::ceil(0.6 * v * T)) + 50;
}

void print_steps(const ProcessTensor& pt, int last) {
  const auto& s = pt.meta.steps;
  const std::size_t from = s.size() > std::size_t(last) ? s.size() - last : 0;
  std::cout << "step  chi  alpha  beta1  beta2  peak\n";
  for (std::size_t i = from; i < s.size(); ++i)
    std::cout << s[i].k << "  " << s[i].chi << "  " << s[i].alpha << "  " << s[i].beta1
              << "  " << s[i].beta2 << "  " << s[i].peak << "\n";
}

}  // namespace

namespace cmd {

int build_pt(const Options& o) {
  Context c = load(o);
  auto eta = make_eta(c.cfg);
  auto t0 = std::chrono::steady_clock::now();
  ProcessTensor pt = build_tti_pt(eta, coupling_spectrum(c.cfg.model), build_options(c.cfg),
                                  &c.cfg.bath);
  const double secs = seconds_since(t0);
  const fs::path p = out_path(o, c.cfg.run.pt_file);
  save_pt(pt, p.string());
  print_steps(pt, 5);
  std::cout << "variant " << to_string(pt.meta.variant) << " d " << pt.d << " chi " << pt.chi
            << " peak_elements " << pt.meta.peak_elements << " wall_seconds " << secs << "\n"
            << "wrote " << p.string() << " (+ .json), config " << c.hash << "\n";
  return 0;
}

int evolve(const Options& o) {
  Context c = load(o);
  const auto& cfg = c.cfg;
  const std::string ptfile = o.pt.empty() ? out_path(o, cfg.run.pt_file).string() : o.pt;
  ProcessTensor pt = load_pt(ptfile);
  if (std::abs(pt.meta.dt - cfg.pt.dt) > 1e-12 * cfg.pt.dt)
    throw DomainError("process tensor dt " + std::to_string(pt.meta.dt) +
                      " differs from config pt.dt " + std::to_string(cfg.pt.dt));
  auto names = cfg.run.observables.empty() ? default_observables(cfg.model) : cfg.run.observables;
  EvolveOptions eo;
  eo.symmetric = cfg.run.symmetric;
  eo.record_stride = cfg.run.record_stride;
  eo.snapshot_stride = cfg.run.snapshot_stride;
  auto tr = ttipt::evolve(pt, cfg.model, initial_state(cfg), cfg.run.n_steps,
                          observables(cfg.model, names), eo);
  std::vector<std::string> cols{"t"};
  for (const auto& n : names) cols.push_back(n);
  cols.push_back("trace_drift");
  Csv csv(out_path(o, cfg.run.output), c.hash, cols);
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    std::vector<double> r{tr.t[i]};
    for (const auto& n : names) r.push_back(tr[n][i].real());
    r.push_back(tr.trace_drift[i]);
    csv.row(r);
  }
  std::cout << "wrote " << csv.path() << " (" << tr.t.size() << " samples, "
            << tr.wall_seconds << " s)\n";
  if (!tr.snapshots.empty()) {
    Csv s(out_path(o, fs::path(cfg.run.output).stem().string() + "_snapshots.csv"), c.hash,
          {"t", "i", "j", "re", "im"});
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k)
      for (Eigen::Index i = 0; i < tr.snapshots[k].rows(); ++i)
        for (Eigen::Index j = 0; j < tr.snapshots[k].cols(); ++j)
          s.row(tr.snapshot_t[k], i, j, tr.snapshots[k](i, j).real(), tr.snapshots[k](i, j).imag());
    std::cout << "wrote " << s.path() << "\n";
  }
  return 0;
}

int oracle(const Options& o) {
  Context c = load(o);
  const auto& cfg = c.cfg;
  const double T = total_time(cfg);
  const double dt_out = cfg.oracle.dt_out > 0 ? cfg.oracle.dt_out : cfg.pt.dt;
  const fs::path p = out_path(o, "oracle_" + cfg.oracle.kind + ".csv");
  if (cfg.oracle.kind == "lindblad") {
    const double kappa = 2 * PI * spectral_density(cfg.bath, cfg.model.omega_r);
    auto names = cfg.run.observables.empty() ? default_observables(cfg.model) : cfg.run.observables;
    std::vector<std::string> cols{"t"};
    for (const auto& n : names) cols.push_back(n);
    Csv csv(p, c.hash, cols);
    std::vector<cmat> ops;
    for (const auto& n : names) ops.push_back(observable(cfg.model, n));
    LindbladOptions lo;
    lo.keep_stride = 0;
    lo.on_sample = [&](double t, const cmat& r) {
      std::vector<double> row{t};
      for (const auto& op : ops) row.push_back((op * r).trace().real());
      csv.row(row);
    };
    auto res = lindblad_solve(cfg.model, kappa, initial_state(cfg), T, dt_out, lo);
    std::cout << "lindblad kappa " << kappa << " max trace error " << res.max_trace_error
              << " min eigenvalue " << res.min_eigenvalue << "\n";
  } else if (cfg.oracle.kind == "gaussian") {
    ChainOptions co;
    co.omega_max = cfg.oracle.omega_max > 0 ? cfg.oracle.omega_max : 8 * cfg.bath.omega_c;
    const int M = cfg.oracle.chain_modes > 0
                      ? cfg.oracle.chain_modes
                      : auto_chain_modes(co.omega_max, cfg.model.omega_r, T);
    auto ex = exact_gaussian_dynamics(chain_map(cfg.bath, M, co), cfg.model, T, dt_out);
    Csv csv(p, c.hash, {"t", "n", "x"});
    for (std::size_t i = 0; i < ex.t.size(); ++i) csv.row(ex.t[i], ex.n[i], ex.x[i]);
    std::cout << "gaussian oracle: " << M << " chain modes, omega_max " << co.omega_max
              << ", horizon " << ex.horizon << ", " << ex.wall_seconds << " s\n";
  } else {
    auto eta = make_eta(cfg);
    auto path = brute_force_path(eta, cfg.model, initial_state(cfg), cfg.run.n_steps);
    auto names = cfg.run.observables.empty() ? default_observables(cfg.model) : cfg.run.observables;
    std::vector<std::string> cols{"t"};
    for (const auto& n : names) cols.push_back(n);
    Csv csv(p, c.hash, cols);
    for (std::size_t i = 0; i < path.size(); ++i) {
      std::vector<double> row{(i + 1) * cfg.pt.dt};
      for (const auto& n : names) row.push_back((observable(cfg.model, n) * path[i]).trace().real());
      csv.row(row);
    }
  }
  std::cout << "wrote " << p.string() << "\n";
  return 0;
}

std::vector<BuildReport> sweep(const RunConfig& cfg, const std::vector<Variant>& variants) {
  std::vector<int> ds = cfg.benchmark.d.empty() ? std::vector<int>{cfg.model.N} : cfg.benchmark.d;
  auto eta = make_eta(cfg);
  std::vector<BuildReport> out;
  for (int d : ds)
    for (Variant v : variants) {
      BuildOptions bo = build_options(cfg);
      bo.variant = v;
      bo.dense_gate = v == Variant::Baseline;
      out.push_back(timed_build(eta, d, bo, cfg.benchmark.repetitions));
      const auto& r = out.back();
      std::cout << "d " << d << " " << to_string(v) << " " << r.seconds << " s, chi " << r.chi
                << ", peak " << r.peak << "\n";
    }
  return out;
}

void write_sweep(const fs::path& p, const std::string& hash, const std::vector<BuildReport>& rs) {
  Csv csv(p, hash, {"d", "variant", "seconds", "peak_elements", "chi", "alpha", "beta1", "beta2",
                    "peak_within_bound"});
  for (const auto& r : rs)
    csv.row(r.d, to_string(r.variant), r.seconds, r.peak, r.chi, r.last.alpha, r.last.beta1,
            r.last.beta2, int(r.peak_within_bound));
  std::cout << "wrote " << csv.path() << "\n";
}

void report_slopes(const std::vector<BuildReport>& rs) {
  std::vector<double> xb, yb, xe, ye;
  for (const auto& r : rs) {
    auto& x = r.variant == Variant::Baseline ? xb : xe;
    auto& y = r.variant == Variant::Baseline ? yb : ye;
    x.push_back(r.d);
    y.push_back(r.seconds);
  }
  if (xb.size() < 2 && xe.size() < 2) return;
  double sb = NAN, se = NAN;
  if (xb.size() >= 2) std::cout << "baseline slope " << (sb = loglog_slope(xb, yb)) << "\n";
  if (xe.size() >= 2) std::cout << "enhanced slope " << (se = loglog_slope(xe, ye)) << "\n";
  if (std::isfinite(sb) && std::isfinite(se)) std::cout << "slope difference " << se - sb << "\n";
}

int benchmark(const Options& o) {
  Context c = load(o);
  std::vector<Variant> vs{Variant::Baseline, Variant::Enhanced};
  if (!o.variant.empty()) vs = {c.cfg.pt.variant};
  auto rs = sweep(c.cfg, vs);
  write_sweep(out_path(o, "benchmark.csv"), c.hash, rs);
  report_slopes(rs);
  return 0;
}

// ---- validation suites at desk scale ----

struct Check {
  std::string name;
  double measured = 0, required = 0;
  bool pass() const { return measured <= required; }
};

int report(const std::vector<Check>& cs) {
  bool ok = true;
  for (const auto& c : cs) {
    std::cout << (c.pass() ? "PASS " : "FAIL ") << c.name << ": measured " << c.measured
              << ", required <= " << c.required << "\n";
    ok = ok && c.pass();
  }
  return ok ? 0 : 2;
}

std::vector<Check> suite_brute(const Options& o) {
  std::vector<Check> out;
  const double tol = o.tolerance > 0 ? o.tolerance : 1e-8;
  if (!o.pt.empty()) {
    ProcessTensor pt = load_pt(o.pt);
    BruteForceReport r;
    for (int steps = 6;; --steps) {
      try {
        r = brute_force_check(pt, steps);
        break;
      } catch (const ResourceError&) {
        if (steps == 1) throw;
      }
    }
    const double stored_tol = o.tolerance > 0 ? o.tolerance : std::max(1e-8, 10 * pt.meta.eps_rel);
    out.push_back({"BruteForce stored tensor d=" + std::to_string(r.d) + " k=" +
                       std::to_string(r.k_max) + " over " + std::to_string(r.steps) + " steps",
                   r.max_dev, stored_tol});
    return out;
  }
  for (Variant v : {Variant::Baseline, Variant::Enhanced})
    for (int k : {0, 2, 4}) {
      auto r = brute_force_check(2, k, v, 8);
      out.push_back({"BruteForce d=2 k=" + std::to_string(k) + " " + to_string(v), r.max_dev, tol});
    }
  return out;
}

std::vector<Check> suite_gaussian(const Options& o) {
  SystemModel m;
  m.N = 10;
  m.drive = {0.03, 1.0};
  PtConfig p;
  p.dt = 2 * PI / 62;
  p.k_max = 150;
  p.eps_rel = 1e-6;
  p.tol_inner = 1e-8;
  ChainOptions co;
  co.omega_max = 24;
  const double T = 150;
  auto g = gaussian_compare(ohmic(1e-3, 3), m, p, T, auto_chain_modes(24, 1, T), co);
  return {{"GaussianOracle relative error of <n>", g.max_rel_err,
           o.tolerance > 0 ? o.tolerance : 0.02}};
}

std::vector<Check> suite_lindblad(const Options& o) {
  SystemModel m;
  m.kind = ModelKind::JaynesCummings;
  m.N = 5;
  m.omega_q = 0.70720;
  m.g = 0.028133;
  PtConfig p;
  p.dt = 2 * PI / 62;
  p.k_max = 150;
  p.eps_rel = 1e-7;
  p.tol_inner = 1e-8;
  auto c = lindblad_compare(flat(1e-4, 1.0), m, p, 600, 10);
  return {{"Lindblad max infidelity", c.max_infidelity, o.tolerance > 0 ? o.tolerance : 0.005}};
}

int validate(const Options& o) {
  const std::string s = o.suite;
  if (s != "All" && s != "BruteForce" && s != "GaussianOracle" && s != "Lindblad")
    throw DomainError("unknown suite '" + s + "' (BruteForce, GaussianOracle, Lindblad, All)");
  std::vector<Check> cs;
  auto add = [&](std::vector<Check> v) { cs.insert(cs.end(), v.begin(), v.end()); };
  if (s == "All" || s == "BruteForce") {
    try {
      add(suite_brute(o));
    } catch (const FormatError& e) {
      std::cout << "FAIL BruteForce: " << e.what() << "\n";
      return 1;
    }
  }
  if (s == "All" || s == "GaussianOracle") add(suite_gaussian(o));
  if (s == "All" || s == "Lindblad") add(suite_lindblad(o));
  return report(cs);
}

int figures(const Options& o) {
  Context c = load(o);
  const auto& cfg = c.cfg;
  auto eta = make_eta(cfg);
  Csv bonds(out_path(o, "fig_bonds.csv"), c.hash,
            {"variant", "k", "chi", "alpha", "beta1", "beta2", "seconds"});
  ProcessTensor enhanced;
  for (Variant v : {Variant::Baseline, Variant::Enhanced}) {
    BuildOptions bo = build_options(cfg);
    bo.variant = v;
    ProcessTensor pt = build_tti_pt(eta, coupling_spectrum(cfg.model), bo, &cfg.bath);
    for (const auto& s : pt.meta.steps)
      bonds.row(to_string(v), s.k, s.chi, s.alpha, s.beta1, s.beta2, s.seconds);
    std::cout << to_string(v) << " chi " << pt.chi << "\n";
    if (v == Variant::Enhanced) enhanced = std::move(pt);
  }
  std::cout << "wrote " << bonds.path() << "\n";
  std::ofstream gp(out_path(o, "figures.gp"));
  gp << "# gnuplot script for the data files next to it\n"
     << "set datafile separator ','\nset key autotitle columnhead\n"
     << "set terminal pngcairo size 900,600\n"
     << "set output 'fig_bonds.png'\nset xlabel 'k'\nset ylabel 'bond dimension'\n"
     << "plot for [c=3:6] 'fig_bonds.csv' every ::1 using 2:c with lines\n";
  if (!cfg.benchmark.d.empty()) {
    auto rs = sweep(cfg, {Variant::Baseline, Variant::Enhanced});
    write_sweep(out_path(o, "fig_scaling.csv"), c.hash, rs);
    report_slopes(rs);
    gp << "set output 'fig_scaling.png'\nset logscale xy\nset xlabel 'd'\n"
       << "set ylabel 'wall time [s]'\n"
       << "plot 'fig_scaling.csv' using 1:(strcol(2) eq 'baseline' ? $3 : 1/0) title 'baseline' with lp, \\\n"
       << "     'fig_scaling.csv' using 1:(strcol(2) eq 'enhanced' ? $3 : 1/0) title 'enhanced' with lp\n"
       << "unset logscale\n";
  }
  if (cfg.run.n_steps > 0) {
    auto names = cfg.run.observables.empty() ? default_observables(cfg.model) : cfg.run.observables;
    EvolveOptions eo;
    eo.record_stride = cfg.run.record_stride;
    eo.symmetric = cfg.run.symmetric;
    auto tr = ttipt::evolve(enhanced, cfg.model, initial_state(cfg), cfg.run.n_steps,
                            observables(cfg.model, names), eo);
    std::vector<std::string> cols{"t"};
    for (const auto& n : names) cols.push_back(n);
    Csv dyn(out_path(o, "fig_dynamics.csv"), c.hash, cols);
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
      std::vector<double> r{tr.t[i]};
      for (const auto& n : names) r.push_back(tr[n][i].real());
      dyn.row(r);
    }
    std::cout << "wrote " << dyn.path() << "\n";
    gp << "set output 'fig_dynamics.png'\nset xlabel 't'\nset ylabel 'expectation'\n"
       << "plot for [c=2:" << names.size() + 1 << "] 'fig_dynamics.csv' every ::1 using 1:c with lines\n";
  }
  std::cout << "wrote " << out_path(o, "figures.gp").string() << "\n";
  return 0;
}

}  // namespace cmd

int main(int argc, char** argv) {
  select_blas_kernel(argv);
  CLI::App app{"Time-translationally invariant process tensors"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* s, bool need_config = true) {
    auto* c = s->add_option("--config", o.config, "JSON run configuration");
    if (need_config) c->required()->check(CLI::ExistingFile);
    s->add_option("--out", o.out, "output directory")->capture_default_str();
    s->add_option("--variant", o.variant, "baseline or enhanced")
        ->check(CLI::IsMember({"baseline", "enhanced"}));
    s->add_option("--threads", o.threads, "BLAS threads")->check(CLI::PositiveNumber);
  };
  auto* build = app.add_subcommand("build-pt", "build and store a process tensor");
  common(build);
  auto* evo = app.add_subcommand("evolve", "propagate the configured model with a stored tensor");
  common(evo);
  evo->add_option("--pt", o.pt, "process tensor file (default: <out>/run.pt_file)");
  auto* orc = app.add_subcommand("oracle", "run the configured reference solver");
  common(orc);
  auto* bench = app.add_subcommand("benchmark", "build-time sweep over d for both variants");
  common(bench);
  auto* val = app.add_subcommand("validate", "pass/fail suites against the reference solvers");
  common(val, false);
  val->add_option("--suite", o.suite, "BruteForce, GaussianOracle, Lindblad or All")
      ->capture_default_str();
  val->add_option("--tolerance", o.tolerance, "override the pass threshold of the chosen suites");
  val->add_option("--pt", o.pt, "stored tensor to check in the BruteForce suite");
  auto* fig = app.add_subcommand("figures", "emit figure data and a gnuplot script");
  common(fig);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  openblas_set_num_threads(o.threads);
  try {
    if (*build) return cmd::build_pt(o);
    if (*evo) return cmd::evolve(o);
    if (*orc) return cmd::oracle(o);
    if (*bench) return cmd::benchmark(o);
    if (*val) return cmd::validate(o);
    if (*fig) return cmd::figures(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
