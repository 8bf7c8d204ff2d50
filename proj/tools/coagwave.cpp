// coagwave: command-line front end.

#include "coagwave/csv.hpp"
#include "coagwave/equilibria.hpp"
#include "coagwave/models.hpp"
#include "coagwave/params.hpp"
#include "coagwave/rdsolver.hpp"
#include "coagwave/speed_formulas.hpp"
#include "coagwave/sweep.hpp"
#include "coagwave/wavefront.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace coagwave;

namespace {

struct Common {
  std::string config = COAGWAVE_DEFAULT_CONFIG;
  std::vector<std::string> overrides;
  std::string out = "out";
  std::size_t jobs = 1;
  std::string model = "reduced6";
  int n = 3;
  double b = 10.0;
  double sigma = 0.01;
};

void add_common(CLI::App* app, Common& c, bool with_model = true) {
  app->add_option("--config", c.config, "INI config file")->capture_default_str();
  app->add_option("--param", c.overrides, "KEY=VALUE override, repeatable (domain keys: L, N, t_end, snapshot_every)");
  app->add_option("--out", c.out, "output directory")->capture_default_str();
  app->add_option("--jobs", c.jobs, "worker threads")->capture_default_str();
  if (with_model) {
    app->add_option("--model", c.model, "reduced6 | two_eq | one_eq | full14 | scalar")->capture_default_str();
    app->add_option("--n", c.n, "scalar model exponent")->capture_default_str();
    app->add_option("--b", c.b, "scalar model rate")->capture_default_str();
    app->add_option("--sigma", c.sigma, "scalar model decay")->capture_default_str();
  }
}

Config load(const Common& c) {
  Config cfg = load_config(c.config);
  for (const auto& o : c.overrides) apply_override(cfg, o);
  // r2_bar tracks k2_bar unless it was overridden itself
  bool r2_set = false;
  for (const auto& o : c.overrides) r2_set = r2_set || o.rfind("r2_bar=", 0) == 0;
  if (!r2_set) cfg.params.r2_bar = cfg.params.k2_bar * cfg.params.K2m_bar / cfg.params.T0;
  validate(cfg.params);
  return cfg;
}

ModelKind model_of(const Common& c) {
  if (c.model == "scalar") return ModelKind::scalar(c.n, c.b, c.sigma);
  return parse_model(c.model);
}

std::string path_in(const Common& c, const std::string& name) {
  fs::create_directories(c.out);
  return (fs::path(c.out) / name).string();
}

RunManifest manifest(const Config& cfg, const std::string& command) {
  return RunManifest::for_config(cfg).add("command", command);
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Common& c, bool reaction, const std::string& scheme) {
  const Config cfg = load(c);
  const auto kind = model_of(c);
  const Grid1D grid(cfg.domain.length, static_cast<std::size_t>(cfg.domain.nodes));
  SimOptions opt;
  opt.reaction = reaction;
  if (scheme == "semi-implicit") opt.scheme = Scheme::SemiImplicit;
  else if (scheme != "explicit") throw CLI::ValidationError("--scheme", "expected explicit or semi-implicit");
  const auto ic = default_ic(kind, cfg.params, grid);
  const auto field = simulate(kind, cfg.params, grid, ic, cfg.domain.t_end, cfg.domain.snapshot_every, opt);
  for (const auto& l : field.log) std::cerr << "[simulate] " << l << "\n";

  auto m = manifest(cfg, "simulate")
               .add("model", kind.name())
               .add("length", fmt(grid.length))
               .add("nodes", std::to_string(grid.nodes))
               .add("reaction", reaction ? "on" : "off");

  // profiles.csv: t, x, one column per species
  std::vector<std::string> header{"t", "x"};
  for (auto n : kind.component_names()) header.emplace_back(n);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t s = 0; s < field.size(); ++s)
    for (std::size_t i = 0; i < grid.nodes; ++i) {
      std::vector<std::string> r{fmt(field.times[s]), fmt(grid.x(i))};
      for (std::size_t k = 0; k < kind.dim(); ++k) r.push_back(fmt(field.component(s, k)[i]));
      rows.push_back(std::move(r));
    }
  write_csv(path_in(c, "profiles.csv"), m, header, rows);

  // gnuplot profile stack: one block per snapshot
  {
    std::ofstream dat(path_in(c, "stack.dat"));
    for (std::size_t s = 0; s < field.size(); ++s) {
      dat << "# t = " << fmt(field.times[s]) << "\n";
      const auto T = field.thrombin(s);
      for (std::size_t i = 0; i < grid.nodes; ++i) dat << fmt(grid.x(i)) << " " << fmt(T[i]) << "\n";
      dat << "\n\n";
    }
    std::ofstream gp(path_in(c, "stack.gp"));
    gp << "set xlabel 'x (mm)'\nset ylabel '" << (kind.is_coagulation() ? "T (nM)" : "u") << "'\n"
       << "unset key\nplot 'stack.dat' index 0:" << field.size() - 1 << " using 1:2 with lines lc rgb 'black'\n";
  }

  if (!reaction) {
    std::cout << "component,mass_start,mass_end,relative_change\n";
    for (std::size_t k = 0; k < kind.dim(); ++k) {
      const double m0 = total_mass(field, 0, k), m1 = total_mass(field, field.size() - 1, k);
      std::cout << kind.component_names()[k] << "," << fmt(m0) << "," << fmt(m1) << ","
                << fmt(m0 != 0 ? (m1 - m0) / m0 : 0.0) << "\n";
    }
    return 0;
  }

  SpeedMeasurement sm;
  try {
    sm = measure_speed(field);
  } catch (const NoFrontError& e) {
    std::cerr << "no measurable front: " << e.what() << "\n";
    return 2;
  }
  std::vector<std::vector<std::string>> trace;
  for (const auto& p : sm.front_trace) trace.push_back({fmt(p.t), fmt(p.x)});
  write_csv(path_in(c, "front_trace.csv"), m, {"t", "x_front"}, trace);
  write_csv(path_in(c, "speed.csv"), m, {"model", "speed", "converged", "residual", "t_start", "t_end"},
            {{kind.name(), fmt(sm.speed), sm.converged ? "1" : "0", fmt(sm.residual), fmt(sm.t_start),
              fmt(sm.t_end)}});
  std::cout << "model " << kind.name() << ": speed " << fmt(sm.speed) << (kind.is_coagulation() ? " mm/min" : "")
            << ", converged " << (sm.converged ? "yes" : "no") << ", residual " << fmt(sm.residual) << "\n";
  return sm.converged ? 0 : 3;
}

int cmd_sweep(const Common& c, SweepSpec spec, const std::vector<double>& range_spec, bool log_range,
              const AutoDomain& domain) {
  const Config cfg = load(c);
  if (!range_spec.empty()) {
    if (range_spec.size() != 3) throw CLI::ValidationError("--range", "expected lo hi count");
    spec.values = SweepSpec::range(range_spec[0], range_spec[1], static_cast<std::size_t>(range_spec[2]), log_range);
  }
  spec.n = c.n;
  spec.b = c.b;
  spec.sigma = c.sigma;
  spec.validate();
  const auto rows = run_sweep(cfg.params, spec, domain, c.jobs);
  std::vector<std::vector<std::string>> out;
  for (const auto& r : rows) {
    out.push_back({fmt(r.value), r.model, fmt(r.speed), r.converged ? "1" : "0", r.note});
    std::cout << std::setw(12) << fmt(r.value) << "  " << std::setw(8) << r.model << "  " << std::setw(14)
              << fmt(r.speed) << "  " << (r.converged ? "converged" : "NOT converged") << "  " << r.note << "\n";
  }
  for (auto& row : out)
    for (auto& cell : row)
      for (auto& ch : cell)
        if (ch == ',') ch = ';';
  write_csv(path_in(c, "sweep.csv"), manifest(cfg, "sweep").add("param", spec.param), {spec.param, "model", "speed", "converged", "note"},
            out);
  return 0;
}

int cmd_equilibria(const Common& c, std::size_t trials, bool csv) {
  const Config cfg = load(c);
  const auto rep = classify(cfg.params);
  const auto& q = rep.coeffs;
  std::cout << std::setprecision(8);
  std::cout << "Q(T) = a T^3 + b T^2 + c T + d with a=" << q.a << " b=" << q.b << " c=" << q.c << " d=" << q.d
            << "\n";
  std::cout << "classification: " << to_string(rep.classification) << "\n";
  bool ok = rep.case_analysis_agrees;
  for (std::size_t i = 0; i < rep.roots.size(); ++i) {
    const auto& s = rep.stability[i];
    std::cout << "  T" << i + 1 << "* = " << std::setw(14) << s.T << "  P' " << (s.dP > 0 ? "> 0" : "< 0")
              << "  principal eigenvalue " << std::setw(14) << s.principal << "  residual " << s.residual
              << (s.degenerate ? "  (degenerate)" : "") << (s.stable ? "  stable" : "  unstable") << "\n";
    ok = ok && s.consistent && s.residual < 1e-8 * std::max(1.0, s.T);
  }
  if (rep.classification == Classification::Bistable && rep.roots.size() == 2)
    std::cout << "Bistable, roots T1*=" << rep.roots[0] << " < T2*=" << rep.roots[1] << "\n";
  if (trials > 0) {
    const auto th = verify_theorem1(cfg.params, trials);
    std::cout << "stability sign check (" << th.configs_tested << " perturbed configurations, " << th.degenerate
              << " degenerate roots skipped): " << (th.pass() ? "PASS" : "FAIL") << "\n";
    ok = ok && th.pass();
  }
  if (csv) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : rep.stability)
      rows.push_back({fmt(s.T), s.dP > 0 ? "+" : "-", fmt(s.principal), to_string(rep.classification)});
    write_csv(path_in(c, "equilibria.csv"), manifest(cfg, "equilibria"),
              {"root", "dP_sign", "principal_eigenvalue", "classification"}, rows);
  }
  if (!rep.case_analysis_agrees) std::cerr << "warning: case analysis and root isolation disagree on the root count\n";
  return ok ? 0 : 1;
}

void print_workpad(const AnalyticWorkpad& w) {
  std::cout << "  w*=" << fmt(w.w_star) << " A=" << fmt(w.A) << " alpha=" << fmt(w.alpha) << " beta=" << fmt(w.beta)
            << " r=" << fmt(w.r) << " r(expanded form)=" << fmt(w.r_printed) << " w0=" << fmt(w.w0)
            << " w_bar=" << fmt(w.w_bar) << "\n";
}

int cmd_speed(const Common& c, bool scalar, double measured, const std::string& from, bool csv) {
  const Config cfg = load(c);
  if (!from.empty()) measured = read_csv(from).number(0, "speed");
  std::vector<std::vector<std::string>> rows;
  if (scalar) {
    const auto e1 = narrow_zone_speed(c.n, c.b, c.sigma, cfg.params.D);
    std::cout << "scalar n=" << c.n << " b=" << fmt(c.b) << " sigma=" << fmt(c.sigma) << " D=" << fmt(cfg.params.D)
              << "\n";
    std::cout << "c1 (narrow zone)      = " << fmt(e1.value) << (e1.propagating ? "" : "  (no propagation)") << "\n";
    rows.push_back({"c1", fmt(e1.value)});
    try {
      const auto e2 = piecewise_linear_speed(c.n, c.b, c.sigma, cfg.params.D);
      std::cout << "c2 (piecewise linear) = " << fmt(e2.value) << "\n";
      print_workpad(e2.workpad);
      rows.push_back({"c2", fmt(e2.value)});
    } catch (const InvalidKinkError& e) {
      std::cout << "c2 unavailable: " << e.what() << "\n";
      print_workpad(e.workpad);
    }
  } else {
    const auto e = coag_speed_estimates(cfg.params);
    const auto& d = e.dimless;
    std::cout << "M1=" << fmt(d.M1) << " M2=" << fmt(d.M2) << " M3=" << fmt(d.M3) << " b=" << fmt(d.b)
              << " D~=" << fmt(d.D_tilde) << "\n";
    std::cout << "c1 (narrow zone)      = " << fmt(e.c1.value) << " mm/min\n";
    std::cout << "c2 (piecewise linear) = " << fmt(e.c2.value) << " mm/min\n";
    print_workpad(e.c2.workpad);
    std::cout << "with 1/h11 in b:  c1 = " << fmt(e.c1_h11) << "  c2 = " << fmt(e.c2_h11) << " mm/min\n";
    std::cout << "closed dimensional formulas: c1 = " << fmt(e.printed_c1) << "  c2 = " << fmt(e.printed_c2)
              << " (b = " << fmt(e.printed_b) << ")\n";
    rows = {{"c1", fmt(e.c1.value)},         {"c2", fmt(e.c2.value)},         {"c1_h11", fmt(e.c1_h11)},
            {"c2_h11", fmt(e.c2_h11)},       {"printed_c1", fmt(e.printed_c1)}, {"printed_c2", fmt(e.printed_c2)}};
    if (measured > 0)
      std::cout << "ratio to measured " << fmt(measured) << ": c1/c = " << fmt(e.c1.value / measured)
                << "  c2/c = " << fmt(e.c2.value / measured) << "\n";
  }
  if (csv) write_csv(path_in(c, "speed_estimates.csv"), manifest(cfg, "speed"), {"estimator", "value"}, rows);
  return 0;
}

// Rebuilds the last snapshot of a profiles.csv written by `simulate`.
TestProfile read_profile(const std::string& path, const Config& cfg, const Common& c, ModelKind& kind) {
  const auto t = read_csv(path);
  const std::string model = t.manifest.count("model") ? t.manifest.at("model") : c.model;
  kind = model == "scalar" ? ModelKind::scalar(c.n, c.b, c.sigma) : parse_model(model);
  const double last = t.number(t.rows.size() - 1, "t");
  std::vector<std::size_t> idx;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    if (t.number(r, "t") == last) idx.push_back(r);
  const Grid1D g(t.number(idx.back(), "x") - t.number(idx.front(), "x"), idx.size());
  TestProfile p{g, kind, {}};
  for (auto name : kind.component_names()) {
    std::vector<double> v;
    for (auto r : idx) v.push_back(t.number(r, std::string(name)));
    p.rho.push_back(std::move(v));
  }
  (void)cfg;
  return p;
}

int cmd_bounds(const Common& c, const std::string& profile_path, double measured) {
  const Config cfg = load(c);
  ModelKind kind = model_of(c);
  TestProfile prof;
  std::string speed_src;
  if (!profile_path.empty()) {
    prof = read_profile(profile_path, cfg, c, kind);
    const auto sp = (fs::path(profile_path).parent_path() / "speed.csv").string();
    if (measured <= 0 && fs::exists(sp)) {
      measured = read_csv(sp).number(0, "speed");
      speed_src = sp;
    }
  } else {
    const Grid1D grid(cfg.domain.length, static_cast<std::size_t>(cfg.domain.nodes));
    const auto f = simulate(kind, cfg.params, grid, default_ic(kind, cfg.params, grid), cfg.domain.t_end,
                            cfg.domain.snapshot_every);
    prof = TestProfile::from_field(f, f.size() - 1);
    if (measured <= 0) {
      measured = measure_speed(f).speed;
      speed_src = "fresh simulation";
    }
  }
  const auto br = minimax_bracket(prof, cfg.params);
  std::cout << "minimax bracket: [" << fmt(br.lower) << ", " << fmt(br.upper) << "]\n";
  for (std::size_t i = 0; i < br.components.size(); ++i) {
    const auto& r = br.components[i];
    std::cout << "  " << std::setw(4) << kind.component_names()[i] << ": inf S = " << fmt(r.inf)
              << ", sup S = " << fmt(r.sup) << " over " << r.nodes << " nodes\n";
  }
  std::vector<std::vector<std::string>> rows{{"lower", fmt(br.lower)}, {"upper", fmt(br.upper)}};
  int status = 0;
  if (measured > 0) {
    rows.push_back({"measured", fmt(measured)});
    const bool inside = br.lower <= measured && measured <= br.upper;
    std::cout << "measured speed " << fmt(measured) << (speed_src.empty() ? "" : " (" + speed_src + ")")
              << (inside ? " lies inside the bracket" : " lies OUTSIDE the bracket") << "\n";
    status = inside ? 0 : 1;
  }
  write_csv(path_in(c, "bracket.csv"), manifest(cfg, "bounds").add("model", kind.name()), {"quantity", "value"}, rows);
  return status;
}

int cmd_epsilon(const Common& c, std::vector<double> eps) {
  const Config cfg = load(c);
  const auto t = epsilon_convergence(cfg.params, eps, AutoDomain{}, c.jobs);
  std::cout << "c0 (one equation) = " << fmt(t.c0) << "\n";
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : t.rows) {
    std::cout << "  eps = " << std::setw(10) << fmt(r.eps) << "  c = " << std::setw(12) << fmt(r.speed)
              << "  |c - c0| = " << std::setw(12) << fmt(r.gap) << (r.failed ? "  failed" : "") << "\n";
    rows.push_back({fmt(r.eps), fmt(r.speed), fmt(r.gap), r.converged ? "1" : "0"});
  }
  std::cout << "least-squares K = " << fmt(t.K_fit) << ", envelope K = " << fmt(t.K_envelope)
            << ", gap decreasing: " << (t.gap_decreasing ? "yes" : "no") << "\n";
  write_csv(path_in(c, "epsilon.csv"), manifest(cfg, "epsilon").add("c0", fmt(t.c0)),
            {"eps", "speed", "gap", "converged"}, rows);
  return 0;
}

int cmd_calibrate(const Common& c, double target, const std::string& write_to) {
  const Config cfg = load(c);
  const Grid1D grid(cfg.domain.length, static_cast<std::size_t>(cfg.domain.nodes));
  const auto cal = calibrate_k2_bar(cfg.params, target, grid, cfg.domain.t_end, cfg.domain.snapshot_every);
  for (const auto& h : cal.history)
    std::cout << "  k2_bar = " << std::setprecision(10) << h.k2_bar << "  speed = " << h.speed << "\n";
  std::cout << "k2_bar = " << std::setprecision(10) << cal.k2_bar << " gives speed " << cal.speed
            << (cal.converged ? "" : " (not converged)") << "\n";
  if (!write_to.empty()) {
    Config out = cfg;
    out.params.k2_bar = cal.k2_bar;
    out.params.r2_bar = cal.k2_bar * out.params.K2m_bar / out.params.T0;
    std::ofstream f(write_to);
    f << "; k2_bar calibrated to a reduced-model speed of " << target << " mm/min on L = " << grid.length
      << " mm, N = " << grid.nodes << "\n"
      << to_ini(out);
    std::cout << "wrote " << write_to << "\n";
  }
  return cal.converged ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coagwave: thrombin wave speeds in reaction-diffusion coagulation models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", COAGWAVE_VERSION);
  Common c;

  auto* sim = app.add_subcommand("simulate",
                                 "integrate one model; writes profiles.csv (t,x,species...), front_trace.csv "
                                 "(t,x_front), speed.csv, stack.dat and stack.gp");
  add_common(sim, c);
  std::string reaction = "on", scheme = "explicit";
  sim->add_option("--reaction", reaction, "on | off")->check(CLI::IsMember({"on", "off"}))->capture_default_str();
  sim->add_option("--scheme", scheme, "explicit | semi-implicit")->capture_default_str();

  auto* sw = app.add_subcommand("sweep", "speed vs one parameter; writes sweep.csv (value,model,speed,converged,note)");
  add_common(sw, c, true);
  SweepSpec spec;
  std::vector<double> range;
  bool log_range = false;
  AutoDomain dom;
  sw->add_option("--sweep-param", spec.param, "CoagParams key, activity, n, b or sigma")->required();
  sw->add_option("--values", spec.values, "explicit increasing values");
  sw->add_option("--range", range, "lo hi count")->expected(3);
  sw->add_flag("--log", log_range, "log-spaced range");
  sw->add_option("--models", spec.models, "reduced6 two_eq one_eq full14 scalar c1 c2 c1_h11 c2_h11")->required();
  sw->add_option("--nodes", dom.nodes, "grid nodes per run")->capture_default_str();

  auto* eq = app.add_subcommand("equilibria", "stationary states, stability and classification");
  add_common(eq, c, false);
  std::size_t trials = 20;
  bool eq_csv = false;
  eq->add_option("--trials", trials, "random perturbations for the stability check")->capture_default_str();
  eq->add_flag("--csv", eq_csv, "write equilibria.csv (root,dP_sign,principal_eigenvalue,classification)");

  auto* sp = app.add_subcommand("speed", "closed-form speed estimates");
  add_common(sp, c);
  bool sp_scalar = false, sp_csv = false;
  double sp_measured = 0;
  std::string sp_from;
  sp->add_flag("--scalar", sp_scalar, "estimate for the scalar model (--n --b --sigma, D from config)");
  sp->add_option("--measured", sp_measured, "numerical speed to compare against");
  sp->add_option("--from", sp_from, "speed.csv written by simulate");
  sp->add_flag("--csv", sp_csv, "write speed_estimates.csv (estimator,value)");

  auto* bd = app.add_subcommand("bounds", "minimax speed bracket from a profile; writes bracket.csv");
  add_common(bd, c);
  std::string profile;
  double bd_measured = 0;
  bd->add_option("--profile", profile, "profiles.csv from simulate (last snapshot is used)");
  bd->add_option("--measured", bd_measured, "speed to test for containment");

  auto* ep = app.add_subcommand("epsilon", "two-scale limit of the two-equation model; writes epsilon.csv");
  add_common(ep, c, false);
  std::vector<double> eps{1.0, 0.5, 0.25, 0.125, 0.0625};
  ep->add_option("--eps", eps, "epsilon values in (0, 1]")->capture_default_str();

  auto* cal = app.add_subcommand("calibrate", "fit k2_bar to a target reduced-model speed on the config grid");
  add_common(cal, c, false);
  double target = 0.05;
  std::string write_to;
  cal->add_option("--target", target, "speed in mm/min")->capture_default_str();
  cal->add_option("--write", write_to, "write the calibrated config to this path");

  CLI11_PARSE(app, argc, argv);
  try {
    if (sim->parsed()) return cmd_simulate(c, reaction == "on", scheme);
    if (sw->parsed()) return cmd_sweep(c, spec, range, log_range, dom);
    if (eq->parsed()) return cmd_equilibria(c, trials, eq_csv);
    if (sp->parsed()) return cmd_speed(c, sp_scalar, sp_measured, sp_from, sp_csv);
    if (bd->parsed()) return cmd_bounds(c, profile, bd_measured);
    if (ep->parsed()) return cmd_epsilon(c, eps);
    if (cal->parsed()) return cmd_calibrate(c, target, write_to);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
