// Acceptance run: one [PASS]/[FAIL] line per criterion, details indented.
// Exit status is the number of failed criteria.

#include "coagwave/csv.hpp"
#include "coagwave/equilibria.hpp"
#include "coagwave/params.hpp"
#include "coagwave/rdsolver.hpp"
#include "coagwave/speed_formulas.hpp"
#include "coagwave/sweep.hpp"
#include "coagwave/wavefront.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace coagwave;

namespace tol {
constexpr double c1_speed_target = 0.05;   // mm/min
constexpr double c1_speed_rel = 0.30;
constexpr double c1_runtime_s = 60.0;
constexpr double c2_drift = 0.01;          // relative to T0
constexpr double c2_amplitude_rel = 0.01;
constexpr double c3_order_rel = 0.02;
constexpr double c3_factor = 3.0;
constexpr double c4_runtime_s = 120.0;
constexpr double c5_lo = 1.2, c5_hi = 1.8;
constexpr double c6_formula_rel = 1e-12;
constexpr double c6_sim_rel = 0.05;
constexpr double c7_widen_rel = 0.01;      // plus the measured grid-halving change
constexpr double c8_residual = 1e-8;       // times T0
constexpr double c11_mass_rel = 1e-10;
constexpr double c11_prothrombin = 1e-8;   // times T0
constexpr double c11_grid_rel = 0.02;
}  // namespace tol

namespace {

int failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void verdict(const char* id, bool ok, const std::string& summary) {
  std::printf("[%s] %s %s\n", ok ? "PASS" : "FAIL", id, summary.c_str());
  std::fflush(stdout);
  failures += !ok;
}

void note(const std::string& s) {
  std::printf("       %s\n", s.c_str());
  std::fflush(stdout);
}

std::string num(double v) { return fmt(v); }

// Brackets checked under C7, collected from every converged field below.
struct BracketCase {
  std::string name;
  double speed, lower, upper;
};
std::vector<BracketCase> brackets;

void record_bracket(const std::string& name, const SpaceTimeField& f, const CoagParams& p, double speed) {
  const auto b = minimax_bracket(TestProfile::from_field(f, f.size() - 1), p);
  brackets.push_back({name, speed, b.lower, b.upper});
}

}  // namespace

int main() {
  const Config cfg = load_config(COAGWAVE_DEFAULT_CONFIG);
  const CoagParams P = cfg.params;
  const auto red = ModelKind::reduced6();
  const Grid1D grid(cfg.domain.length, static_cast<std::size_t>(cfg.domain.nodes));
  std::printf("coagwave %s acceptance, config %s (hash %s), k2_bar = %s\n", COAGWAVE_VERSION,
              COAGWAVE_DEFAULT_CONFIG, config_hash(cfg).c_str(), num(P.k2_bar).c_str());

  // ---- C1: reduced-model speed on the default grid
  auto t0 = std::chrono::steady_clock::now();
  const auto base = simulate(red, P, grid, default_ic(red, P, grid), cfg.domain.t_end, cfg.domain.snapshot_every);
  const auto base_speed = measure_speed(base);
  const double base_runtime = seconds_since(t0);
  const double c_red = base_speed.speed;
  {
    const bool ok = base_speed.converged &&
                    std::abs(c_red - tol::c1_speed_target) <= tol::c1_speed_rel * tol::c1_speed_target &&
                    base_runtime < tol::c1_runtime_s;
    verdict("C1", ok, "reduced speed " + num(c_red) + " mm/min (target 0.05 +-30%), runtime " + num(base_runtime) +
                          " s, L=" + num(grid.length) + " N=" + std::to_string(grid.nodes));
  }

  // ---- C2: wave character
  {
    const auto d = shape_drift(base, 10);
    auto ic = default_ic(red, P, grid);
    ic.amplitude *= 2.0;
    const auto twice = simulate(red, P, grid, ic, cfg.domain.t_end, cfg.domain.snapshot_every);
    const auto m2 = measure_speed(twice);
    if (m2.converged) record_bracket("reduced6, doubled amplitude", twice, P, m2.speed);
    const double rel = std::abs(m2.speed - c_red) / c_red;
    const bool ok = d.drift < tol::c2_drift && d.monotone && rel < tol::c2_amplitude_rel;
    verdict("C2", ok, "shape drift " + num(d.drift) + " over " + std::to_string(d.snapshots) +
                          " snapshots, monotone " + (d.monotone ? "yes" : "no") + ", doubled amplitude speed " +
                          num(m2.speed) + " (rel change " + num(rel) + ")");
  }
  if (base_speed.converged) record_bracket("reduced6, default", base, P, c_red);

  // ---- C3: model hierarchy over a D sweep
  {
    SweepSpec s{"D", SweepSpec::range(0.001, 0.01, 5, true), {"reduced6", "two_eq", "one_eq"}};
    AutoDomain a;
    a.nodes = 501;
    const auto rows = run_sweep(P, s, a);
    bool order = true, factor = true, converged = true, monotone = true;
    double worst_factor = 0;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const auto &r6 = rows[3 * i], &r2 = rows[3 * i + 1], &r1 = rows[3 * i + 2];
      converged = converged && r6.converged && r2.converged && r1.converged;
      order = order && r1.speed >= r2.speed * (1 - tol::c3_order_rel) && r2.speed >= r6.speed * (1 - tol::c3_order_rel);
      const double f = std::max({r6.speed, r2.speed, r1.speed}) / std::min({r6.speed, r2.speed, r1.speed});
      worst_factor = std::max(worst_factor, f);
      factor = factor && f <= tol::c3_factor;
      if (i > 0)
        for (int k = 0; k < 3; ++k) monotone = monotone && rows[3 * i + k].speed > rows[3 * (i - 1) + k].speed;
      note("D=" + num(s.values[i]) + ": reduced6 " + num(r6.speed) + ", two_eq " + num(r2.speed) + ", one_eq " +
           num(r1.speed) + ", max/min " + num(f));
    }
    verdict("C3", converged && order && factor && monotone,
            std::string("ordering one_eq >= two_eq >= reduced6 ") + (order ? "holds" : "violated") +
                ", speeds increase with D " + (monotone ? "yes" : "no") + ", largest spread factor " +
                num(worst_factor) + " (limit 3)");
  }

  // ---- C4: narrow-zone estimate against the scalar simulation
  {
    t0 = std::chrono::steady_clock::now();
    CoagParams q = P;
    q.D = 2.0;
    bool below = true, trend = true, converged = true;
    double prev = std::numeric_limits<double>::infinity();
    for (int n = 3; n <= 8; ++n) {
      const auto o = run_auto(ModelKind::scalar(n, 10.0, 0.01), q);
      const double c1 = narrow_zone_speed(n, 10.0, 0.01, 2.0).value;
      converged = converged && o.ignited && o.speed.converged;
      below = below && c1 <= o.speed.speed;
      const double ratio = o.speed.speed / c1;
      trend = trend && ratio <= prev;
      prev = ratio;
      note("n=" + std::to_string(n) + ": numeric " + num(o.speed.speed) + ", c1 " + num(c1) + ", ratio " + num(ratio));
    }
    const double rt = seconds_since(t0);
    verdict("C4", converged && below && trend && rt < tol::c4_runtime_s,
            std::string("c1 <= numeric ") + (below ? "yes" : "no") + ", ratio non-increasing in n " +
                (trend ? "yes" : "no") + ", runtime " + num(rt) + " s");
  }

  // ---- C5: factor between the narrow-zone estimate and the reduced speed
  {
    const auto e = coag_speed_estimates(P);
    const double ratio = e.c1.value / c_red;
    verdict("C5", ratio >= tol::c5_lo && ratio <= tol::c5_hi,
            "c1 " + num(e.c1.value) + " mm/min / reduced " + num(c_red) + " = " + num(ratio) + " (want [1.2, 1.8])");
    note("with 1/h11 in b: c1 " + num(e.c1_h11) + " (ratio " + num(e.c1_h11 / c_red) + "); c2 " + num(e.c2.value) +
         " (ratio " + num(e.c2.value / c_red) + ")");
  }

  // ---- C6: sqrt(D) scaling
  {
    double worst = 0;
    for (int n = 3; n <= 8; ++n)
      for (double D : {1e-3, 0.0037, 2.0}) {
        worst = std::max(worst, std::abs(narrow_zone_speed(n, 10, .01, 4 * D).value /
                                             narrow_zone_speed(n, 10, .01, D).value - 2.0) / 2.0);
        worst = std::max(worst, std::abs(piecewise_linear_speed(n, 10, .01, 4 * D).value /
                                             piecewise_linear_speed(n, 10, .01, D).value - 2.0) / 2.0);
      }
    const auto e1 = coag_speed_estimates(P);
    CoagParams q = P;
    q.D *= 4;
    const auto e4 = coag_speed_estimates(q);
    worst = std::max({worst, std::abs(e4.c1.value / e1.c1.value - 2.0) / 2.0,
                      std::abs(e4.c2.value / e1.c2.value - 2.0) / 2.0});
    AutoDomain a;
    a.nodes = 501;
    const auto s1 = run_auto(red, P, a), s4 = run_auto(red, q, a);
    const double sim = s4.speed.speed / s1.speed.speed;
    const bool ok = worst <= tol::c6_formula_rel && s1.speed.converged && s4.speed.converged &&
                    std::abs(sim / 2.0 - 1.0) <= tol::c6_sim_rel;
    verdict("C6", ok, "estimator scaling error " + num(worst) + ", simulated c(4D)/c(D) = " + num(sim) + " (" +
                          num(s1.speed.speed) + " -> " + num(s4.speed.speed) + ")");
  }

  // ---- C11 first part of the work: the refined grid run also feeds C7
  const Grid1D fine(grid.length, 2 * (grid.nodes - 1) + 1);
  const auto fine_field =
      simulate(red, P, fine, default_ic(red, P, fine), cfg.domain.t_end, cfg.domain.snapshot_every);
  const auto fine_speed = measure_speed(fine_field);
  if (fine_speed.converged) record_bracket("reduced6, halved dx", fine_field, P, fine_speed.speed);
  const double grid_change = std::abs(fine_speed.speed - c_red) / c_red;

  // ---- C7: minimax containment
  {
    bool ok = !brackets.empty();
    for (const auto& b : brackets) {
      const double w = (tol::c7_widen_rel + grid_change) * b.speed;
      const bool in = b.lower - w <= b.speed && b.speed <= b.upper + w;
      ok = ok && in;
      note(b.name + ": speed " + num(b.speed) + " in [" + num(b.lower) + ", " + num(b.upper) + "] " +
           (in ? "yes" : "NO"));
    }
    verdict("C7", ok, std::to_string(brackets.size()) + " converged runs, bracket widened by " +
                          num(tol::c7_widen_rel + grid_change) + " relative");
  }

  // ---- C8: equilibria and stability
  {
    const auto rep = verify_theorem1(P, 100, 20260101);
    double worst = 0;
    std::size_t nondegenerate = 0;
    for (const auto& c : rep.checks) {
      worst = std::max(worst, c.residual);
      nondegenerate += !c.degenerate;
    }
    std::mt19937_64 rng(77);
    int mismatches = 0;
    for (int k = 0; k < 1000; ++k) {
      const auto c = oracle::random_cubic(rng);
      mismatches += static_cast<int>(positive_roots(CubicCoeffs{c.a, c.b, c.c, c.d}).size()) != oracle::sign_scan(c);
    }
    const bool ok = rep.configs_tested == 101 && rep.pass() && worst < tol::c8_residual * P.T0 && mismatches == 0;
    verdict("C8", ok, std::to_string(rep.configs_tested - 1) + " bistable perturbations (" +
                          std::to_string(rep.configs_rejected) + " rejected), " + std::to_string(nondegenerate) +
                          " roots, sign disagreements " + std::to_string(rep.disagreements) + ", max residual " +
                          num(worst) + " nM/min, cubic root-count mismatches " + std::to_string(mismatches) + "/1000");
  }

  // ---- C9: two-scale limit
  {
    const std::vector<double> ladder{1, 0.5, 0.25, 0.125, 0.0625};
    const std::vector<double> tail{1.0 / 1024, 1.0 / 4096, 1.0 / 16384};
    const auto t = epsilon_convergence(P, ladder);
    const auto u = epsilon_convergence(P, tail);
    // K from the asymptotic tail, where gap / eps has levelled off
    double num_k = 0, den_k = 0;
    for (const auto& r : u.rows) {
      num_k += r.eps * r.gap;
      den_k += r.eps * r.eps;
    }
    const double K = num_k / den_k;
    bool bounded = true, failed = false;
    for (const auto& r : t.rows) {
      bounded = bounded && r.gap <= K * r.eps;
      failed = failed || !r.converged;
      note("eps=" + num(r.eps) + ": c " + num(r.speed) + ", |c - c0| " + num(r.gap) + ", K eps " + num(K * r.eps));
    }
    for (const auto& r : u.rows) {
      failed = failed || !r.converged;
      note("eps=" + num(r.eps) + " (tail): |c - c0| " + num(r.gap) + ", gap/eps " + num(r.gap / r.eps));
    }
    const bool decreasing = t.gap_decreasing && u.gap_decreasing && u.rows.front().gap < t.rows.back().gap;
    verdict("C9", !failed && t.c0_converged && bounded && decreasing,
            "c0 " + num(t.c0) + ", K fitted on eps <= 1/1024: " + num(K) + ", bound holds " +
                (bounded ? "yes" : "no") + ", gap decreasing " + (decreasing ? "yes" : "no") +
                " (least squares on the ladder alone: K " + num(t.K_fit) + ")");
  }

  // ---- C10: factor IX activity
  {
    SweepSpec s{"activity", {1, 5, 10, 25, 50, 100}, {"reduced6"}};
    AutoDomain a;
    a.nodes = 501;
    const auto rows = run_sweep(P, s, a);
    bool inc = true, concave = true, converged = true;
    double prev_slope = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      converged = converged && rows[i].converged;
      if (i > 0) {
        inc = inc && rows[i].speed > rows[i - 1].speed;
        const double slope = (rows[i].speed - rows[i - 1].speed) / (rows[i].value - rows[i - 1].value);
        concave = concave && slope < prev_slope;
        prev_slope = slope;
      }
      note("activity " + num(rows[i].value) + "%: speed " + num(rows[i].speed));
    }
    verdict("C10", converged && inc && concave,
            std::string("increasing ") + (inc ? "yes" : "no") + ", secant slopes decreasing " +
                (concave ? "yes" : "no"));
  }

  // ---- C11: solver correctness
  {
    SimOptions off;
    off.reaction = false;
    const auto diff = simulate(red, P, grid, default_ic(red, P, grid), 10.0, 1.0, off);
    double mass = 0;
    for (std::size_t c = 0; c < red.dim(); ++c) {
      const double m0 = total_mass(diff, 0, c), m1 = total_mass(diff, diff.size() - 1, c);
      mass = std::max(mass, std::abs(m1 - m0) / m0);
    }
    CoagParams q = P;
    q.h2 = 1e-300;  // positive for validation, absent from the kinetics
    const auto full = ModelKind::full14();
    const Grid1D g(1.0, 101);
    const auto ff = simulate(full, q, g, InitialCondition{0.5 * P.T0, 0.1, IcShape::SmoothedStep, 0.02}, 5.0, 0.5);
    double tp = 0;
    const double tp0 = total_mass(ff, 0, full_idx::T) + total_mass(ff, 0, full_idx::P);
    for (std::size_t s = 1; s < ff.size(); ++s)
      tp = std::max(tp, std::abs(total_mass(ff, s, full_idx::T) + total_mass(ff, s, full_idx::P) - tp0));
    const bool ok = mass < tol::c11_mass_rel && tp < tol::c11_prothrombin * P.T0 && fine_speed.converged &&
                    grid_change < tol::c11_grid_rel;
    verdict("C11", ok, "diffusion mass change " + num(mass) + ", T+P drift " + num(tp) + " nM mm, speed N=" +
                           std::to_string(grid.nodes) + " " + num(c_red) + " vs N=" + std::to_string(fine.nodes) +
                           " " + num(fine_speed.speed) + " (rel " + num(grid_change) + ")");
  }

  std::printf("%d of 11 criteria failed\n", failures);
  return failures;
}
