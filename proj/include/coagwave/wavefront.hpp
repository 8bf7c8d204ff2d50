#pragma once

// Front tracking, speed measurement, profile invariance and minimax speed
// brackets on simulated fields.

#include "coagwave/equilibria.hpp"
#include "coagwave/models.hpp"
#include "coagwave/parallel.hpp"
#include "coagwave/rdsolver.hpp"
#include "coagwave/speed_formulas.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace coagwave {

class NoFrontError : public std::runtime_error {
 public:
  NoFrontError(const std::string& what, std::size_t count) : std::runtime_error(what), crossings(count) {}
  std::size_t crossings;
};

class UnusableProfileError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Position where the profile crosses `threshold`, by linear interpolation.
inline double front_position(std::span<const double> v, const Grid1D& g, double threshold) {
  if (v.size() != g.nodes) throw std::invalid_argument("profile length does not match grid");
  std::size_t crossings = 0, at = 0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    if ((v[i] >= threshold) != (v[i + 1] >= threshold)) {
      ++crossings;
      at = i;
    }
  }
  if (crossings != 1)
    throw NoFrontError("profile crosses threshold " + std::to_string(threshold) + " " + std::to_string(crossings) +
                           " times (expected 1)",
                       crossings);
  const double frac = (threshold - v[at]) / (v[at + 1] - v[at]);
  return g.x(at) + frac * g.dx();
}

struct TracePoint {
  double t;
  double x;
};

struct SpeedMeasurement {
  double speed = 0;
  bool converged = false;
  double t_start = 0, t_end = 0;
  double residual = 0;  // |slope(last quarter) - slope(window)| / |slope(window)|
  std::size_t points = 0;
  std::vector<TracePoint> front_trace;
  std::string note;
};

namespace detail {

inline double ls_slope(std::span<const TracePoint> pts) {
  double mt = 0, mx = 0;
  for (const auto& p : pts) {
    mt += p.t;
    mx += p.x;
  }
  mt /= pts.size();
  mx /= pts.size();
  double stt = 0, stx = 0;
  for (const auto& p : pts) {
    stt += (p.t - mt) * (p.t - mt);
    stx += (p.t - mt) * (p.x - mx);
  }
  return stx / stt;
}

inline double resolve_threshold(const SpaceTimeField& f, double threshold) {
  if (!std::isnan(threshold)) return threshold;
  return f.model.is_coagulation() ? f.scale / 2.0 : 0.5;
}

}  // namespace detail

/// Front position at every snapshot where a single crossing exists.
inline std::vector<TracePoint> front_trace(const SpaceTimeField& f, double threshold) {
  std::vector<TracePoint> trace;
  for (std::size_t s = 0; s < f.size(); ++s) {
    try {
      trace.push_back({f.times[s], front_position(f.thrombin(s), f.grid, threshold)});
    } catch (const NoFrontError&) {
    }
  }
  return trace;
}

/// Least-squares front speed over the trailing `window_fraction` of the
/// snapshots, ignoring positions within 10% of L of either boundary.
inline SpeedMeasurement measure_speed(const SpaceTimeField& f, double threshold = std::nan(""),
                                      double window_fraction = 0.5) {
  if (f.size() < 10) throw std::invalid_argument("speed measurement needs at least 10 snapshots");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) throw std::invalid_argument("window fraction in (0, 1]");
  threshold = detail::resolve_threshold(f, threshold);
  SpeedMeasurement m;
  m.front_trace = front_trace(f, threshold);
  if (m.front_trace.empty()) throw NoFrontError("no snapshot has a front", 0);

  const double L = f.grid.length;
  const auto first = static_cast<std::size_t>(std::floor((1.0 - window_fraction) * (f.size() - 1)));
  const double t_from = f.times[first];
  std::vector<TracePoint> win;
  for (const auto& p : m.front_trace)
    if (p.t >= t_from && p.x >= 0.1 * L && p.x <= 0.9 * L) win.push_back(p);
  if (win.size() < 4)
    throw NoFrontError("only " + std::to_string(win.size()) + " front positions inside the measurement window",
                       win.size());

  m.points = win.size();
  m.t_start = win.front().t;
  m.t_end = win.back().t;
  m.speed = detail::ls_slope(win);
  const std::size_t q = std::max<std::size_t>(3, win.size() / 2);
  const double tail = detail::ls_slope(std::span<const TracePoint>(win).last(q));
  m.residual = std::abs(tail - m.speed) / std::max(std::abs(m.speed), std::numeric_limits<double>::min());
  bool monotone = true;
  for (std::size_t i = 1; i < win.size(); ++i) monotone = monotone && win[i].x >= win[i - 1].x;
  m.converged = monotone && m.speed > 0.0 && m.residual < 1e-2;
  if (!monotone) m.note = "front trace not monotone";
  else if (!(m.speed > 0.0)) m.note = "front not advancing";
  else if (!m.converged) m.note = "speed still drifting";
  return m;
}

struct DriftReport {
  double drift = 0;          // max |T_j(xf_j + xi) - T_ref(xf_ref + xi)| / scale
  bool monotone = true;      // every aligned profile non-increasing within tolerance
  double max_increase = 0;   // largest upward step / scale
  bool transient = false;
  std::size_t snapshots = 0;
};

/// Compares the last `window` thrombin profiles after aligning them at
/// their front positions.
inline DriftReport shape_drift(const SpaceTimeField& f, std::size_t window = 10, double threshold = std::nan(""),
                               double monotone_tol = 1e-8) {
  threshold = detail::resolve_threshold(f, threshold);
  const auto trace = front_trace(f, threshold);
  if (trace.size() < 2) throw NoFrontError("shape drift needs at least two fronts", trace.size());
  std::vector<std::size_t> snaps;
  for (std::size_t s = f.size(); s-- > 0 && snaps.size() < window;) {
    try {
      (void)front_position(f.thrombin(s), f.grid, threshold);
      snaps.push_back(s);
    } catch (const NoFrontError&) {
      break;
    }
  }
  if (snaps.size() < 2) throw NoFrontError("shape drift needs at least two consecutive fronts", snaps.size());
  std::reverse(snaps.begin(), snaps.end());

  const auto& g = f.grid;
  std::vector<double> xf;
  for (auto s : snaps) xf.push_back(front_position(f.thrombin(s), g, threshold));
  double xi_lo = -std::numeric_limits<double>::infinity(), xi_hi = std::numeric_limits<double>::infinity();
  for (double x : xf) {
    xi_lo = std::max(xi_lo, -x);
    xi_hi = std::min(xi_hi, g.length - x);
  }

  auto sample = [&](std::span<const double> v, double x) {
    const double pos = std::clamp(x / g.dx(), 0.0, static_cast<double>(g.nodes - 1));
    const auto i = std::min(static_cast<std::size_t>(pos), g.nodes - 2);
    const double w = pos - static_cast<double>(i);
    return (1.0 - w) * v[i] + w * v[i + 1];
  };

  DriftReport r;
  r.snapshots = snaps.size();
  const auto ref = f.thrombin(snaps.back());
  const double xref = xf.back();
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const auto v = f.thrombin(snaps[k]);
    for (std::size_t i = 0; i < g.nodes; ++i) {
      const double xi = g.x(i) - xref;
      if (xi < xi_lo || xi > xi_hi) continue;
      r.drift = std::max(r.drift, std::abs(sample(v, xf[k] + xi) - ref[i]) / f.scale);
    }
    const double a = xf[k] + xi_lo, b = xf[k] + xi_hi;
    for (std::size_t i = 0; i + 1 < g.nodes; ++i) {
      if (g.x(i) < a || g.x(i + 1) > b) continue;
      r.max_increase = std::max(r.max_increase, (v[i + 1] - v[i]) / f.scale);
    }
  }
  r.monotone = r.max_increase <= monotone_tol;
  r.transient = r.drift >= 1e-2 || !r.monotone;
  return r;
}

// ---------------------------------------------------------------------------
// Minimax bracket.

/// Componentwise decreasing trial profile joining the upper state (left)
/// to the resting state (right).
struct TestProfile {
  Grid1D grid;
  ModelKind kind;
  std::vector<std::vector<double>> rho;  // rho[c][i]

  static TestProfile from_field(const SpaceTimeField& f, std::size_t snap) {
    TestProfile t{f.grid, f.model, {}};
    for (std::size_t c = 0; c < f.model.dim(); ++c) {
      const auto v = f.component(snap, c);
      t.rho.emplace_back(v.begin(), v.end());
    }
    return t;
  }

  /// upper * (1 - tanh((x - center) / width)) / 2.
  static TestProfile shifted_tanh(const ModelKind& kind, const StateVector& upper, const Grid1D& g, double center,
                                  double width) {
    TestProfile t{g, kind, std::vector<std::vector<double>>(kind.dim(), std::vector<double>(g.nodes))};
    for (std::size_t i = 0; i < g.nodes; ++i) {
      const double s = 0.5 * (1.0 - std::tanh((g.x(i) - center) / width));
      for (std::size_t c = 0; c < kind.dim(); ++c) t.rho[c][i] = upper[c] * s;
    }
    return t;
  }
};

struct ProfileCheck {
  bool monotone = true;
  bool limits = true;
  std::string message;
  [[nodiscard]] bool ok() const { return monotone && limits; }
};

/// Non-increasing per component, and end values within limit_tol * scale
/// of `upper` (left) and 0 (right). `scale` is T0 for coagulation models.
inline ProfileCheck check_profile(const TestProfile& t, const StateVector& upper, double scale,
                                  double limit_tol = 1e-3, double mono_tol = 1e-8) {
  ProfileCheck r;
  for (std::size_t c = 0; c < t.rho.size(); ++c) {
    const auto& v = t.rho[c];
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      if (v[i + 1] - v[i] > mono_tol * scale) {
        r.monotone = false;
        r.message += "component " + std::to_string(c) + " increases at node " + std::to_string(i) + "; ";
        break;
      }
    }
    if (std::abs(v.front() - upper[c]) > limit_tol * scale || std::abs(v.back()) > limit_tol * scale) {
      r.limits = false;
      r.message += "component " + std::to_string(c) + " end values off; ";
    }
  }
  return r;
}

struct ComponentRange {
  double inf = std::numeric_limits<double>::infinity();
  double sup = -std::numeric_limits<double>::infinity();
  std::size_t nodes = 0;  // nodes with usable slope
};

struct SpeedBracket {
  double lower = 0, upper = 0;
  std::vector<ComponentRange> components;
};

/// S_i = (D rho_i'' + F_i(rho)) / (-rho_i'), with inf/sup over nodes where
/// -rho_i' exceeds slope_factor * scale_i / dx.
inline SpeedBracket minimax_bracket(const TestProfile& t, const CoagParams& p, double slope_factor = 1e-4) {
  const std::size_t m = t.kind.dim(), N = t.grid.nodes;
  if (t.rho.size() != m) throw std::invalid_argument("profile does not match model");
  const double dx = t.grid.dx();
  SpeedBracket b;
  b.components.resize(m);
  std::vector<double> scale(m);
  for (std::size_t c = 0; c < m; ++c) scale[c] = *std::max_element(t.rho[c].begin(), t.rho[c].end());

  std::array<double, kMaxComponents> u{}, F{};
  for (std::size_t i = 1; i + 1 < N; ++i) {
    for (std::size_t c = 0; c < m; ++c) u[c] = t.rho[c][i];
    reaction_rates(t.kind, std::span<const double>(u.data(), m), std::span<double>(F.data(), m), p);
    for (std::size_t c = 0; c < m; ++c) {
      const auto& v = t.rho[c];
      const double d1 = (v[i + 1] - v[i - 1]) / (2.0 * dx);
      if (!(-d1 > slope_factor * scale[c] / dx)) continue;
      const double d2 = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (dx * dx);
      const double S = (p.D * d2 + F[c]) / (-d1);
      auto& r = b.components[c];
      r.inf = std::min(r.inf, S);
      r.sup = std::max(r.sup, S);
      ++r.nodes;
    }
  }
  b.lower = std::numeric_limits<double>::infinity();
  b.upper = -std::numeric_limits<double>::infinity();
  for (const auto& r : b.components) {
    if (r.nodes == 0) continue;
    b.lower = std::min(b.lower, r.inf);
    b.upper = std::max(b.upper, r.sup);
  }
  if (!std::isfinite(b.lower)) throw UnusableProfileError("no component of the test profile has a usable slope");
  return b;
}

// ---------------------------------------------------------------------------
// Runs on a domain sized from the front's own length scale D / c.

struct AutoDomain {
  std::size_t nodes = 1001;
  double nodes_per_length = 15.0;  // grid nodes per D / c
  double travel = 0.65;            // planned front travel as a fraction of L
  std::size_t snapshots = 60;
  std::size_t pilot_nodes = 201;
  int pilot_rounds = 4;
  double threshold = std::nan("");
};

struct RunOutcome {
  bool ignited = false;
  SpeedMeasurement speed;
  Grid1D grid;
  double t_end = 0;
  double guess = 0;  // speed the domain was sized for
  std::string error;
};

/// First guess for the front speed: the narrow-zone estimate (with the
/// one-equation prefactor for coagulation models).
inline double speed_guess(const ModelKind& kind, const CoagParams& p) {
  try {
    if (kind.tag == ModelTag::Scalar) return narrow_zone_speed(kind.n, kind.b, kind.sigma, p.D).value;
    return coag_speed_estimates(p).c1_h11;
  } catch (const std::exception&) {
    return std::sqrt(p.D);
  }
}

namespace detail {

struct Sizing {
  Grid1D grid;
  double t_end;
  double snapshot_every;
};

inline Sizing size_domain(const CoagParams& p, double c, std::size_t nodes, const AutoDomain& a) {
  const double L = static_cast<double>(a.nodes - 1) * p.D / (a.nodes_per_length * c);
  const double t_end = a.travel * L / c;
  return {Grid1D(L, nodes), t_end, t_end / static_cast<double>(a.snapshots)};
}

// Slope of the second half of the front trace; NaN without a usable trace.
inline double rough_speed(const SpaceTimeField& f, double threshold) {
  auto trace = front_trace(f, threshold);
  std::erase_if(trace, [&](const TracePoint& t) { return t.x > 0.9 * f.grid.length; });
  if (trace.size() < 4) return std::nan("");
  return ls_slope(std::span<const TracePoint>(trace).last(std::max<std::size_t>(3, trace.size() / 2)));
}

}  // namespace detail

/// Pilot runs on a coarse grid refine the speed guess; the final run uses
/// `nodes` points over a domain the front crosses in about `travel` of it.
inline RunOutcome run_auto(const ModelKind& kind, const CoagParams& p, const AutoDomain& a = {}) {
  RunOutcome out;
  try {
    double c = speed_guess(kind, p);
    if (!(c > 0.0) || !std::isfinite(c)) c = std::sqrt(p.D);
    SimOptions opt;
    opt.stop_fraction = 0.9;
    for (int r = 0; r < a.pilot_rounds; ++r) {
      const auto s = detail::size_domain(p, c, a.pilot_nodes, a);
      const auto f = simulate(kind, p, s.grid, default_ic(kind, p, s.grid), s.t_end, s.snapshot_every, opt);
      const double measured = detail::rough_speed(f, detail::resolve_threshold(f, a.threshold));
      if (!(measured > 0.0)) {
        // Too short a run for the front to form; retry on a slower scale.
        if (r + 1 < a.pilot_rounds) {
          c /= 4.0;
          continue;
        }
        out.error = "no propagating front in pilot run";
        out.guess = c;
        return out;
      }
      const double ratio = measured / c;
      c = measured;
      if (ratio > 0.8 && ratio < 1.25) break;
    }
    out.guess = c;
    const auto s = detail::size_domain(p, c, a.nodes, a);
    out.grid = s.grid;
    out.t_end = s.t_end;
    const auto f = simulate(kind, p, s.grid, default_ic(kind, p, s.grid), s.t_end, s.snapshot_every, opt);
    out.speed = measure_speed(f, a.threshold);
    out.ignited = out.speed.speed > 0.0;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Two-scale limit: scale the slow variable of the two-equation model.

/// Parameters whose U11 equation runs 1/eps times faster.
inline CoagParams scale_slow_variable(CoagParams p, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1]");
  p.k11 /= eps;
  p.h11 /= eps;
  return p;
}

struct EpsilonRow {
  double eps = 0;
  double speed = 0;
  bool converged = false;
  bool failed = false;
  double gap = 0;  // |c_eps - c_0|
};

struct EpsilonTable {
  std::vector<EpsilonRow> rows;
  double c0 = 0;
  bool c0_converged = false;
  double K_fit = 0;       // least squares gap = K eps
  double K_envelope = 0;  // max gap / eps
  bool gap_decreasing = true;
};

inline EpsilonTable epsilon_convergence(const CoagParams& p, std::vector<double> epsilons, const AutoDomain& a = {},
                                        std::size_t jobs = 1) {
  for (double e : epsilons)
    if (!(e > 0.0 && e <= 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1]");
  std::sort(epsilons.begin(), epsilons.end(), std::greater<>());
  // Index 0 is the one-equation limit.
  auto outcomes = parallel_map(epsilons.size() + 1, jobs, [&](std::size_t i) {
    if (i == 0) return run_auto(ModelKind::one_eq(), p, a);
    return run_auto(ModelKind::two_eq(), scale_slow_variable(p, epsilons[i - 1]), a);
  });
  EpsilonTable t;
  t.c0 = outcomes[0].speed.speed;
  t.c0_converged = outcomes[0].ignited && outcomes[0].speed.converged;
  double num = 0, den = 0;
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    const auto& o = outcomes[k + 1];
    EpsilonRow r;
    r.eps = epsilons[k];
    r.failed = !o.ignited;
    r.speed = o.speed.speed;
    r.converged = o.ignited && o.speed.converged;
    r.gap = std::abs(r.speed - t.c0);
    if (!r.failed) {
      num += r.eps * r.gap;
      den += r.eps * r.eps;
      t.K_envelope = std::max(t.K_envelope, r.gap / r.eps);
    }
    if (!t.rows.empty() && !(r.gap < t.rows.back().gap)) t.gap_decreasing = false;
    t.rows.push_back(r);
  }
  t.K_fit = den > 0 ? num / den : 0.0;
  return t;
}

// ---------------------------------------------------------------------------
// Calibration of the prothrombinase rate against a target speed.

struct CalibrationStep {
  double k2_bar;
  double speed;
};

struct Calibration {
  double k2_bar = 0;
  double speed = 0;
  bool converged = false;
  std::vector<CalibrationStep> history;
};

/// Reduced-model speed on the given grid from the default activation.
inline SpeedMeasurement reduced_speed(const CoagParams& p, const Grid1D& g, double t_end, double snapshot_every) {
  const auto kind = ModelKind::reduced6();
  return measure_speed(simulate(kind, p, g, default_ic(kind, p, g), t_end, snapshot_every));
}

/// Secant iteration on k2_bar until the reduced-model speed matches
/// `target` to relative `rel_tol`. r2_bar follows k2_bar.
inline Calibration calibrate_k2_bar(const CoagParams& base, double target, const Grid1D& g, double t_end,
                                    double snapshot_every, double rel_tol = 1e-4, int max_iter = 12) {
  if (!(target > 0.0)) throw std::invalid_argument("target speed must be positive");
  Calibration c;
  auto eval = [&](double k) {
    CoagParams p = base;
    p.k2_bar = k;
    p.r2_bar = k * p.K2m_bar / p.T0;
    const double v = reduced_speed(p, g, t_end, snapshot_every).speed;
    c.history.push_back({k, v});
    return v - target;
  };
  double k0 = base.k2_bar, k1 = base.k2_bar * 1.05;
  double f0 = eval(k0), f1 = eval(k1);
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(f1) <= rel_tol * target) {
      c.converged = true;
      break;
    }
    if (f1 == f0) break;
    double k2 = k1 - f1 * (k1 - k0) / (f1 - f0);
    k2 = std::clamp(k2, k1 / 4.0, k1 * 4.0);
    k0 = k1;
    f0 = f1;
    k1 = k2;
    f1 = eval(k1);
  }
  c.converged = c.converged || std::abs(f1) <= rel_tol * target;
  c.k2_bar = k1;
  c.speed = f1 + target;
  return c;
}

}  // namespace coagwave
