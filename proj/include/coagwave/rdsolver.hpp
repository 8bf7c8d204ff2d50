#pragma once

// Method-of-lines integrator for u_t = D u_xx + F(u) on [0, L] with
// zero-flux ends. Second-order central differences in space; explicit Euler
// or diffusion-implicit Euler in time.

#include "coagwave/equilibria.hpp"
#include "coagwave/models.hpp"
#include "coagwave/params.hpp"
#include "coagwave/speed_formulas.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace coagwave {

struct Grid1D {
  double length = 5.0;
  std::size_t nodes = 1001;

  Grid1D() = default;
  Grid1D(double L, std::size_t N) : length(L), nodes(N) {
    if (!(L > 0.0) || N < 3) throw std::invalid_argument("grid needs L > 0 and N >= 3");
  }
  [[nodiscard]] double dx() const { return length / static_cast<double>(nodes - 1); }
  [[nodiscard]] double x(std::size_t i) const {
    return i + 1 == nodes ? length : static_cast<double>(i) * dx();
  }
};

enum class IcShape { Step, SmoothedStep };

/// Activated region [0, width) at the given thrombin amplitude; the other
/// components follow the stationary relations at that amplitude.
struct InitialCondition {
  double amplitude = 0;
  double width = 0;
  IcShape shape = IcShape::SmoothedStep;
  double ramp = 0;  // SmoothedStep transition length (mm)

  void check(const Grid1D& g) const {
    if (!(amplitude > 0.0)) throw std::invalid_argument("initial amplitude must be positive");
    if (!(width > 0.0 && width < g.length / 4.0))
      throw std::invalid_argument("initial width must lie in (0, L/4)");
    if (shape == IcShape::SmoothedStep && !(ramp >= 0.0)) throw std::invalid_argument("ramp must be >= 0");
  }

  /// Profile in [0, 1]: 1 inside the activated region, 0 beyond it.
  [[nodiscard]] double shape_at(double x) const {
    if (shape == IcShape::Step || ramp == 0.0) return x < width ? 1.0 : 0.0;
    const double lo = width - ramp / 2.0, hi = width + ramp / 2.0;
    if (x <= lo) return 1.0;
    if (x >= hi) return 0.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi * (x - lo) / ramp));
  }
};

class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, double t, std::vector<double> snapshot)
      : std::runtime_error(what), time(t), last_good(std::move(snapshot)) {}
  double time;
  std::vector<double> last_good;  // component-major, dim x N
};

class NotBistableError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Snapshots of the state on the grid. Each snapshot is stored
/// component-major: value of component c at node i is data[c * N + i].
struct SpaceTimeField {
  ModelKind model;
  Grid1D grid;
  double scale = 1.0;  // T0 for coagulation models, 1 for the scalar one
  std::vector<double> times;
  std::vector<std::vector<double>> snapshots;
  std::vector<std::string> log;

  [[nodiscard]] std::size_t size() const { return times.size(); }
  [[nodiscard]] std::span<const double> component(std::size_t snap, std::size_t comp) const {
    return std::span<const double>(snapshots.at(snap)).subspan(comp * grid.nodes, grid.nodes);
  }
  [[nodiscard]] std::span<const double> thrombin(std::size_t snap) const {
    return component(snap, model.thrombin_index());
  }
  [[nodiscard]] StateVector node_state(std::size_t snap, std::size_t node) const {
    std::vector<double> v(model.dim());
    for (std::size_t c = 0; c < v.size(); ++c) v[c] = snapshots.at(snap)[c * grid.nodes + node];
    return {model, std::move(v)};
  }
};

enum class Scheme { ExplicitEuler, SemiImplicit };

struct SimOptions {
  Scheme scheme = Scheme::ExplicitEuler;
  bool reaction = true;
  double diffusion_number = 0.4;  // dt <= diffusion_number dx^2 / D (explicit only)
  double kinetic_safety = 0.2;    // dt <= kinetic_safety / max |dF_i/du_i|
  double dt_scale = 1.0;          // extra factor on the automatic step
  double stop_fraction = 0.0;     // stop once thrombin at x = stop_fraction L exceeds the front threshold; 0 = off
  double undershoot_tol = 1e-6;   // relative undershoot that triggers a step-size retry
  int max_retries = 8;
};

inline double default_threshold(const ModelKind& kind, const CoagParams& p) {
  return kind.is_coagulation() ? p.T0 / 2.0 : 0.5;
}

/// Supra-threshold activation for a bistable configuration.
inline InitialCondition default_ic(const ModelKind& kind, const CoagParams& p, const Grid1D& g) {
  InitialCondition ic;
  if (kind.tag == ModelTag::Scalar) {
    ic.amplitude = w_star(kind.n, kind.b, kind.sigma);
  } else {
    const auto rep = classify(p);
    if (rep.classification != Classification::Bistable)
      throw NotBistableError("default initial condition needs a bistable configuration, got " +
                             to_string(rep.classification) + "; supply an explicit initial condition");
    ic.amplitude = *rep.upper_root();
  }
  ic.width = g.length / 20.0;
  ic.shape = IcShape::SmoothedStep;
  ic.ramp = ic.width / 5.0;
  return ic;
}

namespace detail {

// Homogeneous state reached by raising thrombin to `level`; Full14 starts from
// its plasma levels.
inline std::vector<double> activated_state(const ModelKind& kind, const CoagParams& p, double level) {
  if (kind.tag == ModelTag::Scalar) return {level};
  return equilibrium_state(kind, level, p).values;
}

inline std::vector<double> resting_state(const ModelKind& kind, const CoagParams& p) {
  if (kind.tag != ModelTag::Full14) return std::vector<double>(kind.dim(), 0.0);
  return equilibrium_state(kind, 0.0, p).values;
}

// Factored (I - h D Lap) with zero-flux ends; Thomas algorithm.
struct ImplicitDiffusion {
  std::vector<double> c_prime, inv_denom;
  double off = 0;

  ImplicitDiffusion(std::size_t N, double lambda) {
    // rows: -lambda u_{i-1} + (1 + 2 lambda) u_i - lambda u_{i+1}; ghost-node rows double the inner neighbour
    c_prime.resize(N);
    inv_denom.resize(N);
    off = lambda;
    const double diag = 1.0 + 2.0 * lambda;
    double upper = -2.0 * lambda;
    inv_denom[0] = 1.0 / diag;
    c_prime[0] = upper * inv_denom[0];
    for (std::size_t i = 1; i < N; ++i) {
      const double lower = i + 1 == N ? -2.0 * lambda : -lambda;
      upper = -lambda;
      const double den = diag - lower * c_prime[i - 1];
      inv_denom[i] = 1.0 / den;
      c_prime[i] = upper * inv_denom[i];
    }
  }

  void solve(std::span<double> d) const {
    const std::size_t N = d.size();
    d[0] *= inv_denom[0];
    for (std::size_t i = 1; i < N; ++i) {
      const double lower = i + 1 == N ? -2.0 * off : -off;
      d[i] = (d[i] - lower * d[i - 1]) * inv_denom[i];
    }
    for (std::size_t i = N - 1; i-- > 0;) d[i] -= c_prime[i] * d[i + 1];
  }
};

}  // namespace detail

/// Integrates the reaction-diffusion system and records a snapshot every
/// `snapshot_every` minutes (plus t = 0 and the final time).
inline SpaceTimeField simulate(const ModelKind& kind, const CoagParams& p, const Grid1D& g,
                               const InitialCondition& ic, double t_end, double snapshot_every,
                               const SimOptions& opt = {}) {
  if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
  if (!(snapshot_every > 0.0)) throw std::invalid_argument("snapshot interval must be positive");
  ic.check(g);
  if (kind.is_coagulation()) validate(p);
  if (!(p.D > 0.0)) throw std::invalid_argument("diffusion coefficient must be positive");

  const std::size_t m = kind.dim(), N = g.nodes;
  const double dx = g.dx(), D = p.D;
  SpaceTimeField field;
  field.model = kind;
  field.grid = g;
  field.scale = kind.is_coagulation() ? p.T0 : 1.0;

  const auto rest = detail::resting_state(kind, p);
  const auto act = detail::activated_state(kind, p, ic.amplitude);
  std::vector<double> u(m * N);
  for (std::size_t i = 0; i < N; ++i) {
    const double s = ic.shape_at(g.x(i));
    for (std::size_t c = 0; c < m; ++c) u[c * N + i] = rest[c] + s * (act[c] - rest[c]);
  }

  // Step size: diffusive bound (explicit) and the fastest kinetic rate over
  // the states the front passes through.
  double dt = std::numeric_limits<double>::infinity();
  if (opt.scheme == Scheme::ExplicitEuler) dt = opt.diffusion_number * dx * dx / D;
  if (opt.reaction) {
    std::vector<StateVector> probes{{kind, rest}, {kind, act}};
    const double top = kind.is_coagulation() ? p.T0 : 1.0;
    probes.emplace_back(kind, detail::activated_state(kind, p, top));
    const double rho = max_kinetic_rate(kind, probes, p);
    if (rho > 0.0) dt = std::min(dt, opt.kinetic_safety / rho);
  }
  if (!std::isfinite(dt)) dt = snapshot_every;
  dt *= opt.dt_scale;
  {
    std::ostringstream os;
    os << "model=" << kind.name() << " N=" << N << " dx=" << dx << " dt=" << dt
       << (opt.scheme == Scheme::ExplicitEuler ? " scheme=explicit" : " scheme=semi-implicit");
    field.log.push_back(os.str());
  }

  const std::size_t thr_comp = kind.thrombin_index();
  const double threshold = default_threshold(kind, p);
  const std::size_t stop_node =
      opt.stop_fraction > 0.0 ? std::min(N - 1, static_cast<std::size_t>(opt.stop_fraction * (N - 1))) : N;

  std::vector<double> next(m * N), rate(m * N), backup;
  std::array<double, kMaxComponents> ui{}, fi{};
  const double lam_coef = D / (dx * dx);
  std::size_t clipped = 0;
  double worst_undershoot = 0.0;

  auto compute_reaction = [&] {
    if (!opt.reaction) {
      std::fill(rate.begin(), rate.end(), 0.0);
      return;
    }
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t c = 0; c < m; ++c) ui[c] = u[c * N + i];
      reaction_rates(kind, std::span<const double>(ui.data(), m), std::span<double>(fi.data(), m), p);
      for (std::size_t c = 0; c < m; ++c) rate[c * N + i] = fi[c];
    }
  };

  // One step of size h; returns the most negative value produced before
  // clipping (0 if none), or NaN on non-finite output.
  auto step = [&](double h, const detail::ImplicitDiffusion* imp) -> double {
    compute_reaction();
    const double lam = h * lam_coef;
    for (std::size_t c = 0; c < m; ++c) {
      const double* v = u.data() + c * N;
      const double* r = rate.data() + c * N;
      double* w = next.data() + c * N;
      if (imp) {
        for (std::size_t i = 0; i < N; ++i) w[i] = v[i] + h * r[i];
        imp->solve(std::span<double>(w, N));
      } else {
        w[0] = v[0] + lam * 2.0 * (v[1] - v[0]) + h * r[0];
        for (std::size_t i = 1; i + 1 < N; ++i) w[i] = v[i] + lam * (v[i - 1] - 2.0 * v[i] + v[i + 1]) + h * r[i];
        w[N - 1] = v[N - 1] + lam * 2.0 * (v[N - 2] - v[N - 1]) + h * r[N - 1];
      }
    }
    double lowest = 0.0;
    for (double& x : next) {
      if (!std::isfinite(x)) return std::numeric_limits<double>::quiet_NaN();
      if (x < 0.0) {
        lowest = std::min(lowest, x);
        x = 0.0;
        ++clipped;
      }
    }
    u.swap(next);
    return lowest;
  };

  field.times.push_back(0.0);
  field.snapshots.push_back(u);
  double t = 0.0;
  for (std::size_t k = 1; t < t_end; ++k) {
    const double target = std::min(t_end, static_cast<double>(k) * snapshot_every);
    if (target <= t) continue;
    backup = u;
    const std::size_t clipped_before = clipped;
    int retries = 0;
    for (;;) {
      const auto nsteps = static_cast<std::size_t>(std::ceil((target - t) / dt - 1e-9));
      const double h = (target - t) / static_cast<double>(std::max<std::size_t>(nsteps, 1));
      std::optional<detail::ImplicitDiffusion> imp;
      if (opt.scheme == Scheme::SemiImplicit) imp.emplace(N, h * lam_coef);
      bool ok = true;
      double low = 0.0;
      for (std::size_t s = 0; s < std::max<std::size_t>(nsteps, 1); ++s) {
        const double l = step(h, imp ? &*imp : nullptr);
        if (std::isnan(l) || l < -opt.undershoot_tol * field.scale) {
          ok = false;
          low = l;
          break;
        }
        low = std::min(low, l);
      }
      if (ok) {
        worst_undershoot = std::min(worst_undershoot, low);
        break;
      }
      u = backup;
      clipped = clipped_before;
      if (++retries > opt.max_retries) {
        std::ostringstream os;
        os << "integration failed near t=" << t << " min (" << (std::isnan(low) ? "non-finite values" : "undershoot ")
           << (std::isnan(low) ? "" : std::to_string(low)) << ") after " << opt.max_retries << " step reductions";
        throw SimulationError(os.str(), t, backup);
      }
      dt /= 2.0;
      std::ostringstream os;
      os << "warning: " << (std::isnan(low) ? "non-finite values" : "undershoot " + std::to_string(low)) << " in ["
         << t << ", " << target << "] min; dt reduced to " << dt;
      field.log.push_back(os.str());
    }
    t = target;
    field.times.push_back(t);
    field.snapshots.push_back(u);
    if (stop_node < N && u[thr_comp * N + stop_node] >= threshold) {
      std::ostringstream os;
      os << "front reached x=" << g.x(stop_node) << " mm at t=" << t << " min; stopped";
      field.log.push_back(os.str());
      break;
    }
  }
  if (clipped > 0) {
    std::ostringstream os;
    os << "clipped " << clipped << " negative values to 0 (most negative " << worst_undershoot << ")";
    field.log.push_back(os.str());
  }
  return field;
}

/// Trapezoid-rule integral of one component of a snapshot.
inline double total_mass(const SpaceTimeField& f, std::size_t snap, std::size_t comp) {
  const auto v = f.component(snap, comp);
  const double dx = f.grid.dx();
  double s = 0.5 * (v.front() + v.back());
  for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
  return s * dx;
}

}  // namespace coagwave
