#pragma once

// Stationary points of the reduced six-component kinetics.
//
// Eliminating the activated factors through their own equilibrium relations
// leaves a single condition on thrombin, P(T) = -T0 * F_T(T, phi(T)) = T Q(T)
// with Q cubic. Positive roots of Q are the positive equilibria, and the sign
// of P'(T*) decides their stability.

#include "coagwave/models.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace coagwave {

/// Q(T) = a T^3 + b T^2 + c T + d.
struct CubicCoeffs {
  double a = 0, b = 0, c = 0, d = 0;

  [[nodiscard]] double operator()(double T) const { return ((a * T + b) * T + c) * T + d; }
  [[nodiscard]] double derivative(double T) const { return (3.0 * a * T + 2.0 * b) * T + c; }
  /// Sum of the magnitudes of the terms of Q'(T); reference scale for degeneracy.
  [[nodiscard]] double derivative_scale(double T) const {
    return std::abs(3.0 * a * T * T) + std::abs(2.0 * b * T) + std::abs(c);
  }
};

/// Coefficients consistent with the reduced kinetics (P = -T0 F_T on the
/// equilibrium manifold). `a` coincides with the printed formula.
inline CubicCoeffs polynomial_coeffs(const CoagParams& p) {
  const auto rc = detail::reduced_coefficients(p);
  const double G = rc.g * p.k11 / p.h11;  // k9 k11 / (h9 h10 h11)
  const double a1 = p.k10, a2 = rc.a2, b1 = p.k2, b2 = rc.b2;
  CubicCoeffs q;
  q.a = G * a2 * b2;
  q.b = G * (a1 * b2 + a2 * b1 - p.T0 * a2 * b2);
  q.c = G * (a1 * b1 - p.T0 * (a1 * b2 + a2 * b1));
  q.d = p.h2 * p.T0 - G * p.T0 * a1 * b1;
  return q;
}

/// The four coefficient formulas in their commonly printed form,
/// kept for comparison only. They differ from polynomial_coeffs in b (h10 and
/// the bar placement of the third term), c (third term lacks k10_bar) and d
/// (first term lacks T0).
inline CubicCoeffs printed_polynomial_coeffs(const CoagParams& p) {
  CubicCoeffs q;
  const double chain = p.k9 * p.k11 / (p.h9 * p.h11);
  q.a = p.k10_bar * p.k89 * p.k8 * p.k2_bar * p.k5 * p.k510 * p.k9 * p.k11 /
        (p.h89 * p.h8 * p.h5 * p.h10 * p.h510 * p.h9 * p.h11);
  const double t_k10_k2bar = p.k10 * p.k2_bar * p.k5 * p.k510 * p.k9 * p.k11 / (p.h5 * p.h10 * p.h510 * p.h9 * p.h11);
  q.b = -q.a * p.T0 + t_k10_k2bar + p.k2_bar * p.k10_bar * p.k89 * p.k8 * chain / (p.h89 * p.h8);
  q.c = -t_k10_k2bar * p.T0 + p.k2 * p.k10 * chain - p.k2 * p.k89 * p.k8 * chain / (p.h89 * p.h8 * p.h10) * p.T0;
  q.d = -p.k2 * p.k10 * chain / p.h10 + p.h2 * p.T0;
  return q;
}

/// P(T) = T Q(T) and P'(T) = Q(T) + T Q'(T).
inline double p_of_T(const CubicCoeffs& q, double T) { return T * q(T); }
inline double dp_of_T(const CubicCoeffs& q, double T) { return q(T) + T * q.derivative(T); }

struct PolyRoot {
  double value = 0;
  bool degenerate = false;  // |Q'(root)| below the degeneracy tolerance
};

inline constexpr double kDegeneracyTol = 1e-10;

namespace detail {

// Safeguarded Newton on a bracket [lo, hi] where q changes sign.
inline double polish_root(const CubicCoeffs& q, double lo, double hi) {
  double flo = q(lo);
  if (flo == 0.0) return lo;
  if (q(hi) == 0.0) return hi;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = q(x);
    if (fx == 0.0) return x;
    if ((fx < 0) == (flo < 0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
    }
    const double dfx = q.derivative(x);
    double next = (dfx != 0.0) ? x - fx / dfx : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x)) || hi - lo <= 4e-16 * std::abs(hi)) return next;
    x = next;
  }
  return x;
}

inline std::vector<double> quadratic_positive_roots(double b, double c, double d) {
  std::vector<double> out;
  if (b == 0.0) {
    if (c != 0.0 && -d / c > 0.0) out.push_back(-d / c);
    return out;
  }
  const double disc = c * c - 4.0 * b * d;
  if (disc < 0.0) return out;
  const double s = std::sqrt(disc);
  const double qq = -0.5 * (c + std::copysign(s, c));
  const double r1 = qq / b;
  const double r2 = (qq != 0.0) ? d / qq : r1;
  for (double r : {r1, r2})
    if (r > 0.0) out.push_back(r);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

/// Critical points of Q (roots of Q'), ascending; empty when Q' has none.
inline std::vector<double> critical_points(const CubicCoeffs& q) {
  if (q.a == 0.0) {
    if (q.b == 0.0) return {};
    return {-q.c / (2.0 * q.b)};
  }
  const double disc = q.b * q.b - 3.0 * q.a * q.c;
  if (disc <= 0.0) return {};
  const double s = std::sqrt(disc);
  double t1 = (-q.b - s) / (3.0 * q.a);
  double t2 = (-q.b + s) / (3.0 * q.a);
  if (t1 > t2) std::swap(t1, t2);
  return {t1, t2};
}

/// Number of positive roots according to the sign-pattern case analysis, or
/// nullopt for configurations it does not cover (a <= 0, or the three-root
/// configuration).
inline std::optional<int> count_by_case_analysis(const CubicCoeffs& q) {
  if (!(q.a > 0.0)) return std::nullopt;
  const double q0 = q.d;
  const auto crit = critical_points(q);
  if (crit.empty()) return q0 < 0.0 ? 1 : 0;
  const double t1 = crit[0], t2 = crit[1];
  const double q1 = q(t1), q2 = q(t2);
  if (t1 <= 0.0 && q0 < 0.0) return 1;
  if (t1 >= 0.0 && q0 < 0.0 && ((q1 > 0.0 && q2 > 0.0) || q1 < 0.0)) return 1;
  if (t2 > 0.0 && q0 > 0.0 && q2 < 0.0) return 2;
  if (t1 >= 0.0 && q0 < 0.0 && q1 > 0.0 && q2 < 0.0) return std::nullopt;  // three roots
  return 0;
}

/// All strictly positive real roots of Q, ascending.
///
/// Q is split into monotone pieces at its critical points; each piece with a
/// sign change is solved by bisection-safeguarded Newton. A critical point
/// where Q vanishes to rounding is reported as a degenerate (double) root.
inline std::vector<PolyRoot> positive_roots(const CubicCoeffs& q) {
  std::vector<PolyRoot> out;
  const double coef_norm = std::max({std::abs(q.a), std::abs(q.b), std::abs(q.c), std::abs(q.d)});
  if (coef_norm == 0.0) return out;

  if (q.a == 0.0) {
    for (double r : detail::quadratic_positive_roots(q.b, q.c, q.d)) {
      const bool degen = std::abs(q.derivative(r)) < kDegeneracyTol * std::max(q.derivative_scale(r), coef_norm);
      out.push_back({r, degen});
    }
    return out;
  }

  // Cauchy bound on root magnitude.
  const double bound = 1.0 + std::max({std::abs(q.b), std::abs(q.c), std::abs(q.d)}) / std::abs(q.a);
  std::vector<double> breaks = {0.0};
  for (double t : critical_points(q))
    if (t > 0.0 && t < bound) breaks.push_back(t);
  breaks.push_back(bound);

  auto is_degenerate = [&](double r) {
    return std::abs(q.derivative(r)) < kDegeneracyTol * std::max(q.derivative_scale(r), 1e-300);
  };

  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double lo = breaks[k], hi = breaks[k + 1];
    const double flo = q(lo), fhi = q(hi);
    if (k > 0) {
      // Touching root at an interior critical point.
      const double scale = std::abs(q.a * lo * lo * lo) + std::abs(q.b * lo * lo) + std::abs(q.c * lo) + std::abs(q.d);
      if (std::abs(flo) <= 1e-13 * scale && (out.empty() || out.back().value < lo)) {
        out.push_back({lo, true});
        continue;
      }
    }
    // An exact zero at an interior break is picked up as `lo` of the next piece.
    if (flo == 0.0 || fhi == 0.0 || (flo < 0.0) == (fhi < 0.0)) continue;
    const double r = detail::polish_root(q, lo, hi);
    if (r > 0.0) out.push_back({r, is_degenerate(r)});
  }
  std::sort(out.begin(), out.end(), [](const PolyRoot& x, const PolyRoot& y) { return x.value < y.value; });
  return out;
}

/// Reduced-model stationary state for a given thrombin level.
inline StateVector equilibrium_from_T(double T_star, const CoagParams& p) {
  if (!(T_star >= 0.0)) throw std::invalid_argument("equilibrium_from_T requires T >= 0");
  using namespace red_idx;
  StateVector s = StateVector::zeros(ModelKind::reduced6());
  s[T] = T_star;
  s[U5] = p.k5 / p.h5 * T_star;
  s[U8] = p.k8 / p.h8 * T_star;
  s[U11] = p.k11 / p.h11 * T_star;
  s[U9] = p.k9 * p.k11 / (p.h9 * p.h11) * T_star;
  s[U10] = (p.k10 * s[U9] + p.k10_bar * (p.k89 / p.h89) * s[U9] * s[U8]) / p.h10;
  return s;
}

/// Stationary state of any coagulation model at the given thrombin level
/// (the fast variables slaved to T). Full14 places the inactive forms at
/// their plasma levels minus the activated amount.
inline StateVector equilibrium_state(const ModelKind& kind, double T_star, const CoagParams& p) {
  switch (kind.tag) {
    case ModelTag::Reduced6: return equilibrium_from_T(T_star, p);
    case ModelTag::TwoEq: return {kind, {T_star, p.k11 / p.h11 * T_star}};
    case ModelTag::OneEq:
    case ModelTag::Scalar: return {kind, {T_star}};
    case ModelTag::Full14: {
      using namespace full_idx;
      const auto r = equilibrium_from_T(T_star, p);
      StateVector s = StateVector::zeros(kind);
      s[T] = T_star;
      s[P] = std::max(0.0, p.T0 - T_star);
      s[U5] = std::min(r[red_idx::U5], p.V0_5);
      s[U8] = std::min(r[red_idx::U8], p.V0_8);
      s[U9] = std::min(r[red_idx::U9], p.V0_9);
      s[U10] = std::min(r[red_idx::U10], p.V0_10);
      s[U11] = std::min(r[red_idx::U11], p.V0_11);
      s[V5] = p.V0_5 - s[U5];
      s[V8] = p.V0_8 - s[U8];
      s[V9] = p.V0_9 - s[U9];
      s[V10] = p.V0_10 - s[U10];
      s[V11] = p.V0_11 - s[U11];
      s[C1] = p.k510 / p.h510 * s[U5] * s[U10];
      s[C2] = p.k89 / p.h89 * s[U8] * s[U9];
      return s;
    }
  }
  return StateVector::zeros(kind);
}

/// Largest real part among the eigenvalues of a square matrix.
inline double principal_eigenvalue(const Eigen::MatrixXd& J) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(J, false);
  return es.eigenvalues().real().maxCoeff();
}

/// Linearization of the homotopy endpoint in which the thrombin equation is
/// closed in T alone. Rows/columns are ordered (T, U5, U8, U11, U9, U10); the
/// matrix is lower triangular.
inline Eigen::MatrixXd decoupled_linearization(const CoagParams& p, double T_star) {
  const auto q = polynomial_coeffs(p);
  const auto u = equilibrium_from_T(T_star, p);
  const double kt = p.k10_bar * p.k89 / p.h89;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(6, 6);
  M(0, 0) = -dp_of_T(q, T_star) / p.T0;
  M(1, 0) = p.k5;
  M(1, 1) = -p.h5;
  M(2, 0) = p.k8;
  M(2, 2) = -p.h8;
  M(3, 0) = p.k11;
  M(3, 3) = -p.h11;
  M(4, 3) = p.k9;
  M(4, 4) = -p.h9;
  M(5, 2) = kt * u[red_idx::U9];
  M(5, 4) = p.k10 + kt * u[red_idx::U8];
  M(5, 5) = -p.h10;
  return M;
}

enum class Classification { NoPositiveEquilibrium, Monostable, Bistable, ThreePositiveRoots };

inline std::string to_string(Classification c) {
  switch (c) {
    case Classification::NoPositiveEquilibrium: return "NoPositiveEquilibrium";
    case Classification::Monostable: return "Monostable";
    case Classification::Bistable: return "Bistable";
    case Classification::ThreePositiveRoots: return "ThreePositiveRoots";
  }
  return "?";
}

struct RootStability {
  double T = 0;
  double dP = 0;                  // P'(T*)
  double principal = 0;           // principal eigenvalue of F'(u*)
  double residual = 0;            // ||F(u*)||_inf
  bool degenerate = false;
  bool stable = false;            // P'(T*) > 0
  bool consistent = true;         // principal > 0  <=>  P'(T*) < 0
};

struct EquilibriumReport {
  CubicCoeffs coeffs;
  std::vector<double> roots;
  Classification classification = Classification::NoPositiveEquilibrium;
  std::vector<StateVector> states;
  std::vector<RootStability> stability;
  std::optional<int> case_analysis_count;
  bool case_analysis_agrees = true;

  /// Largest positive root (the clotting state), if any.
  [[nodiscard]] std::optional<double> upper_root() const {
    if (roots.empty()) return std::nullopt;
    return roots.back();
  }
  /// Threshold root of a bistable configuration.
  [[nodiscard]] std::optional<double> middle_root() const {
    if (classification != Classification::Bistable) return std::nullopt;
    return roots.front();
  }
};

inline RootStability analyze_root(const CoagParams& p, const CubicCoeffs& q, const PolyRoot& root) {
  RootStability rs;
  rs.T = root.value;
  rs.dP = dp_of_T(q, root.value);
  rs.degenerate = root.degenerate;
  const auto state = equilibrium_from_T(root.value, p);
  const auto F = eval_rhs(ModelKind::reduced6(), state, p);
  for (double v : F.values) rs.residual = std::max(rs.residual, std::abs(v));
  rs.principal = principal_eigenvalue(eval_jacobian(ModelKind::reduced6(), state, p));
  rs.stable = rs.dP > 0.0;
  rs.consistent = rs.degenerate || ((rs.principal > 0.0) == (rs.dP < 0.0));
  return rs;
}

inline EquilibriumReport classify(const CoagParams& p) {
  validate(p);
  EquilibriumReport rep;
  rep.coeffs = polynomial_coeffs(p);
  const auto roots = positive_roots(rep.coeffs);
  for (const auto& r : roots) {
    rep.roots.push_back(r.value);
    rep.states.push_back(equilibrium_from_T(r.value, p));
    rep.stability.push_back(analyze_root(p, rep.coeffs, r));
  }
  switch (roots.size()) {
    case 0: rep.classification = Classification::NoPositiveEquilibrium; break;
    case 1: rep.classification = Classification::Monostable; break;
    case 2: rep.classification = Classification::Bistable; break;
    default: rep.classification = Classification::ThreePositiveRoots; break;
  }
  rep.case_analysis_count = count_by_case_analysis(rep.coeffs);
  rep.case_analysis_agrees =
      !rep.case_analysis_count || *rep.case_analysis_count == static_cast<int>(roots.size());
  return rep;
}

// ---------------------------------------------------------------------------

struct StabilityCheck {
  std::size_t config = 0;  // 0 = unperturbed parameters
  double T = 0;
  double dP = 0;
  double principal = 0;
  double decoupled_principal = 0;
  double residual = 0;
  bool degenerate = false;
  bool agrees = true;            // sign(principal) == -sign(P')
  bool decoupled_agrees = true;  // decoupled matrix gives the same sign
  bool decoupled_triangular = true;
};

struct StabilityReport {
  std::size_t configs_tested = 0;
  std::size_t configs_rejected = 0;  // perturbations that lost the bistable structure
  std::size_t degenerate = 0;
  std::size_t disagreements = 0;
  double max_relative_residual = 0;  // ||F(u*)|| / max(1, T*)
  std::vector<StabilityCheck> checks;
  [[nodiscard]] bool pass() const { return disagreements == 0; }
};

/// Multiplies every reduced-model rate by an independent log-uniform factor
/// in [lo, hi].
inline CoagParams perturb_rates(const CoagParams& base, std::mt19937_64& rng, double lo = 0.5, double hi = 2.0) {
  static constexpr double CoagParams::*rates[] = {
      &CoagParams::k11, &CoagParams::h11, &CoagParams::k10,  &CoagParams::k10_bar, &CoagParams::h10,
      &CoagParams::k9,  &CoagParams::h9,  &CoagParams::k89,  &CoagParams::h89,     &CoagParams::k8,
      &CoagParams::h8,  &CoagParams::k5,  &CoagParams::h5,   &CoagParams::k510,    &CoagParams::h510,
      &CoagParams::k2,  &CoagParams::h2,  &CoagParams::k2_bar};
  std::uniform_real_distribution<double> logu(std::log(lo), std::log(hi));
  CoagParams p = base;
  for (auto m : rates) p.*m *= std::exp(logu(rng));
  return p;
}

/// Checks the eigenvalue / P'-sign correspondence on the base parameters and
/// on `trials` random perturbations that keep at least two positive roots.
inline StabilityReport verify_theorem1(const CoagParams& params, std::size_t trials, std::uint64_t seed = 1) {
  StabilityReport rep;
  std::mt19937_64 rng(seed);

  auto check_config = [&](const CoagParams& p, std::size_t config_id) {
    const auto q = polynomial_coeffs(p);
    for (const auto& root : positive_roots(q)) {
      const auto rs = analyze_root(p, q, root);
      StabilityCheck c;
      c.config = config_id;
      c.T = rs.T;
      c.dP = rs.dP;
      c.principal = rs.principal;
      c.residual = rs.residual;
      c.degenerate = rs.degenerate || std::abs(rs.dP) < kDegeneracyTol * std::max(1.0, q.derivative_scale(rs.T) * rs.T);
      const auto M = decoupled_linearization(p, rs.T);
      c.decoupled_principal = M.diagonal().maxCoeff();
      for (Eigen::Index i = 0; i < 6; ++i)
        for (Eigen::Index j = i + 1; j < 6; ++j)
          if (M(i, j) != 0.0) c.decoupled_triangular = false;
      rep.max_relative_residual = std::max(rep.max_relative_residual, rs.residual / std::max(1.0, rs.T));
      if (c.degenerate) {
        ++rep.degenerate;
      } else {
        c.agrees = (c.principal > 0.0) == (c.dP < 0.0);
        c.decoupled_agrees = (c.decoupled_principal > 0.0) == (c.principal > 0.0);
        if (!c.agrees || !c.decoupled_agrees || !c.decoupled_triangular) ++rep.disagreements;
      }
      rep.checks.push_back(c);
    }
    ++rep.configs_tested;
  };

  if (positive_roots(polynomial_coeffs(params)).empty())
    throw std::invalid_argument("verify_theorem1: parameters have no positive equilibrium");
  check_config(params, 0);

  std::size_t kept = 0;
  const std::size_t max_attempts = 100 * trials + 100;
  for (std::size_t attempt = 0; kept < trials && attempt < max_attempts; ++attempt) {
    const auto p = perturb_rates(params, rng);
    if (positive_roots(polynomial_coeffs(p)).size() < 2) {
      ++rep.configs_rejected;
      continue;
    }
    ++kept;
    check_config(p, kept);
  }
  return rep;
}

}  // namespace coagwave
