#pragma once

// Reaction terms of the four coagulation model fidelities plus the
// dimensionless scalar equation b u^n (1 - u) - sigma u.
//
// Every evaluator here is a pure function of (state, params). The spatial
// operator lives in rdsolver.hpp.

#include "coagwave/params.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coagwave {

enum class ModelTag { Full14, Reduced6, TwoEq, OneEq, Scalar };

inline constexpr std::size_t kMaxComponents = 14;

/// Which reaction system to evaluate. Scalar carries its own (n, b, sigma).
struct ModelKind {
  ModelTag tag = ModelTag::Reduced6;
  int n = 3;
  double b = 0.0;
  double sigma = 0.0;

  static constexpr ModelKind full14() { return {ModelTag::Full14}; }
  static constexpr ModelKind reduced6() { return {ModelTag::Reduced6}; }
  static constexpr ModelKind two_eq() { return {ModelTag::TwoEq}; }
  static constexpr ModelKind one_eq() { return {ModelTag::OneEq}; }
  static ModelKind scalar(int n, double b, double sigma) {
    if (n < 2 || !(b > 0.0) || !(sigma >= 0.0))
      throw std::invalid_argument("scalar model requires n >= 2, b > 0, sigma >= 0");
    return {ModelTag::Scalar, n, b, sigma};
  }

  [[nodiscard]] constexpr std::size_t dim() const {
    switch (tag) {
      case ModelTag::Full14: return 14;
      case ModelTag::Reduced6: return 6;
      case ModelTag::TwoEq: return 2;
      case ModelTag::OneEq:
      case ModelTag::Scalar: return 1;
    }
    return 0;
  }

  /// Index of thrombin (or u for the scalar model) inside the state.
  [[nodiscard]] constexpr std::size_t thrombin_index() const { return tag == ModelTag::Full14 ? 2 : 0; }

  [[nodiscard]] constexpr bool is_coagulation() const { return tag != ModelTag::Scalar; }

  [[nodiscard]] std::string name() const {
    switch (tag) {
      case ModelTag::Full14: return "full14";
      case ModelTag::Reduced6: return "reduced6";
      case ModelTag::TwoEq: return "two_eq";
      case ModelTag::OneEq: return "one_eq";
      case ModelTag::Scalar: return "scalar";
    }
    return "?";
  }

  [[nodiscard]] std::span<const std::string_view> component_names() const {
    static constexpr std::array<std::string_view, 14> full = {
        "U11", "V11", "T", "P", "C1", "U5", "V5", "U10", "V10", "C2", "U8", "V8", "U9", "V9"};
    static constexpr std::array<std::string_view, 6> reduced = {"T", "U5", "U8", "U9", "U10", "U11"};
    static constexpr std::array<std::string_view, 2> two = {"T", "U11"};
    static constexpr std::array<std::string_view, 1> one = {"T"};
    static constexpr std::array<std::string_view, 1> scalar_names = {"u"};
    switch (tag) {
      case ModelTag::Full14: return full;
      case ModelTag::Reduced6: return reduced;
      case ModelTag::TwoEq: return two;
      case ModelTag::OneEq: return one;
      case ModelTag::Scalar: return scalar_names;
    }
    return {};
  }

  friend bool operator==(const ModelKind&, const ModelKind&) = default;
};

/// Accepts full14|full, reduced6|reduced, two_eq, one_eq. The scalar model
/// needs (n, b, sigma) and is built with ModelKind::scalar instead.
inline ModelKind parse_model(std::string_view name) {
  if (name == "full14" || name == "full") return ModelKind::full14();
  if (name == "reduced6" || name == "reduced") return ModelKind::reduced6();
  if (name == "two_eq" || name == "two") return ModelKind::two_eq();
  if (name == "one_eq" || name == "one") return ModelKind::one_eq();
  throw std::invalid_argument("unknown model '" + std::string(name) +
                              "' (expected full14, reduced6, two_eq, one_eq)");
}

/// Concentration vector laid out as ModelKind::component_names().
struct StateVector {
  ModelKind kind;
  std::vector<double> values;

  StateVector() = default;
  StateVector(ModelKind k, std::vector<double> v) : kind(k), values(std::move(v)) {
    if (values.size() != kind.dim())
      throw std::invalid_argument("state of size " + std::to_string(values.size()) + " does not match model " +
                                  kind.name());
  }
  static StateVector zeros(ModelKind k) { return {k, std::vector<double>(k.dim(), 0.0)}; }

  [[nodiscard]] std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  [[nodiscard]] double get(std::string_view component) const { return values[index_of(component)]; }
  void set(std::string_view component, double v) { values[index_of(component)] = v; }

  [[nodiscard]] std::size_t index_of(std::string_view component) const {
    const auto names = kind.component_names();
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == component) return i;
    throw std::out_of_range("model " + kind.name() + " has no component " + std::string(component));
  }

  [[nodiscard]] double thrombin() const { return values[kind.thrombin_index()]; }
};

class NegativeConcentrationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Component indices.
namespace full_idx {
inline constexpr std::size_t U11 = 0, V11 = 1, T = 2, P = 3, C1 = 4, U5 = 5, V5 = 6, U10 = 7, V10 = 8, C2 = 9,
                             U8 = 10, V8 = 11, U9 = 12, V9 = 13;
}
namespace red_idx {
inline constexpr std::size_t T = 0, U5 = 1, U8 = 2, U9 = 3, U10 = 4, U11 = 5;
}

namespace detail {

inline double ipow(double x, int n) {
  double r = 1.0;
  for (; n > 0; n >>= 1, x *= x)
    if (n & 1) r *= x;
  return r;
}

// Coefficients of the two-equation and one-equation reductions:
//   thrombin source = U11 * g * (k10 + a2 T) (k2 + b2 T) (1 - T/T0)
struct ReducedCoefficients {
  double g;   // k9 / (h9 h10)
  double a2;  // k10_bar k89 k8 / (h89 h8)
  double b2;  // k2_bar k510 k5 / (h510 h5)
};

inline ReducedCoefficients reduced_coefficients(const CoagParams& p) {
  return {p.k9 / (p.h9 * p.h10), p.k10_bar * p.k89 * p.k8 / (p.h89 * p.h8),
          p.k2_bar * p.k510 * p.k5 / (p.h510 * p.h5)};
}

// (k10 + a2 T)(k2 + b2 T)(1 - T/T0) and its T-derivative.
inline double activation_poly(const CoagParams& p, const ReducedCoefficients& rc, double T, double* dT) {
  const double x = p.k10 + rc.a2 * T;
  const double y = p.k2 + rc.b2 * T;
  const double z = 1.0 - T / p.T0;
  if (dT) *dT = rc.a2 * y * z + rc.b2 * x * z - x * y / p.T0;
  return x * y * z;
}

}  // namespace detail

/// Reaction rates F(u) written into `out`; no validation. Hot path of the
/// solver.
inline void reaction_rates(const ModelKind& kind, std::span<const double> u, std::span<double> out,
                           const CoagParams& p) {
  switch (kind.tag) {
    case ModelTag::Full14: {
      using namespace full_idx;
      const double act_x = p.r2 * u[U10] * u[P] / (u[P] + p.K2m);
      const double act_c = p.r2_bar * u[C1] * u[P] / (u[P] + p.K2m_bar);
      out[U11] = p.r11 * u[V11] * u[T] - p.h11 * u[U11];
      out[V11] = -p.r11 * u[V11] * u[T];
      out[T] = act_x + act_c - p.h2 * u[T];
      out[P] = -act_x - act_c;
      out[C1] = p.k510 * u[U5] * u[U10] - p.h510 * u[C1];
      out[U5] = p.r5 * u[V5] * u[T] - p.h5 * u[U5];
      out[V5] = -p.r5 * u[V5] * u[T];
      out[U10] = p.r10 * u[V10] * u[U9] + p.r10_bar * u[V10] * u[C2] - p.q10 * u[U10];
      out[V10] = -p.r10 * u[V10] * u[U9] - p.r10_bar * u[V10] * u[C2];
      out[C2] = p.k89 * u[U8] * u[U9] - p.h89 * u[C2];
      out[U8] = p.r8 * u[V8] * u[T] - p.q8 * u[U8];
      out[V8] = -p.r8 * u[V8] * u[T];
      out[U9] = p.r9 * u[V9] * u[U11] - p.q9 * u[U9];
      out[V9] = -p.r9 * u[V9] * u[U11];
      return;
    }
    case ModelTag::Reduced6: {
      using namespace red_idx;
      const double prothrombinase = p.k2_bar * (p.k510 / p.h510) * u[U10] * u[U5];
      out[T] = (p.k2 * u[U10] + prothrombinase) * (1.0 - u[T] / p.T0) - p.h2 * u[T];
      out[U5] = p.k5 * u[T] - p.h5 * u[U5];
      out[U8] = p.k8 * u[T] - p.h8 * u[U8];
      out[U9] = p.k9 * u[U11] - p.h9 * u[U9];
      out[U10] = p.k10 * u[U9] + p.k10_bar * (p.k89 / p.h89) * u[U9] * u[U8] - p.h10 * u[U10];
      out[U11] = p.k11 * u[T] - p.h11 * u[U11];
      return;
    }
    case ModelTag::TwoEq: {
      const auto rc = detail::reduced_coefficients(p);
      out[0] = u[1] * rc.g * detail::activation_poly(p, rc, u[0], nullptr) - p.h2 * u[0];
      out[1] = p.k11 * u[0] - p.h11 * u[1];
      return;
    }
    case ModelTag::OneEq: {
      const auto rc = detail::reduced_coefficients(p);
      const double g1 = rc.g * p.k11 / p.h11;
      out[0] = g1 * u[0] * detail::activation_poly(p, rc, u[0], nullptr) - p.h2 * u[0];
      return;
    }
    case ModelTag::Scalar: {
      const double w = u[0];
      out[0] = kind.b * detail::ipow(w, kind.n) * (1.0 - w) - kind.sigma * w;
      return;
    }
  }
}

/// Analytic Jacobian dF_i/du_j; no validation.
inline void reaction_jacobian(const ModelKind& kind, std::span<const double> u, Eigen::MatrixXd& J,
                              const CoagParams& p) {
  const auto m = static_cast<Eigen::Index>(kind.dim());
  J.setZero(m, m);
  switch (kind.tag) {
    case ModelTag::Full14: {
      using namespace full_idx;
      const double sx = u[P] / (u[P] + p.K2m);
      const double sc = u[P] / (u[P] + p.K2m_bar);
      const double dsx = p.K2m / ((u[P] + p.K2m) * (u[P] + p.K2m));
      const double dsc = p.K2m_bar / ((u[P] + p.K2m_bar) * (u[P] + p.K2m_bar));
      J(U11, U11) = -p.h11;
      J(U11, V11) = p.r11 * u[T];
      J(U11, T) = p.r11 * u[V11];
      J(V11, V11) = -p.r11 * u[T];
      J(V11, T) = -p.r11 * u[V11];
      const double dT_dU10 = p.r2 * sx;
      const double dT_dC1 = p.r2_bar * sc;
      const double dT_dP = p.r2 * u[U10] * dsx + p.r2_bar * u[C1] * dsc;
      J(T, U10) = dT_dU10;
      J(T, C1) = dT_dC1;
      J(T, P) = dT_dP;
      J(T, T) = -p.h2;
      J(P, U10) = -dT_dU10;
      J(P, C1) = -dT_dC1;
      J(P, P) = -dT_dP;
      J(C1, U5) = p.k510 * u[U10];
      J(C1, U10) = p.k510 * u[U5];
      J(C1, C1) = -p.h510;
      J(U5, V5) = p.r5 * u[T];
      J(U5, T) = p.r5 * u[V5];
      J(U5, U5) = -p.h5;
      J(V5, V5) = -p.r5 * u[T];
      J(V5, T) = -p.r5 * u[V5];
      J(U10, V10) = p.r10 * u[U9] + p.r10_bar * u[C2];
      J(U10, U9) = p.r10 * u[V10];
      J(U10, C2) = p.r10_bar * u[V10];
      J(U10, U10) = -p.q10;
      J(V10, V10) = -(p.r10 * u[U9] + p.r10_bar * u[C2]);
      J(V10, U9) = -p.r10 * u[V10];
      J(V10, C2) = -p.r10_bar * u[V10];
      J(C2, U8) = p.k89 * u[U9];
      J(C2, U9) = p.k89 * u[U8];
      J(C2, C2) = -p.h89;
      J(U8, V8) = p.r8 * u[T];
      J(U8, T) = p.r8 * u[V8];
      J(U8, U8) = -p.q8;
      J(V8, V8) = -p.r8 * u[T];
      J(V8, T) = -p.r8 * u[V8];
      J(U9, V9) = p.r9 * u[U11];
      J(U9, U11) = p.r9 * u[V9];
      J(U9, U9) = -p.q9;
      J(V9, V9) = -p.r9 * u[U11];
      J(V9, U11) = -p.r9 * u[V9];
      return;
    }
    case ModelTag::Reduced6: {
      using namespace red_idx;
      const double kc = p.k2_bar * (p.k510 / p.h510);
      const double z = 1.0 - u[T] / p.T0;
      J(T, T) = -(p.k2 * u[U10] + kc * u[U10] * u[U5]) / p.T0 - p.h2;
      J(T, U5) = kc * u[U10] * z;
      J(T, U10) = (p.k2 + kc * u[U5]) * z;
      J(U5, T) = p.k5;
      J(U5, U5) = -p.h5;
      J(U8, T) = p.k8;
      J(U8, U8) = -p.h8;
      J(U9, U11) = p.k9;
      J(U9, U9) = -p.h9;
      const double kt = p.k10_bar * (p.k89 / p.h89);
      J(U10, U9) = p.k10 + kt * u[U8];
      J(U10, U8) = kt * u[U9];
      J(U10, U10) = -p.h10;
      J(U11, T) = p.k11;
      J(U11, U11) = -p.h11;
      return;
    }
    case ModelTag::TwoEq: {
      const auto rc = detail::reduced_coefficients(p);
      double dpoly = 0.0;
      const double poly = detail::activation_poly(p, rc, u[0], &dpoly);
      J(0, 0) = u[1] * rc.g * dpoly - p.h2;
      J(0, 1) = rc.g * poly;
      J(1, 0) = p.k11;
      J(1, 1) = -p.h11;
      return;
    }
    case ModelTag::OneEq: {
      const auto rc = detail::reduced_coefficients(p);
      const double g1 = rc.g * p.k11 / p.h11;
      double dpoly = 0.0;
      const double poly = detail::activation_poly(p, rc, u[0], &dpoly);
      J(0, 0) = g1 * (poly + u[0] * dpoly) - p.h2;
      return;
    }
    case ModelTag::Scalar: {
      const double w = u[0];
      const int n = kind.n;
      J(0, 0) = kind.b * n * detail::ipow(w, n - 1) - kind.b * (n + 1) * detail::ipow(w, n) - kind.sigma;
      return;
    }
  }
}

namespace detail {

inline void check_state(const ModelKind& kind, const StateVector& state) {
  if (state.size() != kind.dim() || state.kind.tag != kind.tag)
    throw std::invalid_argument("state layout does not match model " + kind.name());
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!(state[i] >= 0.0))
      throw NegativeConcentrationError("component " + std::string(kind.component_names()[i]) +
                                       " is negative or NaN (" + std::to_string(state[i]) + ")");
  }
}

}  // namespace detail

/// Reaction terms F(u), without diffusion.
inline StateVector eval_rhs(const ModelKind& kind, const StateVector& state, const CoagParams& params) {
  detail::check_state(kind, state);
  StateVector out = StateVector::zeros(kind);
  reaction_rates(kind, state.values, out.values, params);
  return out;
}

inline Eigen::MatrixXd eval_jacobian(const ModelKind& kind, const StateVector& state, const CoagParams& params) {
  detail::check_state(kind, state);
  Eigen::MatrixXd J;
  reaction_jacobian(kind, state.values, J, params);
  return J;
}

// ---------------------------------------------------------------------------
// Nondimensionalization: T = T0 u, t = t~/h2, D = D~ h2.

struct DimensionlessParams {
  double M1 = 0;  // k2 k9 k10 k11 / (h2 h9 h10), without h11
  double M2 = 0;  // k8 k89 k10_bar T0 / (k10 h8 h89)
  double M3 = 0;  // k2_bar k5 k510 T0 / (k2 h5 h510)
  double b = 0;   // M1 M2 M3
  double D_tilde = 0;
  double M1_with_h11 = 0;  // M1 / h11, the prefactor the one-equation model actually carries
};

inline DimensionlessParams nondimensionalize(const CoagParams& p) {
  validate(p);
  DimensionlessParams d;
  d.M1 = p.k2 * p.k9 * p.k10 * p.k11 / (p.h2 * p.h9 * p.h10);
  d.M2 = p.k8 * p.k89 * p.k10_bar / (p.k10 * p.h8 * p.h89) * p.T0;
  d.M3 = p.k2_bar * p.k5 * p.k510 / (p.k2 * p.h5 * p.h510) * p.T0;
  d.b = d.M1 * d.M2 * d.M3;
  d.D_tilde = p.D / p.h2;
  d.M1_with_h11 = d.M1 / p.h11;
  return d;
}

/// Speed in mm/min from a speed measured in (mm, t~ = h2 t) units.
inline double redimensionalize_speed(double dimensionless_speed, const CoagParams& p) {
  return dimensionless_speed * p.h2;
}
inline double dimensionless_speed(double speed, const CoagParams& p) { return speed / p.h2; }

// ---------------------------------------------------------------------------
// Monotonicity (cooperative system) check.

/// Upper corner of the physically admissible box. Coagulation models use
/// T <= T0 and the invariant-region bound of each activated factor; the full
/// model uses plasma levels.
inline std::vector<double> admissible_upper(const ModelKind& kind, const CoagParams& p) {
  const double t_hi = p.T0;
  const double u5 = p.k5 / p.h5 * t_hi, u8 = p.k8 / p.h8 * t_hi, u11 = p.k11 / p.h11 * t_hi;
  const double u9 = p.k9 / p.h9 * u11;
  const double u10 = (p.k10 * u9 + p.k10_bar * (p.k89 / p.h89) * u9 * u8) / p.h10;
  switch (kind.tag) {
    case ModelTag::Reduced6: return {t_hi, u5, u8, u9, u10, u11};
    case ModelTag::TwoEq: return {t_hi, u11};
    case ModelTag::OneEq: return {t_hi};
    case ModelTag::Scalar: return {1.0};
    case ModelTag::Full14: {
      using namespace full_idx;
      std::vector<double> hi(14);
      hi[U11] = hi[V11] = p.V0_11;
      hi[T] = hi[P] = p.T0;
      hi[U5] = hi[V5] = p.V0_5;
      hi[U10] = hi[V10] = p.V0_10;
      hi[U8] = hi[V8] = p.V0_8;
      hi[U9] = hi[V9] = p.V0_9;
      hi[C1] = p.k510 / p.h510 * p.V0_5 * p.V0_10;
      hi[C2] = p.k89 / p.h89 * p.V0_8 * p.V0_9;
      return hi;
    }
  }
  return {};
}

inline bool in_admissible_box(const StateVector& s, const CoagParams& p, double rel_tol = 1e-12) {
  const auto hi = admissible_upper(s.kind, p);
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] < 0.0 || s[i] > hi[i] * (1.0 + rel_tol)) return false;
  return true;
}

/// Uniform samples in the admissible box.
inline std::vector<StateVector> sample_admissible(const ModelKind& kind, const CoagParams& p, std::size_t count,
                                                  std::uint64_t seed) {
  const auto hi = admissible_upper(kind, p);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<StateVector> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    StateVector v = StateVector::zeros(kind);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = hi[i] * unit(rng);
    out.push_back(std::move(v));
  }
  return out;
}

struct MonotoneViolation {
  std::size_t row, col, sample;
  double value;
};

struct MonotoneReport {
  bool pass = true;
  double min_offdiag = std::numeric_limits<double>::infinity();
  std::size_t min_row = 0, min_col = 0, min_sample = 0;
  std::vector<MonotoneViolation> violations;
  std::vector<std::size_t> out_of_box;  // sample indices outside the admissible box
};

/// Every off-diagonal Jacobian entry must be >= -tol at every sample.
inline MonotoneReport check_monotone(const ModelKind& kind, const CoagParams& params,
                                     std::span<const StateVector> samples, double tol = 1e-12) {
  MonotoneReport rep;
  Eigen::MatrixXd J;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& st = samples[s];
    detail::check_state(kind, st);
    if (kind.is_coagulation() && !in_admissible_box(st, params)) rep.out_of_box.push_back(s);
    reaction_jacobian(kind, st.values, J, params);
    for (Eigen::Index i = 0; i < J.rows(); ++i) {
      for (Eigen::Index j = 0; j < J.cols(); ++j) {
        if (i == j) continue;
        const double v = J(i, j);
        if (v < rep.min_offdiag) {
          rep.min_offdiag = v;
          rep.min_row = static_cast<std::size_t>(i);
          rep.min_col = static_cast<std::size_t>(j);
          rep.min_sample = s;
        }
        if (v < -tol) {
          rep.pass = false;
          rep.violations.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), s, v});
        }
      }
    }
  }
  return rep;
}

/// Largest |dF_i/du_i| over the given states; bounds the explicit time step.
inline double max_kinetic_rate(const ModelKind& kind, std::span<const StateVector> states, const CoagParams& p) {
  double rho = 0.0;
  Eigen::MatrixXd J;
  for (const auto& s : states) {
    reaction_jacobian(kind, s.values, J, p);
    for (Eigen::Index i = 0; i < J.rows(); ++i) rho = std::max(rho, std::abs(J(i, i)));
  }
  return rho;
}

}  // namespace coagwave
