#pragma once

// Closed-form speed estimates for the bistable scalar equation
//   D w'' + c w' + b w^n (1 - w) - sigma w = 0
// and their dimensional versions for the coagulation parameters.

#include "coagwave/models.hpp"
#include "coagwave/params.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace coagwave {

class NoUpperStateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct AnalyticWorkpad {
  int n = 3;
  double b = 0, sigma = 0, D = 0;
  double w_star = 0;
  double A = 0;          // narrow-zone integral constant
  double integral = 0;   // int_0^w* f(w) dw
  double alpha = 0;      // f'(0)
  double beta = 0;       // f'(w*)
  double r = 0;          // area-matching constant, from the integral
  double r_printed = 0;  // the expanded polynomial form, kept for comparison
  double discriminant = 0;
  double w0 = 0;                 // kink, smaller root of the area-matching quadratic
  double w0_other = 0;           // larger root; lies above w*
  double w_bar = 0;
};

class InvalidKinkError : public std::domain_error {
 public:
  InvalidKinkError(const std::string& what, AnalyticWorkpad pad) : std::domain_error(what), workpad(pad) {}
  AnalyticWorkpad workpad;
};

enum class SpeedMethod { NarrowZone, PiecewiseLinear };

inline std::string to_string(SpeedMethod m) { return m == SpeedMethod::NarrowZone ? "narrow_zone" : "piecewise_linear"; }

struct SpeedEstimate {
  SpeedMethod method = SpeedMethod::NarrowZone;
  double value = 0;
  bool propagating = true;
  AnalyticWorkpad workpad;
};

/// Maximal root of b w^(n-1) (1 - w) = sigma.
inline double w_star(int n, double b, double sigma) {
  if (n < 2 || !(b > 0.0) || !(sigma >= 0.0)) throw std::invalid_argument("w_star requires n >= 2, b > 0, sigma >= 0");
  if (sigma == 0.0) return 1.0;
  auto g = [&](double w) { return b * detail::ipow(w, n - 1) * (1.0 - w) - sigma; };
  double lo = (n - 1.0) / n;
  double hi = 1.0;
  if (!(g(lo) > 0.0))
    throw NoUpperStateError("no positive upper state: sigma = " + std::to_string(sigma) +
                            " exceeds b * max w^(n-1)(1-w) = " + std::to_string(g(lo) + sigma));
  while (hi - lo > 1e-15) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace detail {

inline AnalyticWorkpad base_workpad(int n, double b, double sigma, double D) {
  if (!(D > 0.0)) throw std::invalid_argument("diffusion coefficient must be positive");
  AnalyticWorkpad w;
  w.n = n;
  w.b = b;
  w.sigma = sigma;
  w.D = D;
  w.w_star = coagwave::w_star(n, b, sigma);
  const double ws = w.w_star;
  const double wn1 = ipow(ws, n - 1), wn = wn1 * ws;
  w.A = 4.0 * b * D * (wn1 / (n + 1.0) - wn / (n + 2.0));
  w.integral = b * (wn * ws / (n + 1.0) - wn * ws * ws / (n + 2.0)) - sigma * ws * ws / 2.0;
  w.alpha = -sigma;
  w.beta = b * n * wn1 - b * (n + 1.0) * wn - sigma;
  w.r = -w.beta * ws * ws / 2.0 - w.integral;
  w.r_printed = b * wn * ws * (-n / 2.0 - b / (n + 1.0)) + b * wn * ws * ws * ((n + 1.0) / 2.0 + 1.0 / (n + 2.0)) +
                sigma * ws * ws;
  return w;
}

}  // namespace detail

/// Narrow reaction zone estimate (A - 2 D sigma) / sqrt(2 A).
inline SpeedEstimate narrow_zone_speed(int n, double b, double sigma, double D) {
  SpeedEstimate e;
  e.method = SpeedMethod::NarrowZone;
  e.workpad = detail::base_workpad(n, b, sigma, D);
  const double A = e.workpad.A;
  if (!(A > 0.0)) throw std::domain_error("narrow-zone constant A is not positive");
  e.value = (A - 2.0 * D * sigma) / std::sqrt(2.0 * A);
  e.propagating = e.value > 0.0;
  return e;
}

/// Speed of the piecewise-linear front with slopes alpha (below the kink
/// w0) and beta (above it) joining 0 and w_star.
inline double pwl_speed(double alpha, double beta, double w0, double ws, double D) {
  const double wb = w0 / (w0 - ws);
  const double rad = (wb - 1.0) * (alpha * wb * wb - beta * wb);
  if (!(rad > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(D) * (alpha * wb * wb - beta) / std::sqrt(rad);
}

/// Piecewise-linear estimate. The kink is placed so both nonlinearities
/// enclose the same area over [0, w*].
inline SpeedEstimate piecewise_linear_speed(int n, double b, double sigma, double D) {
  SpeedEstimate e;
  e.method = SpeedMethod::PiecewiseLinear;
  auto& w = e.workpad;
  w = detail::base_workpad(n, b, sigma, D);
  const double ab = w.alpha - w.beta;
  w.discriminant = w.beta * w.beta * w.w_star * w.w_star - 2.0 * ab * w.r;
  if (!(w.discriminant >= 0.0)) throw InvalidKinkError("negative discriminant in kink equation", w);
  if (!(ab > 0.0)) throw InvalidKinkError("f'(0) - f'(w*) must be positive", w);
  const double s = std::sqrt(w.discriminant);
  w.w0 = (-w.beta * w.w_star - s) / ab;
  w.w0_other = (-w.beta * w.w_star + s) / ab;
  if (!(w.w0 > 0.0 && w.w0 < w.w_star)) throw InvalidKinkError("kink outside (0, w*)", w);
  w.w_bar = w.w0 / (w.w0 - w.w_star);
  e.value = pwl_speed(w.alpha, w.beta, w.w0, w.w_star, D);
  if (!std::isfinite(e.value)) throw InvalidKinkError("speed radicand not positive", w);
  e.propagating = e.value > 0.0;
  return e;
}

/// Dimensional estimates (mm/min) for the coagulation parameters.
struct CoagSpeedEstimates {
  DimensionlessParams dimless;
  SpeedEstimate c1;      // narrow zone, b = M1 M2 M3
  SpeedEstimate c2;      // piecewise linear, b = M1 M2 M3
  double c1_h11 = 0;     // narrow zone with b carrying 1/h11
  double c2_h11 = 0;
  double printed_c1 = 0; // closed dimensional formulas evaluated verbatim; NaN where undefined
  double printed_c2 = 0;
  double printed_b = 0;
};

namespace detail {

inline double printed_b(const CoagParams& p) {
  return p.k9 * p.k11 * p.k10_bar * p.k8 * p.k89 * p.k2_bar * p.k5 * p.k510 * p.T0 * p.T0 /
         (p.h9 * p.h10 * p.h11 * p.h8 * p.h89 * p.h5 * p.h510);
}

inline double printed_c1(const CoagParams& p, double b) {
  const double T0 = p.T0;
  const double a = b * T0 * T0 - 0.8 * b * T0 * T0 * T0;
  const double rad = 2.0 * a;
  if (!(rad > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(p.D) * (a - 2.0 * p.h2) / std::sqrt(rad);
}

inline double printed_c2(const CoagParams& p, double b) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double T0 = p.T0, h2 = p.h2;
  const double T02 = T0 * T0, T03 = T02 * T0, T04 = T03 * T0;
  const double den = 4.0 * b * T02 - 3.0 * b * T0;
  const double q = 3.0 * b * T02 - 4.0 * b * T03 - h2;
  const double disc =
      q * q - 2.0 * b * (4.0 * T0 - 3.0) * T02 * (-1.5 * b * T02 - b * b / 4.0 * T02 + 2.2 * b * T03 + h2);
  if (!(disc >= 0.0) || den == 0.0) return nan;
  const double Ts = (-3.0 * b * T02 + 4.0 * b * T04 + h2) / den + std::sqrt(disc) / den;
  const double Tb = Ts / (Ts - T0);
  const double inner = -h2 * Tb - 3.0 * b * T02 + 4.0 * b * T03 + h2;
  const double rad = (T0 - 1.0) * Tb * inner;
  if (!(rad > 0.0)) return nan;
  return std::sqrt(p.D) * (-3.0 * b * T02 - h2 * Tb + 4.0 * b * T03 - h2) / std::sqrt(rad);
}

}  // namespace detail

/// Nondimensionalize, evaluate both estimators at n = 3, sigma = 1 and
/// rescale the speed by h2.
inline CoagSpeedEstimates coag_speed_estimates(const CoagParams& p) {
  CoagSpeedEstimates out;
  out.dimless = nondimensionalize(p);
  const auto& d = out.dimless;
  out.c1 = narrow_zone_speed(3, d.b, 1.0, d.D_tilde);
  out.c2 = piecewise_linear_speed(3, d.b, 1.0, d.D_tilde);
  out.c1.value = redimensionalize_speed(out.c1.value, p);
  out.c2.value = redimensionalize_speed(out.c2.value, p);
  const double b_h11 = d.b / p.h11;
  out.c1_h11 = redimensionalize_speed(narrow_zone_speed(3, b_h11, 1.0, d.D_tilde).value, p);
  out.c2_h11 = redimensionalize_speed(piecewise_linear_speed(3, b_h11, 1.0, d.D_tilde).value, p);
  out.printed_b = detail::printed_b(p);
  out.printed_c1 = detail::printed_c1(p, out.printed_b);
  out.printed_c2 = detail::printed_c2(p, out.printed_b);
  return out;
}

}  // namespace coagwave
