#pragma once

// Parameter sweeps over simulated speeds and the closed-form estimators.

#include "coagwave/models.hpp"
#include "coagwave/parallel.hpp"
#include "coagwave/params.hpp"
#include "coagwave/speed_formulas.hpp"
#include "coagwave/wavefront.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace coagwave {

/// Swept quantity: any CoagParams key, `activity` (factor IX activity in
/// percent, scaling k9), or the scalar-model `n`, `b`, `sigma`.
/// Models: reduced6, two_eq, one_eq, full14, scalar, and the estimators
/// c1, c2 (narrow zone, piecewise linear) and c1_h11, c2_h11.
struct SweepSpec {
  std::string param;
  std::vector<double> values;
  std::vector<std::string> models;
  int n = 3;
  double b = 10.0;
  double sigma = 0.01;

  static std::vector<double> range(double lo, double hi, std::size_t count, bool log) {
    if (count < 2) throw std::invalid_argument("sweep needs count >= 2");
    if (!(hi > lo)) throw std::invalid_argument("sweep needs hi > lo");
    if (log && !(lo > 0.0)) throw std::invalid_argument("log sweep needs lo > 0");
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double f = static_cast<double>(i) / static_cast<double>(count - 1);
      v[i] = log ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo))) : lo + f * (hi - lo);
    }
    v.back() = hi;
    return v;
  }

  [[nodiscard]] bool scalar_param() const { return param == "n" || param == "b" || param == "sigma"; }

  void validate() const {
    if (values.size() < 2) throw std::invalid_argument("sweep needs at least two values");
    for (std::size_t i = 1; i < values.size(); ++i)
      if (!(values[i] > values[i - 1])) throw std::invalid_argument("sweep values must be strictly increasing");
    const auto names = param_names();
    if (!scalar_param() && param != "activity" && std::find(names.begin(), names.end(), param) == names.end())
      throw std::invalid_argument("unknown sweep parameter '" + param + "'");
    if (param == "n")
      for (double v : values)
        if (v != std::floor(v) || v < 2) throw std::invalid_argument("n must be an integer >= 2");
    if (models.empty()) throw std::invalid_argument("sweep needs at least one model");
    for (const auto& m : models) {
      static const std::vector<std::string> known = {"reduced6", "two_eq", "one_eq", "full14", "scalar",
                                                     "c1",       "c2",     "c1_h11", "c2_h11"};
      if (std::find(known.begin(), known.end(), m) == known.end())
        throw std::invalid_argument("unknown sweep model '" + m + "'");
      if (scalar_param() && m != "scalar" && m.rfind("c", 0) != 0)
        throw std::invalid_argument("scalar parameter '" + param + "' only applies to the scalar model and estimators");
    }
  }
};

struct SweepRow {
  double value = 0;
  std::string model;
  double speed = 0;
  bool converged = false;
  std::string note;
};

/// Parameters for one sweep point.
inline CoagParams sweep_params(const CoagParams& base, const SweepSpec& spec, double value) {
  CoagParams p = base;
  if (spec.param == "activity") {
    p.k9 = base.k9 * base.fix_activity_scale * value / 100.0;
  } else if (!spec.scalar_param()) {
    set_param(p, spec.param, value);
  }
  return p;
}

inline SweepRow sweep_point(const CoagParams& base, const SweepSpec& spec, double value, const std::string& model,
                            const AutoDomain& domain) {
  SweepRow row{value, model, 0.0, false, ""};
  const CoagParams p = sweep_params(base, spec, value);
  int n = spec.n;
  double b = spec.b, sigma = spec.sigma;
  if (spec.param == "n") n = static_cast<int>(value);
  if (spec.param == "b") b = value;
  if (spec.param == "sigma") sigma = value;
  const bool scalar = spec.scalar_param() || std::find(spec.models.begin(), spec.models.end(), "scalar") !=
                                                  spec.models.end();
  try {
    if (model.rfind("c", 0) == 0) {
      const bool narrow = model.rfind("c1", 0) == 0;
      const bool h11 = model.size() > 2;
      if (scalar) {
        if (h11) throw std::invalid_argument("h11 variant applies to coagulation parameters only");
        const auto e = narrow ? narrow_zone_speed(n, b, sigma, p.D) : piecewise_linear_speed(n, b, sigma, p.D);
        row.speed = e.value;
        row.converged = e.propagating;
      } else {
        const auto e = coag_speed_estimates(p);
        row.speed = narrow ? (h11 ? e.c1_h11 : e.c1.value) : (h11 ? e.c2_h11 : e.c2.value);
        row.converged = row.speed > 0.0;
      }
      if (!row.converged) row.note = "no propagation";
      return row;
    }
    const ModelKind kind = model == "scalar" ? ModelKind::scalar(n, b, sigma) : parse_model(model);
    const auto out = run_auto(kind, p, domain);
    row.speed = out.speed.speed;
    row.converged = out.ignited && out.speed.converged;
    row.note = out.error.empty() ? out.speed.note : out.error;
  } catch (const std::exception& e) {
    row.note = e.what();
  }
  return row;
}

/// One row per (value, model), ordered by value then by the model list.
inline std::vector<SweepRow> run_sweep(const CoagParams& base, const SweepSpec& spec, const AutoDomain& domain = {},
                                       std::size_t jobs = 1) {
  spec.validate();
  const std::size_t nm = spec.models.size();
  return parallel_map(spec.values.size() * nm, jobs, [&](std::size_t k) {
    return sweep_point(base, spec, spec.values[k / nm], spec.models[k % nm], domain);
  });
}

}  // namespace coagwave
