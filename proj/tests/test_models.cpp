#include "coagwave/models.hpp"
#include "coagwave/params.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <random>
#include <sstream>

using namespace coagwave;

namespace {

const ModelKind kAll[] = {ModelKind::full14(), ModelKind::reduced6(), ModelKind::two_eq(), ModelKind::one_eq(),
                          ModelKind::scalar(3, 10.0, 0.01), ModelKind::scalar(6, 10.0, 0.01)};

// central differences, step relative to the box size; `noise` bounds the
// cancellation error, which dominates for large rates with small slopes
Eigen::MatrixXd fd_jacobian(const ModelKind& k, const StateVector& s, const CoagParams& p, Eigen::MatrixXd& noise) {
  const auto hi = admissible_upper(k, p);
  const auto m = static_cast<Eigen::Index>(k.dim());
  Eigen::MatrixXd J(m, m);
  noise.resize(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double h = 1e-6 * hi[j];
    StateVector a = s, b = s;
    a[j] += h;
    b[j] -= h;
    const auto fa = eval_rhs(k, a, p), fb = eval_rhs(k, b, p);
    for (Eigen::Index i = 0; i < m; ++i) {
      J(i, j) = (fa[i] - fb[i]) / (2 * h);
      noise(i, j) = 16 * std::numeric_limits<double>::epsilon() * std::max(std::abs(fa[i]), std::abs(fb[i])) / h;
    }
  }
  return J;
}

}  // namespace

TEST(Models, AnalyticJacobianMatchesFiniteDifferences) {
  const CoagParams p;
  for (const auto& k : kAll) {
    const auto hi = admissible_upper(k, p);
    for (const auto& s0 : sample_admissible(k, p, 40, 7)) {
      // keep away from the lower face so the stencil stays admissible
      StateVector s = s0;
      for (std::size_t i = 0; i < s.size(); ++i) s[i] = 0.01 * hi[i] + 0.98 * s[i];
      const auto J = eval_jacobian(k, s, p);
      Eigen::MatrixXd noise;
      const auto F = fd_jacobian(k, s, p, noise);
      for (Eigen::Index i = 0; i < J.rows(); ++i)
        for (Eigen::Index j = 0; j < J.cols(); ++j) {
          const double scale = std::abs(F(i, j)) + 1e-6 * (F.row(i).cwiseAbs().maxCoeff() + 1e-300);
          EXPECT_NEAR(J(i, j), F(i, j), 1e-5 * scale + noise(i, j)) << k.name() << " entry " << i << "," << j;
        }
    }
  }
}

TEST(Models, OffDiagonalJacobianIsNonNegativeInAdmissibleBox) {
  const CoagParams p;
  for (const auto& k : {ModelKind::reduced6(), ModelKind::two_eq(), ModelKind::one_eq(), ModelKind::scalar(3, 10.0, 0.01)}) {
    const auto samples = sample_admissible(k, p, 500, 11);
    const auto rep = check_monotone(k, p, samples);
    EXPECT_TRUE(rep.pass) << k.name() << " min off-diagonal " << rep.min_offdiag;
    EXPECT_TRUE(rep.out_of_box.empty());
  }
}

TEST(Models, FullSystemIsNotCooperativeInRawVariables) {
  // inactive factors are consumed by the active ones
  const CoagParams p;
  const auto k = ModelKind::full14();
  const auto rep = check_monotone(k, p, sample_admissible(k, p, 50, 11));
  EXPECT_FALSE(rep.pass);
  EXPECT_LT(rep.min_offdiag, 0.0);
}

TEST(Models, ZeroIsAnEquilibriumOfEveryReducedModel) {
  const CoagParams p;
  for (const auto& k : {ModelKind::reduced6(), ModelKind::two_eq(), ModelKind::one_eq(), ModelKind::scalar(4, 3, .1)}) {
    const auto f = eval_rhs(k, StateVector::zeros(k), p);
    for (double v : f.values) EXPECT_EQ(v, 0.0);
  }
}

TEST(Models, ScalarRateByHand) {
  const CoagParams p;
  const auto k = ModelKind::scalar(3, 10.0, 0.01);
  StateVector s = StateVector::zeros(k);
  s[0] = 0.7;
  const double expect = 10.0 * 0.7 * 0.7 * 0.7 * 0.3 - 0.01 * 0.7;
  EXPECT_NEAR(eval_rhs(k, s, p)[0], expect, 1e-15);
}

TEST(Models, NegativeStateIsRejected) {
  const CoagParams p;
  StateVector s = StateVector::zeros(ModelKind::reduced6());
  s[1] = -1.0;
  EXPECT_THROW(eval_rhs(ModelKind::reduced6(), s, p), NegativeConcentrationError);
}

TEST(Models, ComponentNamesAndThrombinIndex) {
  EXPECT_EQ(ModelKind::full14().dim(), 14u);
  EXPECT_EQ(ModelKind::full14().component_names()[ModelKind::full14().thrombin_index()], "T");
  EXPECT_EQ(ModelKind::reduced6().component_names()[0], "T");
  EXPECT_EQ(ModelKind::two_eq().dim(), 2u);
  EXPECT_EQ(parse_model("one_eq").tag, ModelTag::OneEq);
  EXPECT_THROW(parse_model("seven"), std::invalid_argument);
}

TEST(Models, DimensionlessGroupsByHand) {
  const CoagParams p;
  const auto d = nondimensionalize(p);
  EXPECT_NEAR(d.M1, 2.45 * 20 * 0.00033 * 0.000011 / (2.3 * 0.2 * 1.0), 1e-12 * d.M1);
  EXPECT_NEAR(d.M2, 0.00001 * 100 * 500 * 1400 / (0.00033 * 0.31 * 100), 1e-12 * d.M2);
  EXPECT_NEAR(d.M3, p.k2_bar * 0.17 * 100 * 1400 / (2.45 * 0.31 * 100), 1e-12 * d.M3);
  EXPECT_DOUBLE_EQ(d.b, d.M1 * d.M2 * d.M3);
  EXPECT_DOUBLE_EQ(d.D_tilde, 0.0037 / 2.3);
  EXPECT_DOUBLE_EQ(redimensionalize_speed(dimensionless_speed(0.05, p), p), 0.05);
}

TEST(Models, OneEquationReducesToScalarCubic) {
  // In T~ = T/T0, t~ = h2 t the one-equation model tends to b u^3 (1 - u) - u, b = M1 M2 M3 / h11,
  // once the linear activation terms k10, k2 are negligible.
  CoagParams p;
  p.k10 = 1e-13;
  p.k2 = 1e-13;
  const auto d = nondimensionalize(p);
  const auto one = ModelKind::one_eq();
  const auto sc = ModelKind::scalar(3, d.b / p.h11, 1.0);
  for (double u : {0.05, 0.2, 0.5, 0.8, 0.97}) {
    StateVector a = StateVector::zeros(one), b = StateVector::zeros(sc);
    a[0] = u * p.T0;
    b[0] = u;
    EXPECT_NEAR(eval_rhs(one, a, p)[0] / (p.T0 * p.h2), eval_rhs(sc, b, p)[0], 1e-9 * (1 + std::abs(eval_rhs(sc, b, p)[0])))
        << "u = " << u;
  }
}

TEST(Params, DefaultRatesMatchFullModelPlaceholders) { EXPECT_TRUE(rate_consistency(CoagParams{}).empty()); }

TEST(Params, ParseRoundTrip) {
  Config c;
  c.params.k9 = 7.5;
  c.domain.nodes = 401;
  std::istringstream in(to_ini(c));
  const auto back = parse_config(in);
  EXPECT_EQ(to_ini(back), to_ini(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(config_hash(back).size(), 16u);
}

TEST(Params, MissingK2BarNamesCalibration) {
  std::istringstream in("[rates]\nk9 = 20\n");
  try {
    parse_config(in);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("coagwave calibrate"), std::string::npos);
  }
}

TEST(Params, RejectsBadInput) {
  auto parse = [](const char* s) {
    std::istringstream in(s);
    return parse_config(in);
  };
  EXPECT_THROW(parse("[rates]\nk2_bar = 13\nk9 = -1\n"), ConfigError);
  EXPECT_THROW(parse("[rates]\nk2_bar = 13\nk9 = fast\n"), ConfigError);
  EXPECT_THROW(parse("[rates]\nk2_bar = 13\nk99 = 1\n"), ConfigError);
  EXPECT_THROW(parse("[kinetics]\nk2_bar = 13\n"), ConfigError);
  EXPECT_THROW(parse("[rates]\nk2_bar = 13\n[domain]\nnodes = 2\n"), ConfigError);
  EXPECT_THROW(parse("[rates\nk2_bar = 13\n"), ConfigError);
  EXPECT_NO_THROW(parse("[rates]\nk2_bar = 13\n"));
}

TEST(Params, Overrides) {
  Config c;
  apply_override(c, "D=0.01");
  apply_override(c, "N=501");
  EXPECT_DOUBLE_EQ(c.params.D, 0.01);
  EXPECT_EQ(c.domain.nodes, 501);
  EXPECT_THROW(apply_override(c, "D"), ConfigError);
  EXPECT_THROW(apply_override(c, "bogus=1"), ConfigError);
}
