#include "rfadapt/deadzone.hpp"
#include "rfadapt/features.hpp"
#include "rfadapt/lyapunov.hpp"
#include "rfadapt/mirror.hpp"
#include "rfadapt/network.hpp"
#include "rfadapt/tape.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace rfadapt;

namespace {

Vec random_vec(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

NNParams random_params(std::mt19937_64& rng, int n, int width, int d) {
  NNParams p = NNParams::zeros(n, width, d);
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index i = 0; i < p.W.size(); ++i) p.W.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < p.bh.size(); ++i) p.bh(i) = g(rng);
  for (Eigen::Index i = 0; i < p.V.size(); ++i) p.V.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < p.bo.size(); ++i) p.bo(i) = g(rng);
  return p;
}

}  // namespace

// ---- deadzones

TEST(Deadzone, HingeExamples) {
  const auto dz = DeadzoneSpec::quadratic_hinge(1.0, 0.5);
  EXPECT_EQ(deadzone_value(dz, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(deadzone_value(dz, 2.0), 0.5);
  EXPECT_DOUBLE_EQ(deadzone_slope(dz, 1.5), 0.5);
  EXPECT_EQ(deadzone_slope(dz, 2.0), 1.0);
  EXPECT_EQ(deadzone_slope(dz, 50.0), 1.0);
}

TEST(Deadzone, ShiftedSquareExample) {
  const auto dz = DeadzoneSpec::shifted_square(1.0);
  EXPECT_DOUBLE_EQ(deadzone_value(dz, 4.0), 1.0);
  EXPECT_DOUBLE_EQ(deadzone_slope(dz, 4.0), 0.5);
}

TEST(Deadzone, ZeroInsideThreshold) {
  for (const auto& dz : {DeadzoneSpec::quadratic_hinge(0.3, 0.2), DeadzoneSpec::shifted_square(0.3)}) {
    for (double q : {0.0, 0.1, 0.2999, 0.3}) {
      EXPECT_EQ(deadzone_value(dz, q), 0.0);
      EXPECT_EQ(deadzone_slope(dz, q), 0.0);
    }
  }
}

TEST(Deadzone, BranchAgreementAtBreakpoints) {
  for (double delta : {0.05, 0.2, 1.0, 3.0}) {
    for (double gamma : {0.01, 0.5, 2.0}) {
      const auto dz = DeadzoneSpec::quadratic_hinge(delta, gamma);
      const double b = delta + 2.0 * gamma;
      // Middle-branch formulas evaluated at the upper breakpoint against the outer branch.
      EXPECT_NEAR((b - delta) * (b - delta) / (4.0 * gamma), b - (delta + gamma), 1e-12);
      EXPECT_NEAR((b - delta) / (2.0 * gamma), 1.0, 1e-12);
      EXPECT_NEAR(deadzone_value(dz, std::nextafter(b, 0.0)), deadzone_value(dz, b), 1e-12);
      EXPECT_NEAR(deadzone_slope(dz, std::nextafter(b, 0.0)), deadzone_slope(dz, b), 1e-12);
      EXPECT_NEAR(deadzone_value(dz, std::nextafter(delta, 10.0)), 0.0, 1e-12);
      EXPECT_NEAR(deadzone_slope(dz, std::nextafter(delta, 10.0)), 0.0, 1e-12);
    }
  }
  const auto sq = DeadzoneSpec::shifted_square(0.7);
  EXPECT_NEAR(deadzone_value(sq, std::nextafter(0.7, 1.0)), 0.0, 1e-12);
  EXPECT_NEAR(deadzone_slope(sq, std::nextafter(0.7, 1.0)), 0.0, 1e-12);
}

TEST(Deadzone, SlopeIsDerivativeOfValue) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  const double h = 1e-6;
  for (const auto& dz : {DeadzoneSpec::quadratic_hinge(1.0, 0.5), DeadzoneSpec::shifted_square(1.0)}) {
    for (int i = 0; i < 200; ++i) {
      const double q = u(rng) + 2 * h;
      const double fd = (deadzone_value(dz, q + h) - deadzone_value(dz, q - h)) / (2 * h);
      EXPECT_NEAR(fd, deadzone_slope(dz, q), 1e-5);
    }
  }
}

TEST(Deadzone, HingeAdmissibility) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  const auto dz = DeadzoneSpec::quadratic_hinge(1.0, 0.4);
  EXPECT_DOUBLE_EQ(dz.slope_lipschitz(), 1.0 / 0.8);
  for (int i = 0; i < 10000; ++i) {
    const double a = u(rng), b = u(rng);
    const double sa = deadzone_slope(dz, a), sb = deadzone_slope(dz, b);
    EXPECT_GE(sa, 0.0);
    EXPECT_LE(sa, 1.0);
    EXPECT_LE(std::abs(sa - sb), std::abs(a - b) / (2.0 * 0.4) + 1e-15);
    if (a <= b) EXPECT_LE(sa, sb);
  }
}

TEST(Deadzone, NoneIsIdentityAndErrors) {
  const auto dz = DeadzoneSpec::none();
  EXPECT_EQ(deadzone_value(dz, 2.5), 2.5);
  EXPECT_EQ(deadzone_slope(dz, 2.5), 1.0);
  EXPECT_THROW((void)deadzone_value(dz, -1.0), ArgumentError);
  EXPECT_THROW((void)deadzone_slope(DeadzoneSpec::quadratic_hinge(1.0, 1.0), -1e-9), ArgumentError);
  EXPECT_THROW((void)DeadzoneSpec::quadratic_hinge(0.0, 1.0), ConfigError);
  EXPECT_THROW((void)DeadzoneSpec::quadratic_hinge(1.0, 0.0), ConfigError);
  EXPECT_THROW((void)DeadzoneSpec::shifted_square(-1.0), ConfigError);
  EXPECT_EQ(parse_deadzone_variant("quadratic-hinge"), DeadzoneVariant::quadratic_hinge);
  EXPECT_THROW((void)parse_deadzone_variant("hinge"), ConfigError);
}

// ---- mirror maps

TEST(Mirror, Examples) {
  std::mt19937_64 rng(3);
  const Vec v = random_vec(rng, 5);
  EXPECT_EQ(mirror_primal(MirrorMap::euclidean(), v), v);
  EXPECT_EQ(mirror_primal(MirrorMap::hypentropy(1.0), Vec::Zero(3)), Vec::Zero(3));
  const Vec dual = Vec::Constant(4, std::asinh(1.5));
  EXPECT_LE((mirror_primal(MirrorMap::hypentropy(2.0), dual) - Vec::Constant(4, 3.0)).norm(), 1e-14);
}

TEST(Mirror, RoundTrip) {
  std::mt19937_64 rng(4);
  for (const auto& map : {MirrorMap::euclidean(), MirrorMap::hypentropy(0.3), MirrorMap::hypentropy(5.0)}) {
    for (int i = 0; i < 100; ++i) {
      const Vec v = random_vec(rng, 6, 10.0);
      EXPECT_LE((mirror_primal(map, mirror_dual(map, v)) - v).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, v.norm()));
    }
  }
}

TEST(Mirror, SaturationAndInvalid) {
  EXPECT_THROW((void)mirror_primal(MirrorMap::hypentropy(1.0), Vec::Constant(2, 800.0)), SaturationError);
  Vec bad = Vec::Zero(2);
  bad(0) = std::nan("");
  EXPECT_THROW((void)mirror_primal(MirrorMap::euclidean(), bad), ArgumentError);
  EXPECT_THROW((void)MirrorMap::hypentropy(0.0), ConfigError);
}

TEST(Mirror, InitialDualsAreMirrorImages) {
  Vec a(2);
  a << 0.5, -2.0;
  const auto s = AdaptState::initial(a, a, MirrorMap::euclidean(), MirrorMap::hypentropy(2.0));
  EXPECT_EQ(s.dual_p, a);
  EXPECT_LE((s.dual_m - (a / 2.0).array().asinh().matrix()).norm(), 1e-15);
  EXPECT_LE((s.primal_m() - a).norm(), 1e-14);
}

// ---- parametric update

TEST(ParametricUpdate, DeadzoneActiveGivesZero) {
  const auto s = AdaptState::initial(Vec::Zero(2), Vec::Zero(3));
  const auto [dp, dm] = parametric_update_duals(s, Mat::Ones(2, 2), Mat::Ones(2, 3), Mat::Identity(2, 2), Vec::Ones(2), 0.0);
  EXPECT_EQ(dp, Vec::Zero(2));
  EXPECT_EQ(dm, Vec::Zero(3));
}

TEST(ParametricUpdate, IdentityComposition) {
  const auto s = AdaptState::initial(Vec::Zero(3), Vec::Zero(3));
  Vec v(3);
  v << 1.0, -2.0, 0.5;
  const auto [dp, dm] = parametric_update_duals(s, Mat::Identity(3, 3), Mat::Identity(3, 3), Mat::Identity(3, 3), v, 1.0);
  EXPECT_EQ(dm, -v);
  EXPECT_EQ(dp, -v);
}

TEST(ParametricUpdate, TwoDimensionalHandComputation) {
  // A = -I (2x2) gives P = I/2; e = (1, 2) so grad Q = (0.5, 1).
  Mat A = -Mat::Identity(2, 2);
  const LyapunovCertificate cert = LyapunovCertificate::for_matrix(A);
  Vec e(2);
  e << 1.0, 2.0;
  Mat Psi(2, 3);
  Psi << 1.0, 0.0, 2.0,
         0.0, 3.0, -1.0;
  const auto s = AdaptState::initial(Vec::Zero(0), Vec::Zero(3));
  const auto [dp, dm] = parametric_update_duals(s, Mat::Zero(2, 0), Psi, Mat::Identity(2, 2), cert.gradient(e), 0.5);
  Vec expected(3);
  expected << -0.25, -1.5, 0.0;  // -0.5 * Psi^T (0.5, 1)
  EXPECT_LE((dm - expected).norm(), 1e-15);
  EXPECT_EQ(dp.size(), 0);
}

TEST(ParametricUpdate, DimensionAndSlopeErrors) {
  const auto s = AdaptState::initial(Vec::Zero(2), Vec::Zero(3));
  EXPECT_THROW((void)parametric_update_duals(s, Mat::Ones(2, 2), Mat::Ones(2, 4), Mat::Identity(2, 2), Vec::Ones(2), 1.0), ArgumentError);
  EXPECT_THROW((void)parametric_update_duals(s, Mat::Ones(2, 2), Mat::Ones(2, 3), Mat::Identity(2, 2), Vec::Ones(3), 1.0), ArgumentError);
  EXPECT_THROW((void)parametric_update_duals(s, Mat::Ones(2, 2), Mat::Ones(2, 3), Mat::Identity(2, 2), Vec::Ones(2), -1.0), ArgumentError);
}

TEST(ParametricUpdate, ZeroFeatureRowsKeepInitialWeights) {
  // Features whose rows vanish along the trajectory never move their weights.
  auto fn = [](const Vec& x) {
    Mat phi = Mat::Zero(2, 4);
    phi(0, 0) = x(0);
    phi(1, 1) = std::sin(x(1));
    return phi;
  };
  const FixedFeatureMap map(fn, 2, 2, 4);
  Vec a0(4);
  a0 << 0.1, -0.2, 0.3, -0.4;
  AdaptState s = AdaptState::initial(Vec::Zero(0), a0);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const Vec x = random_vec(rng, 2);
    const auto [dp, dm] = parametric_update_duals(s, Mat::Zero(2, 0), map.matrix(x), Mat::Identity(2, 2), random_vec(rng, 2), 0.7);
    s.dual_m += 1e-2 * dm;
  }
  EXPECT_EQ(s.primal_m()(2), 0.3);
  EXPECT_EQ(s.primal_m()(3), -0.4);
  EXPECT_NE(s.primal_m()(0), 0.1);
}

// ---- trajectory tape

TEST(Tape, AppendCoefficients) {
  TrajectoryTape tape(0.01, 2, 2);
  Vec e(2);
  e << 0.3, -0.4;
  tape_append(tape, 0.0, Vec::Zero(2), 1.0, Mat::Identity(2, 2), Vec::Zero(2));
  EXPECT_EQ(tape.coefficient(0), Vec::Zero(2));
  tape_append(tape, 0.01, Vec::Ones(2), 1.0, Mat::Identity(2, 2), e);
  EXPECT_EQ(Vec(tape.coefficient(1)), -e);
  for (int i = 2; i < 10; ++i) tape_append(tape, 0.01 * i, Vec::Ones(2), 2.0, Mat::Identity(2, 2), e);
  EXPECT_EQ(tape.size(), 10u);
  EXPECT_EQ(Vec(tape.coefficient(9)), -2.0 * e);
  EXPECT_EQ(Vec(tape.state(1)), Vec::Ones(2));
}

TEST(Tape, NonMonotoneTimeRejected) {
  TrajectoryTape tape(0.01, 1, 1);
  tape.append_coefficient(0.0, Vec::Zero(1), Vec::Zero(1));
  EXPECT_THROW(tape.append_coefficient(0.0, Vec::Zero(1), Vec::Zero(1)), SequencingError);
  EXPECT_THROW(tape.append_coefficient(0.03, Vec::Zero(1), Vec::Zero(1)), SequencingError);
  EXPECT_NO_THROW(tape.append_coefficient(0.01, Vec::Zero(1), Vec::Zero(1)));
}

TEST(Tape, NonparametricInputExamples) {
  const auto spec = OperatorKernelSpec::decomposable(Mat::Identity(3, 3), 0.5, 3);
  TrajectoryTape tape(0.001, 3, 3);
  const Vec x0 = Vec::LinSpaced(3, 0.0, 1.0);
  EXPECT_EQ(nonparametric_input(tape, spec, x0), Vec::Zero(3));
  Vec c(3);
  c << 1.0, -2.0, 3.0;
  tape.append_coefficient(0.0, x0, c);
  EXPECT_LE((nonparametric_input(tape, spec, x0) - 0.001 * c).norm(), 1e-18);
}

TEST(Tape, FastPathsMatchGenericSum) {
  std::mt19937_64 rng(6);
  const int n = 3;
  Mat B(3, 3);
  B << 1.0, 0.2, 0.0, 0.0, 0.5, 0.1, 0.3, 0.0, 1.0;
  for (const auto& spec : {OperatorKernelSpec::decomposable(B, 0.7, n), OperatorKernelSpec::curl_free(n, 0.7),
                           elementwise_basis_map(n).kernel()}) {
    TrajectoryTape tape(0.01, n, n);
    for (int i = 0; i < 30; ++i) tape.append_coefficient(0.01 * i, random_vec(rng, n), random_vec(rng, n));
    const Vec x = random_vec(rng, n);
    Vec expected = Vec::Zero(n);
    for (std::size_t i = 0; i < tape.size(); ++i) expected += eval_operator_kernel(spec, x, Vec(tape.state(i))) * tape.coefficient(i);
    expected *= 0.01;
    EXPECT_LE((nonparametric_input(tape, spec, x) - expected).norm(), 1e-12);
  }
}

TEST(Tape, KernelTrickEquivalence) {
  // Parametric law with fixed features against the tape law with K = Phi Phi^T,
  // both driven along the same Euler-discretized closed loop x' = -x + u - h(x).
  const int n = 3;
  const double dt = 0.001, gamma = 2.0;
  const auto map = elementwise_basis_map(n);
  auto h = [](const Vec& x) { return Vec(x.unaryExpr([](double v) { return std::sin(v) * std::erf(v); })); };
  const Vec xd = Vec::Constant(n, 1.5);

  Vec alpha = Vec::Zero(map.columns());
  Vec xp = xd + Vec::Constant(n, 0.5);
  TrajectoryTape tape(dt, n, n);
  Vec xt = xp;
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double t = k * dt;
    const Vec up = map.apply(xp, alpha);
    const Vec ut = nonparametric_input(tape, map.kernel(), xt);
    worst = std::max(worst, (up - ut).cwiseAbs().maxCoeff());
    const Vec cp = -gamma * (xp - xd);
    const Vec ct = -gamma * (xt - xd);
    alpha += dt * map.apply_transpose(xp, cp);
    tape.append_coefficient(t, xt, ct);
    xp += dt * (-(xp - xd) + up - h(xp));
    xt += dt * (-(xt - xd) + ut - h(xt));
    worst = std::max(worst, (xp - xt).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-10);
}

// ---- network

TEST(Network, ZeroParamsGiveZero) {
  const NNParams p = NNParams::zeros(3, 4, 2);
  EXPECT_EQ(nn_forward(p, Vec::Ones(3)), Vec::Zero(2));
  EXPECT_EQ(swish(0.0), 0.0);
}

TEST(Network, ZeroPreactivationGivesOutputBias) {
  std::mt19937_64 rng(7);
  NNParams p = random_params(rng, 3, 4, 2);
  p.W.setZero();
  p.bh.setZero();
  EXPECT_EQ(nn_forward(p, random_vec(rng, 3)), p.bo);
}

TEST(Network, MatchesStraightforwardImplementation) {
  std::mt19937_64 rng(8);
  const NNParams p = random_params(rng, 3, 4, 2);
  const Vec x = random_vec(rng, 3);
  Vec out(2);
  for (int i = 0; i < 2; ++i) {
    double acc = p.bo(i);
    for (int k = 0; k < 4; ++k) {
      double z = p.bh(k);
      for (int j = 0; j < 3; ++j) z += p.W(k, j) * x(j);
      acc += p.V(i, k) * z / (1.0 + std::exp(-z));
    }
    out(i) = acc;
  }
  EXPECT_LE((nn_forward(p, x) - out).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Network, FlattenRoundTrip) {
  std::mt19937_64 rng(9);
  const NNParams p = random_params(rng, 5, 7, 3);
  const NNParams q = NNParams::unflatten(p.flatten(), 5, 7, 3);
  EXPECT_EQ(p.W, q.W);
  EXPECT_EQ(p.bh, q.bh);
  EXPECT_EQ(p.V, q.V);
  EXPECT_EQ(p.bo, q.bo);
  EXPECT_THROW((void)NNParams::unflatten(Vec::Zero(3), 5, 7, 3), ArgumentError);
}

TEST(Network, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(10);
  for (int width : {4, 32}) {
    const NNParams p = random_params(rng, 5, width, 5);
    const Vec x = random_vec(rng, 5);
    const Mat J = nn_jacobian(p, x);
    const Vec flat = p.flatten();
    const double h = 1e-6;
    for (Eigen::Index c = 0; c < flat.size(); ++c) {
      Vec fp = flat, fm = flat;
      fp(c) += h;
      fm(c) -= h;
      const Vec col = (nn_forward(NNParams::unflatten(fp, 5, width, 5), x) - nn_forward(NNParams::unflatten(fm, 5, width, 5), x)) / (2 * h);
      EXPECT_LE((J.col(c) - col).norm(), 1e-5 * std::max(1.0, col.norm())) << "width " << width << " column " << c;
    }
  }
}

TEST(Network, UpdateRhsIsJacobianTranspose) {
  std::mt19937_64 rng(11);
  const NNParams p = random_params(rng, 4, 6, 3);
  const Vec x = random_vec(rng, 4);
  const Mat g_e = Mat::Random(5, 3);
  const Vec gradQ = random_vec(rng, 5);
  const Vec expected = -10.0 * nn_jacobian(p, x).transpose() * g_e.transpose() * gradQ;
  EXPECT_LE((nn_update_rhs(p, x, g_e, gradQ, 10.0) - expected).norm(), 1e-12 * std::max(1.0, expected.norm()));
  EXPECT_EQ(nn_update_rhs(p, x, g_e, Vec::Zero(5), 10.0), Vec::Zero(p.parameter_count()));
  EXPECT_THROW((void)nn_update_rhs(p, x, g_e, Vec::Zero(4), 10.0), ArgumentError);
  EXPECT_THROW((void)nn_update_rhs(p, x, g_e, gradQ, 0.0), ArgumentError);
}

TEST(Network, InitHasZeroOutputLayer) {
  const NNParams p = nn_init(5, 32, 5, 3);
  EXPECT_EQ(p.V, Mat::Zero(5, 32));
  EXPECT_EQ(p.bo, Vec::Zero(5));
  EXPECT_GT(p.W.norm(), 0.0);
  EXPECT_EQ(nn_forward(p, Vec::Ones(5)), Vec::Zero(5));
}
