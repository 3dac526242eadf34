#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "limgroup/curves.hpp"
#include "limgroup/regularity.hpp"
#include "test_support.hpp"

namespace limgroup {
namespace {

using testing::random_matrix;

const GroupDescriptor kGL3 = GroupDescriptor::gl(3);

// Dense second-order differences of a closed-form curve on a 2^14 grid.
Matrix dense_fd_log_derivative(const ProductCurve& c, double t) {
  const double h = 1.0 / 16384.0;
  Matrix d;
  if (t - h < 0.0) {
    d = (-3.0 * c.value(t) + 4.0 * c.value(t + h) - c.value(t + 2 * h)) / (2 * h);
  } else if (t + h > 1.0) {
    d = (3.0 * c.value(t) - 4.0 * c.value(t - h) + c.value(t - 2 * h)) / (2 * h);
  } else {
    d = (c.value(t + h) - c.value(t - h)) / (2 * h);
  }
  return c.value(t).inverse() * d;
}

TEST(LogDerivative, OneParameterSubgroupIsConstant) {
  std::mt19937_64 rng(41);
  const Matrix a = random_matrix(rng, 3, 3, 0.5);
  const GroupCurve closed = GroupCurve::from_function(
      kGL3, [a](double t) { return expm(t * a); }, 64, [a](double t) { return Matrix(a * expm(t * a)); });
  const AlgebraCurve u = log_derivative(closed);
  for (const auto& s : u.samples()) EXPECT_LE((s.payload() - a).norm(), 1e-12);

  // Sample-only curve: fourth-order grid differences.
  std::vector<GroupElement> samples;
  for (int k = 0; k <= 256; ++k) samples.emplace_back(kGL3, expm((k / 256.0) * a));
  const AlgebraCurve v = log_derivative(GroupCurve(kGL3, samples));
  for (const auto& s : v.samples()) EXPECT_LE((s.payload() - a).norm(), 1e-8);
}

TEST(LogDerivative, ConstantIdentityIsZero) {
  const GroupCurve e = GroupCurve::from_function(kGL3, [](double) { return Matrix::Identity(3, 3); }, 16);
  const AlgebraCurve u = log_derivative(e);
  for (const auto& s : u.samples()) EXPECT_EQ(s.payload(), Matrix::Zero(3, 3));
}

TEST(LogDerivative, ProductOfExponentialsAgainstDenseDifferences) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix a = testing::clamp_norm(random_matrix(rng, 3, 3, 0.3), 0.3);
    const Matrix b = testing::clamp_norm(random_matrix(rng, 3, 3, 0.3), 0.3);
    const ProductCurve c(kGL3, {{a, 0.0, 1.0, 1.0}, {b, 0.0, 1.0, 1.0}});
    // Evaluator only: the derivative comes from finite differences.
    const GroupCurve gamma = GroupCurve::from_function(kGL3, [c](double t) { return c.value(t); }, 256);
    const AlgebraCurve u = log_derivative(gamma);
    for (int k = 0; k <= 256; k += 8) {
      const double t = k / 256.0;
      EXPECT_LE((u.samples()[static_cast<std::size_t>(k)].payload() - dense_fd_log_derivative(c, t)).norm(), 1e-7);
      EXPECT_LE((u.samples()[static_cast<std::size_t>(k)].payload() - c.log_derivative(t)).norm(), 1e-10);
    }
  }
}

TEST(LogDerivative, TooFewSamples) {
  std::vector<GroupElement> samples(3, identity(kGL3));
  EXPECT_THROW(log_derivative(GroupCurve(kGL3, samples)), StructuralError);
}

TEST(LogDerivative, SingularSampleIsDegenerate) {
  // Grid samples are regular; the evaluator collapses between them.
  const GroupCurve c = GroupCurve::from_function(
      GroupDescriptor::gl(1), [](double t) { return Matrix::Constant(1, 1, t > 0.6 && t < 0.7 ? 1e-13 : 1.0); }, 4,
      [](double) { return Matrix::Constant(1, 1, 0.0); });
  EXPECT_NO_THROW(log_derivative_at(c, 0.5));
  EXPECT_THROW(log_derivative_at(c, 0.65), DegeneracyError);
}

TEST(Evolve, ZeroControl) {
  const AlgebraCurve u = AlgebraCurve::from_function(kGL3, [](double) { return Matrix::Zero(3, 3); }, 8);
  const GroupCurve eta = evolve(u, 10);
  ASSERT_EQ(eta.grid(), 10);
  for (const auto& s : eta.samples()) EXPECT_EQ(s.payload(), Matrix::Identity(3, 3));
  EXPECT_EQ(evol_point(u).payload(), Matrix::Identity(3, 3));
}

TEST(Evolve, AbelianReducesToIntegral) {
  const GroupDescriptor r2 = GroupDescriptor::abelian(2);
  const AlgebraCurve u = AlgebraCurve::from_function(
      r2, [](double t) { return Matrix(Eigen::Vector2d(2.0 * t, 1.0)); }, 16);
  const GroupElement end = evol_point(u, 10);
  EXPECT_NEAR(end.payload()(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(end.payload()(1, 0), 1.0, 1e-14);
}

TEST(Evolve, PiecewiseConstantControl) {
  std::mt19937_64 rng(47);
  const Matrix a = random_matrix(rng, 3, 3, 0.5);
  const Matrix b = random_matrix(rng, 3, 3, 0.5);
  const AlgebraCurve u = AlgebraCurve::from_function(kGL3, [a, b](double t) { return t < 0.5 ? a : b; }, 16);
  const Matrix expected = exp_map(AlgebraElement(kGL3, a / 2)).payload() * exp_map(AlgebraElement(kGL3, b / 2)).payload();
  EXPECT_LE((evol_point(u, 100).payload() - expected).norm(), 1e-12);
}

TEST(EvolPoint, ConstantControlIsExponential) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = random_matrix(rng, 3, 3, 0.8);
    const AlgebraCurve u = AlgebraCurve::from_function(kGL3, [a](double) { return a; }, 4);
    EXPECT_LE((evol_point(u).payload() - expm(a)).norm(), 1e-9);
  }
}

TEST(EvolPoint, StepHalvingSelfConsistency) {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 5; ++trial) {
    const ProductCurve c = ProductCurve::random(kGL3, rng, 0.5, 4.0);
    const AlgebraCurve u = AlgebraCurve::from_function(kGL3, [c](double t) { return c.log_derivative(t); });
    const Matrix coarse = evol_point(u, 500).payload();
    const Matrix fine = evolve(u, 1000).back().payload();
    EXPECT_LE((coarse - fine).norm(), 1e-8);
  }
}

TEST(Evolve, NonFiniteControlReportsStep) {
  const AlgebraCurve u = AlgebraCurve::from_function(
      kGL3, [](double t) { return t > 0.5 ? Matrix::Constant(3, 3, std::numeric_limits<double>::quiet_NaN()) : Matrix::Zero(3, 3); },
      2);
  try {
    (void)evol_point(u, 10);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.step(), 5);
  }
}

TEST(RoundTrip, Identity) {
  const GroupCurve e = GroupCurve::from_function(kGL3, [](double) { return Matrix::Identity(3, 3); }, 16);
  EXPECT_LE(round_trip_defect(e), 1e-12);
}

TEST(RoundTrip, OneParameterSubgroup) {
  std::mt19937_64 rng(61);
  const Matrix a = random_matrix(rng, 3, 3, 0.5);
  const GroupCurve c = GroupCurve::from_function(kGL3, [a](double t) { return expm(t * a); }, 256);
  EXPECT_LE(round_trip_defect(c, 1000), 1e-8);
}

TEST(RoundTrip, RandomSmoothCurves) {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 10; ++trial) {
    const GroupCurve c = ProductCurve::random(kGL3, rng, 0.5, 4.0).curve();
    EXPECT_LE(round_trip_defect(c, 1000), 1e-6);
  }
}

TEST(RoundTrip, RequiresIdentityStart) {
  const GroupCurve c = GroupCurve::from_function(kGL3, [](double) { return Matrix(2.0 * Matrix::Identity(3, 3)); }, 8);
  EXPECT_THROW(round_trip_defect(c), DomainError);
}

// Observed order from a least-squares fit of log(defect) against log(steps).
double fitted_order(const ProductCurve& c) {
  const GroupCurve gamma = c.curve();
  const AlgebraCurve u = AlgebraCurve::from_function(kGL3, [c](double t) { return c.log_derivative(t); });
  std::vector<double> xs, ys;
  for (int steps : {125, 250, 500, 1000}) {
    xs.push_back(std::log(static_cast<double>(steps)));
    ys.push_back(std::log(distance(evol_point(u, steps), GroupElement(kGL3, gamma.value(1.0)))));
  }
  const double mx = (xs[0] + xs[1] + xs[2] + xs[3]) / 4.0, my = (ys[0] + ys[1] + ys[2] + ys[3]) / 4.0;
  double sxy = 0.0, sxx = 0.0;
  for (int k = 0; k < 4; ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  return -sxy / sxx;
}

TEST(Properties, FourthOrderConvergence) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 3; ++trial) {
    const ProductCurve c = ProductCurve::random(kGL3, rng, 1.0, 12.0);
    EXPECT_GE(fitted_order(c), 3.7);
  }
}

TEST(Properties, Concatenation) {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 5; ++trial) {
    const ProductCurve c1 = ProductCurve::random(kGL3, rng, 0.5, 3.0);
    const ProductCurve c2 = ProductCurve::random(kGL3, rng, 0.5, 3.0);
    // u runs u₁ then u₂ at double speed; each half integrates to evol(u_k)
    // since ∫ 2u(2s) over [0,½] reparametrizes to ∫ u over [0,1].
    const AlgebraCurve u = AlgebraCurve::from_function(kGL3, [c1, c2](double t) {
      return t < 0.5 ? Matrix(2.0 * c1.log_derivative(2.0 * t)) : Matrix(2.0 * c2.log_derivative(2.0 * t - 1.0));
    });
    const AlgebraCurve u1 = AlgebraCurve::from_function(kGL3, [c1](double t) { return c1.log_derivative(t); });
    const AlgebraCurve u2 = AlgebraCurve::from_function(kGL3, [c2](double t) { return c2.log_derivative(t); });
    const Matrix lhs = evol_point(u, 2000).payload();
    const Matrix rhs = evol_point(u1, 1000).payload() * evol_point(u2, 1000).payload();
    EXPECT_LE((lhs - rhs).norm(), 1e-7);
  }
}

TEST(Properties, AbelianMatchesSimpson) {
  const GroupDescriptor r3 = GroupDescriptor::abelian(3);
  const auto f = [](double t) {
    return Matrix(Eigen::Vector3d(std::sin(3.0 * t), std::exp(t), 1.0 / (1.0 + t * t)));
  };
  const AlgebraCurve u = AlgebraCurve::from_function(r3, f);
  // Composite Simpson on 2000 panels.
  const int panels = 2000;
  Matrix simpson = f(0.0) + f(1.0);
  for (int k = 1; k < panels; ++k) simpson += (k % 2 == 1 ? 4.0 : 2.0) * f(static_cast<double>(k) / panels);
  simpson /= 3.0 * panels;
  EXPECT_LE((evol_point(u).payload() - simpson).norm(), 1e-10);
}

TEST(Properties, SampledControlUsesInterpolation) {
  std::mt19937_64 rng(79);
  const ProductCurve c = ProductCurve::random(kGL3, rng, 0.5, 3.0);
  std::vector<AlgebraElement> samples;
  for (int k = 0; k <= 256; ++k) samples.emplace_back(kGL3, c.log_derivative(k / 256.0));
  const AlgebraCurve u(kGL3, samples);
  EXPECT_LE(distance(evol_point(u), GroupElement(kGL3, c.value(1.0))), 1e-6);
}

TEST(AlgebraCurve, EvaluatorMustMatchSamples) {
  std::vector<AlgebraElement> samples(3, zero_algebra(kGL3));
  EXPECT_THROW(AlgebraCurve(kGL3, samples, [](double) { return Matrix::Ones(3, 3); }), StructuralError);
  EXPECT_THROW(AlgebraCurve(kGL3, std::vector<AlgebraElement>(2, zero_algebra(kGL3))), StructuralError);
}

}  // namespace
}  // namespace limgroup
