#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "limgroup/hom_extend.hpp"
#include "test_support.hpp"

namespace limgroup {
namespace {

using testing::diag;

const GroupDescriptor kGL3 = GroupDescriptor::gl(3);

Blocks gl3(const Matrix& m) { return {GroupElement(kGL3, m)}; }

double scalar(const GroupElement& g) { return g.payload()(0, 0); }

Blocks so2_blocks(int factors, const std::map<int, double>& angles) {
  Blocks out(static_cast<std::size_t>(factors), identity(GroupDescriptor::so(2)));
  for (const auto& [j, a] : angles) out[static_cast<std::size_t>(j - 1)] = GroupElement(GroupDescriptor::so(2), rotation(a));
  return out;
}

// exp(A) with ‖A‖₂ ≤ bound, through the independent series exponential.
Blocks random_gl3(std::mt19937_64& rng, double bound) {
  return gl3(testing::series_exp(testing::clamp_norm(testing::random_matrix(rng, 3, 3, 1.0), bound)));
}

// Random point of V_j for the chain, embedded in GL(3).
Blocks random_in_vj(const DirectLimitChart& chart, int j, std::mt19937_64& rng, double fill) {
  return chart.system().lift(j, chart.invert_local(j, chart.sample_local_image(j, rng, fill)));
}

struct Fixtures {
  DirectLimitChart gl_affine{DirectedGroupSystem::gl_chain(3), Chart::affine()};
  DirectLimitChart gl_log{DirectedGroupSystem::gl_chain(3), Chart::matrix_log()};
  DirectLimitChart weak{DirectedGroupSystem::weak_product(std::vector<GroupDescriptor>(5, GroupDescriptor::so(2))),
                        Chart::matrix_log()};
  Extension det_affine{det_family(3), gl_affine};
  Extension det_log{det_family(3), gl_log};
  Extension angle{angle_family(5), weak};
};

const Fixtures& fx() {
  static const Fixtures f;
  return f;
}

TEST(RayCurve, IdentityIsConstant) {
  const RayCurve ray = make_ray_curve(fx().gl_affine, gl3(Matrix::Identity(3, 3)));
  EXPECT_EQ(ray.witness(), 0);
  for (double t : {0.0, 0.3, 1.0}) EXPECT_EQ(ray.value(t)[0].payload(), Matrix::Identity(3, 3));
  EXPECT_TRUE(ray.log_derivative(0.5).isZero(0.0));
}

TEST(RayCurve, AffineRayOnAOneByOneBlock) {
  const RayCurve ray = make_ray_curve(fx().gl_affine, gl3(diag({1.5, 1, 1})));
  EXPECT_EQ(ray.witness(), 0);
  for (double t : {0.0, 0.25, 0.5, 1.0}) EXPECT_LE((ray.value(t)[0].payload() - diag({1 + 0.5 * t, 1, 1})).norm(), 1e-15);
}

TEST(RayCurve, OutsideTheDomain) {
  EXPECT_THROW(make_ray_curve(fx().gl_affine, gl3(diag({2, 1, 1}))), DomainError);
}

TEST(RayCurve, EndpointsAndDenseDifferences) {
  std::mt19937_64 rng(211);
  for (const DirectLimitChart* chart : {&fx().gl_affine, &fx().gl_log}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Blocks x = random_gl3(rng, 0.4);
      const RayCurve ray = make_ray_curve(*chart, x);
      const GroupCurve gamma = ray.curve(64);
      EXPECT_LE((gamma.value(0.0) - Matrix::Identity(3, 3)).norm(), 1e-12);
      EXPECT_LE((gamma.value(1.0) - x[0].payload()).norm(), 1e-12);
      const AlgebraCurve u = log_derivative(gamma);
      const double h = 1.0 / 16384.0;
      for (int k = 1; k < 64; k += 7) {
        const double t = k / 64.0;
        const Matrix d = (gamma.value(t + h) - gamma.value(t - h)) / (2 * h);
        const Matrix oracle = gamma.value(t).inverse() * d;
        EXPECT_LE((u.samples()[static_cast<std::size_t>(k)].payload() - oracle).norm(), 1e-7);
        EXPECT_LE((ray.log_derivative(t) - Eigen::Map<const Vector>(oracle.data(), 9)).norm(), 1e-7);
      }
    }
  }
}

TEST(ExtendRegular, IdentityMapsToIdentity) {
  EXPECT_EQ(fx().det_affine.regular(gl3(Matrix::Identity(3, 3))).payload(), Matrix::Identity(1, 1));
  EXPECT_EQ(fx().angle.regular(so2_blocks(5, {})).payload(), Matrix::Zero(1, 1));
}

TEST(ExtendRegular, DeterminantExamples) {
  // diag(2,1) lies on the boundary of every AffineMinusIdentity ball of radius
  // below 1, so it goes through the MatrixLog chart.
  EXPECT_NEAR(scalar(fx().det_log.regular(gl3(diag({2, 1, 1})))), 2.0, 1e-12);
  EXPECT_NEAR(scalar(fx().det_affine.regular(gl3(diag({1.8, 1, 1})))), 1.8, 1e-12);
  // ∫₀¹ tr((I + tW)⁻¹W) dt = log det(I + W) for diagonal W.
  const double w = 0.8, closed = std::log1p(w);
  double simpson = 0.0;
  const int n = 2000;
  for (int k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) / n;
    simpson += (k == 0 || k == n ? 1 : (k % 2 ? 4 : 2)) * w / (1 + t * w);
  }
  simpson /= 3.0 * n;
  EXPECT_NEAR(simpson, closed, 1e-12);
}

TEST(ExtendRegular, AngleSumOnTheWeakProduct) {
  const Blocks x = so2_blocks(5, {{2, 0.3}, {4, -0.1}});
  EXPECT_NEAR(scalar(fx().angle.regular(x)), 0.2, 1e-12);
  EXPECT_EQ(fx().angle.chart().system().index().label(make_ray_curve(fx().angle.chart(), x).witness()), "{2,4}");
}

TEST(ExtendRegular, ConsistencyWithTheLocalHomomorphisms) {
  std::mt19937_64 rng(223);
  for (const Extension* e : {&fx().det_affine, &fx().det_log}) {
    for (int trial = 0; trial < 30; ++trial) {
      const int j = trial % 3;
      const Blocks x = random_in_vj(e->chart(), j, rng, 0.95);
      const double f = x[0].payload().determinant();
      EXPECT_LE(std::abs(scalar(e->regular(x)) - f), 1e-6);
      EXPECT_LE(std::abs(scalar(e->direct(x)) - f), 1e-14);
    }
  }
  for (int trial = 0; trial < 30; ++trial) {
    const int j = static_cast<int>(rng() % 32);
    const Blocks x = random_in_vj(fx().weak, j, rng, 0.95);
    EXPECT_LE(distance(fx().angle.regular(x), fx().angle.direct(x)), 1e-6);
  }
}

TEST(ExtendRegular, ChartIndependence) {
  std::mt19937_64 rng(227);
  for (int trial = 0; trial < 20; ++trial) {
    const Blocks x = random_gl3(rng, 0.5);
    if (!fx().gl_affine.in_domain(x) || !fx().gl_log.in_domain(x)) continue;
    EXPECT_LE(distance(fx().det_affine.regular(x), fx().det_log.regular(x)), 1e-6);
  }
}

TEST(ExtendGlobal, InsideTheDomainEqualsRegular) {
  const Blocks x = gl3(diag({1.3, 0.9, 1.1}));
  EXPECT_EQ(fx().det_affine.global(x).payload(), fx().det_affine.regular(x).payload());
  EXPECT_EQ(fx().det_affine.root_count(gl3(diag({4, 1, 1}))), 3);
}

TEST(ExtendGlobal, SquareFactorization) {
  const Blocks x = gl3(diag({4, 1, 1}));
  const Blocks half = gl3(diag({2, 1, 1}));
  EXPECT_NEAR(scalar(fx().det_log.global(x, {half, half})), 4.0, 1e-10);
  EXPECT_NEAR(scalar(fx().det_log.global(x)), 4.0, 1e-10);
  EXPECT_NEAR(scalar(fx().det_affine.global(x)), 4.0, 1e-10);
  EXPECT_THROW(fx().det_log.global(x, {half}), FactorizationError);
  EXPECT_THROW(fx().det_affine.global(x, {half, half}), FactorizationError);
  EXPECT_THROW(fx().det_log.global(gl3(diag({-1, -1, 1}))), FactorizationError);
}

TEST(ExtendGlobal, RootFactorizationsMatchDeterminants) {
  std::mt19937_64 rng(229);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = testing::clamp_norm(testing::random_matrix(rng, 3, 3, 1.0), 1.5);
    const Blocks x = gl3(testing::series_exp(a));
    const Blocks quarter = gl3(testing::series_exp(a / 4));
    const double det = std::exp(a.trace());
    const double auto_root = scalar(fx().det_affine.global(x));
    const double quartic = scalar(fx().det_affine.global(x, {quarter, quarter, quarter, quarter}));
    EXPECT_LE(std::abs(auto_root - det) / det, 1e-7);
    EXPECT_LE(std::abs(quartic - det) / det, 1e-7);
    EXPECT_LE(std::abs(auto_root - quartic), 1e-6);
  }
}

TEST(ExtendGlobal, HomomorphismDefect) {
  std::mt19937_64 rng(233);
  for (int trial = 0; trial < 20; ++trial) {
    const Blocks x = random_gl3(rng, 0.34), y = random_gl3(rng, 0.34);
    const Blocks xy = gl3(x[0].payload() * y[0].payload());
    const GroupElement fxy = fx().det_affine.global(xy);
    EXPECT_LE(distance(fxy, group_multiply(fx().det_affine.global(x), fx().det_affine.global(y))), 1e-6);
  }
}

TEST(ExtendExponential, Examples) {
  EXPECT_EQ(fx().det_log.exponential(gl3(Matrix::Identity(3, 3))).payload(), Matrix::Identity(1, 1));
  EXPECT_NEAR(scalar(fx().det_log.exponential(gl3(diag({2, 1, 1})))), 2.0, 1e-12);
  EXPECT_THROW(fx().det_log.exponential(gl3(diag({-1, -2, 1}))), DomainError);
}

TEST(ExtendExponential, AgreesWithTheRegularEngine) {
  std::mt19937_64 rng(239);
  for (int trial = 0; trial < 30; ++trial) {
    const Blocks x = random_gl3(rng, 0.6);
    if (!fx().gl_affine.in_domain(x)) continue;
    EXPECT_LE(distance(fx().det_affine.exponential(x), fx().det_affine.regular(x)), 1e-6);
  }
  for (int trial = 0; trial < 30; ++trial) {
    const Blocks x = random_in_vj(fx().weak, static_cast<int>(rng() % 32), rng, 0.95);
    EXPECT_LE(distance(fx().angle.exponential(x), fx().angle.regular(x)), 1e-6);
  }
}

TEST(ExtendRegular, RestrictionFormulaOnTheWeakProduct) {
  // F on a family supported on Φ equals f_{j₁}(g_{j₁})·…·f_{jₙ}(g_{jₙ}).
  std::mt19937_64 rng(241);
  std::uniform_real_distribution<double> angle(-0.9, 0.9);
  for (std::uint32_t mask = 0; mask < 32; ++mask) {
    std::map<int, double> angles;
    double sum = 0.0;
    for (int j = 1; j <= 5; ++j) {
      if (!(mask & (1u << (j - 1)))) continue;
      angles[j] = angle(rng);
      sum += angles[j];
    }
    EXPECT_NEAR(scalar(fx().angle.regular(so2_blocks(5, angles))), sum, 1e-10);
  }
}

TEST(CheckFamily, ShippedFamiliesPass) {
  std::mt19937_64 rng(251);
  const ValidationReport det = check_family(det_family(3), fx().gl_affine, rng);
  EXPECT_TRUE(det.passed()) << (det.failures.empty() ? "" : det.failures.front().detail);
  const ValidationReport ang = check_family(angle_family(5), fx().weak, rng, 8);
  EXPECT_TRUE(ang.passed()) << (ang.failures.empty() ? "" : ang.failures.front().detail);
}

TEST(CheckFamily, ScaledDerivativeIsDetected) {
  std::mt19937_64 rng(257);
  HomFamily bad = det_family(3);
  bad.psi[1] *= 1.01;
  const ValidationReport r = check_family(bad, fx().gl_affine, rng);
  ASSERT_FALSE(r.passed());
  bool derivative = false, linear = false;
  for (const auto& f : r.failures) {
    derivative = derivative || (f.check == "derivative" && f.detail.find("psi_2") != std::string::npos);
    linear = linear || f.check == "linear";
  }
  EXPECT_TRUE(derivative);
  EXPECT_TRUE(linear);
  EXPECT_THROW(Extension(bad, fx().gl_affine), CompatibilityError);
}

TEST(CheckFamily, BrokenHomomorphismIsDetected) {
  std::mt19937_64 rng(263);
  HomFamily bad = det_family(3);
  bad.f[2] = [](const Blocks& local) {
    return GroupElement(GroupDescriptor::gl(1), Matrix::Constant(1, 1, local[0].payload().trace() - 2.0));
  };
  const ValidationReport r = check_family(bad, fx().gl_affine, rng);
  bool hom = false, directed = false;
  for (const auto& f : r.failures) {
    hom = hom || f.check == "homomorphism";
    directed = directed || f.check == "directed";
  }
  EXPECT_TRUE(hom);
  EXPECT_TRUE(directed);
}

}  // namespace
}  // namespace limgroup
