#include <gtest/gtest.h>

#include <random>

#include "limgroup/direct_limit.hpp"
#include "test_support.hpp"

namespace limgroup {
namespace {

using testing::diag;

Matrix pad3(const Matrix& m) {
  Matrix p = Matrix::Zero(3, 3);
  p.topLeftCorner(m.rows(), m.cols()) = m;
  return p;
}

Vector flat(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

std::vector<GroupDescriptor> so2_factors(int n) { return std::vector<GroupDescriptor>(static_cast<std::size_t>(n), GroupDescriptor::so(2)); }

TEST(DirectedIndex, JoinIsAnUpperBoundIdempotentAndCommutative) {
  for (const DirectedIndex& index :
       {DirectedIndex::total_order(8), DirectedIndex::finite_subsets(6), DirectedIndex::compact_intervals(7)}) {
    for (int a = 0; a < index.size(); ++a) {
      EXPECT_EQ(index.join(a, a), a);
      EXPECT_TRUE(index.leq(index.least(), a));
      for (int b = 0; b < index.size(); ++b) {
        const int j = index.join(a, b);
        EXPECT_TRUE(index.leq(a, j));
        EXPECT_TRUE(index.leq(b, j));
        EXPECT_EQ(j, index.join(b, a));
      }
    }
  }
}

TEST(DirectedIndex, SubsetEnumerationStartsAtTheEmptySet) {
  const DirectedIndex index = DirectedIndex::finite_subsets(5);
  EXPECT_EQ(index.size(), 32);
  EXPECT_EQ(index.subset(0), 0u);
  EXPECT_EQ(index.label(0), "{}");
  EXPECT_EQ(index.label(index.position_of(0b01010)), "{2,4}");
  for (int a = 1; a < index.size(); ++a)
    EXPECT_LE(__builtin_popcount(index.subset(a - 1)), __builtin_popcount(index.subset(a)));
}

TEST(DirectedGroupSystem, ChainCocycleAndHomomorphismOnAllPairs) {
  const DirectedGroupSystem s = DirectedGroupSystem::gl_chain(3);
  const DirectLimitChart chart(s, Chart::affine());
  std::mt19937_64 rng(101);
  for (int i = 0; i < 3; ++i) {
    for (int trial = 0; trial < 10; ++trial) {
      const Blocks a = chart.invert_local(i, chart.sample_local_image(i, rng));
      const Blocks b = chart.invert_local(i, chart.sample_local_image(i, rng));
      for (int j = i; j < 3; ++j) {
        EXPECT_LE(DirectedGroupSystem::distance(s.embed(i, j, s.multiply(a, b)),
                                                s.multiply(s.embed(i, j, a), s.embed(i, j, b))),
                  1e-12);
        for (int k = j; k < 3; ++k)
          EXPECT_LE(DirectedGroupSystem::distance(s.embed(i, k, a), s.embed(j, k, s.embed(i, j, a))), 1e-12);
      }
    }
  }
}

TEST(DirectedGroupSystem, ChainPaddingIsBlockDiagonal) {
  const DirectedGroupSystem s = DirectedGroupSystem::gl_chain(3);
  const Blocks x = {GroupElement(GroupDescriptor::gl(1), Matrix::Constant(1, 1, 2.0))};
  const Blocks up = s.lift(0, x);
  EXPECT_EQ(up[0].payload(), diag({2, 1, 1}));
  EXPECT_TRUE(s.contains(0, up));
  EXPECT_EQ(s.restrict(1, up)[0].payload(), diag({2, 1}));
  EXPECT_THROW(s.restrict(0, {GroupElement(GroupDescriptor::gl(3), diag({1, 2, 1}))}), DomainError);
  EXPECT_EQ(s.model_coords(1), (std::vector<std::size_t>{0, 1, 3, 4}));
}

TEST(DirectedGroupSystem, WeakProductCocycle) {
  const DirectedGroupSystem s = DirectedGroupSystem::weak_product(so2_factors(4));
  const DirectedIndex& index = s.index();
  const DirectLimitChart chart(s, Chart::matrix_log());
  std::mt19937_64 rng(103);
  for (int i = 0; i < index.size(); ++i) {
    const Blocks a = chart.invert_local(i, chart.sample_local_image(i, rng));
    for (int j = 0; j < index.size(); ++j) {
      if (!index.leq(i, j)) continue;
      for (int k = 0; k < index.size(); ++k) {
        if (!index.leq(j, k)) continue;
        EXPECT_LE(DirectedGroupSystem::distance(s.embed(i, k, a), s.embed(j, k, s.embed(i, j, a))), 1e-12);
      }
    }
  }
}

TEST(WeakProduct, MultiplyExamples) {
  const auto factors = so2_factors(5);
  const GroupDescriptor so2 = GroupDescriptor::so(2);
  FinSuppFamily empty(factors);
  EXPECT_TRUE(weak_product_multiply(empty, empty).entries().empty());

  FinSuppFamily a(factors), b(factors);
  a.set(2, GroupElement(so2, rotation(0.4)));
  b.set(4, GroupElement(so2, rotation(-0.7)));
  const FinSuppFamily ab = weak_product_multiply(a, b);
  EXPECT_EQ(ab.support(), (std::vector<int>{2, 4}));
  EXPECT_EQ(ab.at(2).payload(), rotation(0.4));
  EXPECT_EQ(ab.at(4).payload(), rotation(-0.7));

  FinSuppFamily c(factors), d(factors);
  c.set(3, GroupElement(so2, rotation(0.9)));
  d.set(3, GroupElement(so2, rotation(-0.9)));
  EXPECT_TRUE(weak_product_multiply(c, d).support().empty());

  FinSuppFamily other(so2_factors(4));
  EXPECT_THROW(weak_product_multiply(a, other), StructuralError);
  EXPECT_THROW(a.set(1, GroupElement(GroupDescriptor::gl(2), diag({2, 1}))), StructuralError);
}

TEST(WeakProduct, NormalFormDropsIdentities) {
  FinSuppFamily f(so2_factors(3));
  f.set(1, GroupElement(GroupDescriptor::so(2), rotation(1e-14)));
  EXPECT_TRUE(f.support().empty());
  EXPECT_EQ(f.at(1).payload(), Matrix::Identity(2, 2));
}

TEST(WeakProduct, ChartExamples) {
  const std::vector<GroupDescriptor> gl2(3, GroupDescriptor::gl(2));
  const std::vector<Chart> charts(3, Chart::affine(1.5));
  EXPECT_TRUE(weak_product_chart(charts, FinSuppFamily(gl2)).empty());

  FinSuppFamily g(gl2);
  g.set(1, GroupElement(GroupDescriptor::gl(2), diag({2, 1})));
  const FinSuppAlgebra w = weak_product_chart(charts, g);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w.at(1).payload(), diag({1, 0}));

  const std::vector<Chart> tight(3, Chart::affine(0.9));
  try {
    (void)weak_product_chart(tight, g);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("factor 1"), std::string::npos);
  }
}

TEST(WeakProduct, ChartRoundTripAndFiniteRestriction) {
  std::mt19937_64 rng(107);
  const auto factors = so2_factors(8);
  const std::vector<Chart> charts(8, Chart::matrix_log());
  std::uniform_real_distribution<double> angle(-0.9, 0.9);
  std::uniform_int_distribution<int> label(1, 8);
  for (int trial = 0; trial < 50; ++trial) {
    FinSuppFamily g(factors);
    const int size = 1 + trial % 5;
    while (static_cast<int>(g.support().size()) < size) g.set(label(rng), GroupElement(GroupDescriptor::so(2), rotation(angle(rng))));
    const FinSuppAlgebra w = weak_product_chart(charts, g);
    // Finite sub-product chart: each component through its own chart.
    for (int j : g.support()) {
      EXPECT_LE((w.at(j).payload() - chart_apply(charts[static_cast<std::size_t>(j - 1)], g.at(j)).payload()).norm(), 1e-12);
      EXPECT_NEAR(w.at(j).payload()(1, 0), rotation_angle(g.at(j).payload()), 1e-12);
    }
    const FinSuppFamily back = weak_product_chart_inverse(charts, factors, w);
    EXPECT_EQ(back.support(), g.support());
    for (int j : g.support()) EXPECT_LE(distance(back.at(j), g.at(j)), 1e-10);
  }
}

TEST(LineWitness, ZeroSegmentUsesTheLeastIndex) {
  const DirectLimitChart gl(DirectedGroupSystem::gl_chain(3), Chart::affine());
  EXPECT_EQ(find_line_witness(gl, Vector::Zero(9)), 0);
  const DirectLimitChart weak(DirectedGroupSystem::weak_product(so2_factors(5)), Chart::matrix_log());
  EXPECT_EQ(find_line_witness(weak, Vector::Zero(5)), 0);
}

TEST(LineWitness, BlockSupportDeterminesTheIndex) {
  const DirectLimitChart chart(DirectedGroupSystem::gl_chain(3), Chart::affine());
  EXPECT_EQ(find_line_witness(chart, flat(diag({0.5, 0, 0}))), 0);

  const Vector w = flat(diag({0.3, 0.2, 0}));
  const int j = find_line_witness(chart, w);
  EXPECT_EQ(j, 1);
  // Dense oracle: every sampled t·w has its support in the 2×2 block and
  // spectral norm below the radius.
  for (int k = 0; k < 4096; ++k) {
    const double t = k / 4095.0;
    const Matrix tw = t * diag({0.3, 0.2, 0});
    EXPECT_EQ(tw(2, 2), 0.0);
    EXPECT_LT(Eigen::JacobiSVD<Matrix>(tw.topLeftCorner(2, 2)).singularValues()(0), chart.radius(j));
  }
  EXPECT_EQ(find_line_witness(chart, w, SegmentTest::Sampled), 1);
}

TEST(LineWitness, WeakProductTakesTheSupport) {
  const DirectLimitChart chart(DirectedGroupSystem::weak_product(so2_factors(5)), Chart::matrix_log());
  Vector w = Vector::Zero(5);
  w(1) = 0.3;
  w(3) = -0.1;
  EXPECT_EQ(chart.system().index().label(find_line_witness(chart, w)), "{2,4}");
}

TEST(LineWitness, SampledAndExactAgree) {
  std::mt19937_64 rng(109);
  const DirectLimitChart chart(DirectedGroupSystem::gl_chain(3), Chart::affine());
  for (int trial = 0; trial < 200; ++trial) {
    const int i = trial % 3;
    const Vector w = chart.system().embed_model(i, chart.sample_local_image(i, rng, 0.99));
    const int exact = find_line_witness(chart, w);
    EXPECT_EQ(find_line_witness(chart, w, SegmentTest::Sampled), exact);
    EXPECT_LE(exact, i);
  }
}

TEST(LineWitness, Failures) {
  const DirectLimitChart chart(DirectedGroupSystem::gl_chain(3), Chart::affine(0.9), {0.5, 0.5, 0.5});
  EXPECT_THROW(find_line_witness(chart, flat(diag({0.7, 0, 0}))), WitnessError);
  EXPECT_THROW(find_line_witness(chart, flat(diag({0.95, 0, 0}))), DomainError);
}

TEST(ColimitMap, ZeroFamily) {
  const DirectedGroupSystem s = DirectedGroupSystem::gl_chain(3);
  std::vector<Matrix> psis;
  for (int i = 0; i < 3; ++i) psis.push_back(Matrix::Zero(2, static_cast<Eigen::Index>(s.local_model_dim(i))));
  EXPECT_TRUE(colimit_linear_map(s, psis).isZero(0.0));
}

TEST(ColimitMap, TraceOnTheChain) {
  const DirectedGroupSystem s = DirectedGroupSystem::gl_chain(3);
  std::vector<Matrix> psis;
  for (int m = 1; m <= 3; ++m) {
    Matrix t = Matrix::Zero(1, m * m);
    for (int c = 0; c < m; ++c) t(0, c * m + c) = 1.0;
    psis.push_back(t);
  }
  const Matrix psi = colimit_linear_map(s, psis);
  EXPECT_DOUBLE_EQ((psi * flat(diag({1, 2, 3})))(0), 6.0);
  // Via an admissible index: diag(1,2) padded through psi_2 and psi_3.
  const Vector w = flat(pad3(diag({1, 2})));
  EXPECT_DOUBLE_EQ((psis[1] * s.restrict_model(1, w))(0), 3.0);
  EXPECT_DOUBLE_EQ((psi * w)(0), 3.0);
}

TEST(ColimitMap, RecoversARestrictedMap) {
  std::mt19937_64 rng(113);
  for (const DirectedGroupSystem& s :
       {DirectedGroupSystem::gl_chain(3), DirectedGroupSystem::weak_product(so2_factors(5))}) {
    const Matrix big = testing::random_matrix(rng, 3, static_cast<int>(s.model_dim()), 1.0);
    std::vector<Matrix> psis;
    for (int i = 0; i < s.index().size(); ++i) {
      Matrix p(3, static_cast<Eigen::Index>(s.local_model_dim(i)));
      for (Eigen::Index c = 0; c < p.cols(); ++c) p.col(c) = big.col(static_cast<Eigen::Index>(s.model_coords(i)[static_cast<std::size_t>(c)]));
      psis.push_back(p);
    }
    const Matrix psi = colimit_linear_map(s, psis);
    for (int trial = 0; trial < 100; ++trial) {
      const Vector v = testing::random_matrix(rng, static_cast<int>(s.model_dim()), 1, 1.0);
      EXPECT_LE((psi * v - big * v).norm(), 1e-10);
    }
    // Two admissible routes agree.
    const int top = s.index().greatest();
    for (int i = 0; i < s.index().size(); ++i) {
      const Vector local = testing::random_matrix(rng, static_cast<int>(s.local_model_dim(i)), 1, 1.0);
      const Vector w = s.embed_model(i, local);
      EXPECT_LE((psis[static_cast<std::size_t>(i)] * local - psis[static_cast<std::size_t>(top)] * s.restrict_model(top, w)).norm(), 1e-12);
    }
  }
}

TEST(ColimitMap, IncompatibleFamilyNamesTheWorstPair) {
  const DirectedGroupSystem s = DirectedGroupSystem::gl_chain(3);
  std::vector<Matrix> psis;
  for (int m = 1; m <= 3; ++m) {
    Matrix t = Matrix::Zero(1, m * m);
    for (int c = 0; c < m; ++c) t(0, c * m + c) = 1.0;
    psis.push_back(t);
  }
  psis[1] *= 1.01;
  try {
    (void)colimit_linear_map(s, psis);
    FAIL() << "expected CompatibilityError";
  } catch (const CompatibilityError& e) {
    EXPECT_NEAR(e.defect(), 0.01, 1e-12);
  }
}

TEST(CheckChart, ShippedSystemsPass) {
  std::mt19937_64 rng(127);
  const DirectLimitChart gl(DirectedGroupSystem::gl_chain(3), Chart::affine());
  const ValidationReport a = check_direct_limit_chart(gl, rng);
  EXPECT_TRUE(a.passed()) << (a.failures.empty() ? "" : a.failures.front().detail);
  EXPECT_GT(a.checks, 0);

  const DirectLimitChart weak(DirectedGroupSystem::weak_product(so2_factors(5)), Chart::matrix_log());
  const ValidationReport b = check_direct_limit_chart(weak, rng, 8);
  EXPECT_TRUE(b.passed()) << (b.failures.empty() ? "" : b.failures.front().detail);
}

TEST(CheckChart, ShrunkNestingIsDetected) {
  std::mt19937_64 rng(131);
  const DirectLimitChart bad(DirectedGroupSystem::gl_chain(3), Chart::affine(0.9), {0.9, 0.5, 0.9});
  const ValidationReport r = check_direct_limit_chart(bad, rng);
  ASSERT_FALSE(r.passed());
  bool nesting = false;
  for (const auto& f : r.failures) nesting = nesting || f.check == "nesting";
  EXPECT_TRUE(nesting);
}

}  // namespace
}  // namespace limgroup
