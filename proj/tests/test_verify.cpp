#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "gsbp/registry.hpp"
#include "gsbp/verify.hpp"

namespace {

using gsbp::cplx;
using gsbp::MatD;
using gsbp::NodeFamily;
using gsbp::VecD;

gsbp::ButcherTableau<double> make(const MatD& A, const VecD& b, const VecD& c) {
  gsbp::ButcherTableau<double> t;
  t.name = "test";
  t.A = A;
  t.b = b;
  t.c = c;
  t.structure = gsbp::detect_structure(A);
  return t;
}

gsbp::ButcherTableau<double> backward_euler() {
  return make(MatD::Ones(1, 1), VecD::Ones(1), VecD::Ones(1));
}

gsbp::ButcherTableau<double> classical_rk4() {
  MatD A = MatD::Zero(4, 4);
  A(1, 0) = 0.5;
  A(2, 1) = 0.5;
  A(3, 2) = 1.0;
  VecD b(4), c(4);
  b << 1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6;
  c << 0, 0.5, 0.5, 1;
  return make(A, b, c);
}

// Number of rooted trees with p nodes via the Euler transform recurrence.
std::vector<long> rooted_tree_counts(int pmax) {
  std::vector<long> a(pmax + 1, 0);
  a[1] = 1;
  for (int n = 1; n < pmax; ++n) {
    long sum = 0;
    for (int k = 1; k <= n; ++k) {
      long s = 0;
      for (int d = 1; d <= k; ++d)
        if (k % d == 0) s += d * a[d];
      sum += s * a[n - k + 1];
    }
    a[n + 1] = sum / n;
  }
  return a;
}

TEST(Trees, CountsMatchEulerTransform) {
  const gsbp::Forest forest(8);
  const auto oracle = rooted_tree_counts(8);
  const long expected[] = {1, 1, 2, 4, 9, 20, 48, 115};
  for (int p = 1; p <= 8; ++p) {
    EXPECT_EQ(forest.count(p), oracle[p]) << p;
    EXPECT_EQ(forest.count(p), expected[p - 1]) << p;
  }
  EXPECT_EQ(forest.size(), 200);
}

TEST(Trees, DensitiesOfSmallTrees) {
  const gsbp::Forest forest(4);
  // order 3: [*,*] has gamma 3, [[*]] has gamma 6
  std::vector<double> g3;
  for (int i = forest.begin_of(3); i < forest.end_of(3); ++i) g3.push_back(forest[i].gamma);
  std::sort(g3.begin(), g3.end());
  EXPECT_EQ(g3, (std::vector<double>{3, 6}));
  // sum over trees of order p of p!/(sigma gamma) = p^{p-1}/... ; use the
  // simpler identity sum 1/gamma * alpha = 1 for the exact flow: with
  // A = strictly lower, the Euler method has Phi = 1 for bushy trees only
  std::vector<double> g4;
  for (int i = forest.begin_of(4); i < forest.end_of(4); ++i) g4.push_back(forest[i].gamma);
  std::sort(g4.begin(), g4.end());
  EXPECT_EQ(g4, (std::vector<double>{4, 8, 12, 24}));
}

TEST(Order, ClassicalReferenceMethods) {
  EXPECT_EQ(gsbp::full_order_conditions(backward_euler()).p_full, 1);
  EXPECT_EQ(gsbp::full_order_conditions(backward_euler()).first_failing_order, 2);
  const auto rk4 = gsbp::full_order_conditions(classical_rk4());
  EXPECT_EQ(rk4.p_full, 4);
  EXPECT_EQ(rk4.first_failing_order, 5);
  const auto mid = gsbp::full_order_conditions(gsbp::lookup_scheme("gauss-collocation-1").tableau);
  EXPECT_EQ(mid.p_full, 2);
  const auto g3 = gsbp::full_order_conditions(gsbp::lookup_scheme("gauss-collocation-3").tableau);
  EXPECT_EQ(g3.p_full, 6);
  const auto g4 = gsbp::full_order_conditions(gsbp::lookup_scheme("gauss-collocation-4").tableau);
  EXPECT_EQ(g4.p_full, 8);
  EXPECT_EQ(g4.first_failing_order, 0);
}

TEST(Order, SimplifyingConditionExamples) {
  const auto lob4 = gsbp::simplifying_conditions(gsbp::lookup_scheme("lobatto-iiic-4").tableau);
  EXPECT_EQ(lob4.B, 6);
  EXPECT_EQ(lob4.C, 3);
  EXPECT_EQ(lob4.D, 3);
  EXPECT_EQ(lob4.implied_order(), 6);
  const auto g4 = gsbp::simplifying_conditions(gsbp::lookup_scheme("gauss-gsbp-4").tableau);
  EXPECT_EQ(g4.B, 8);
  EXPECT_EQ(g4.C, 3);
  EXPECT_EQ(g4.D, 3);
  EXPECT_EQ(g4.implied_order(), 7);
  const auto lob2 = gsbp::simplifying_conditions(gsbp::lookup_scheme("lobatto-iiic-2").tableau);
  EXPECT_EQ(lob2.B, 2);
  EXPECT_EQ(lob2.C, 1);
  EXPECT_EQ(lob2.D, 1);
}

TEST(Order, PrintedSchemes) {
  const auto lob4 = gsbp::full_order_conditions(gsbp::lookup_scheme("lobatto-iiic-4").tableau);
  EXPECT_EQ(lob4.p_full, 6);
  EXPECT_EQ(lob4.first_failing_order, 7);
  const auto g4 = gsbp::full_order_conditions(gsbp::lookup_scheme("gauss-gsbp-4").tableau);
  EXPECT_EQ(g4.p_full, 7);
  const auto d3 = gsbp::full_order_conditions(gsbp::lookup_scheme("dirk3").tableau);
  EXPECT_EQ(d3.p_full, 3);
  const auto d4 = gsbp::full_order_conditions(gsbp::lookup_scheme("dirk4").tableau);
  EXPECT_EQ(d4.p_full, 4);
  EXPECT_EQ(d4.first_failing_order, 5);
}

TEST(Order, FloorsForDiagonalNormFamilies) {
  for (auto f : {NodeFamily::Gauss, NodeFamily::LobattoLegendre, NodeFamily::RadauLeft,
                 NodeFamily::RadauRight}) {
    for (int n = 2; n <= 6; ++n) {
      const auto op = gsbp::build_family_operator(f, n);
      const auto tab = gsbp::to_tableau(op);
      const auto rep = gsbp::full_order_conditions(tab);
      SCOPED_TRACE(op.name);
      // trees stop at order 8; beyond that the simplifying assumptions carry
      const int floor = std::min(op.tau, 2 * op.q + 1);
      EXPECT_GE(rep.p_full, std::min(floor, rep.pmax));
      EXPECT_GE(rep.simplifying.implied_order(), floor);
      EXPECT_GE(rep.simplifying.C, op.q);
      EXPECT_GE(rep.simplifying.D, op.q);
      EXPECT_EQ(rep.simplifying.B, op.tau);
      if (f == NodeFamily::RadauRight) EXPECT_EQ(rep.simplifying.C, op.q + 1);
    }
  }
}

TEST(Stability, Lobatto2ClosedFormResolvent) {
  const auto tab = gsbp::lookup_scheme("lobatto-iiic-2").tableau;
  EXPECT_NEAR(std::abs(gsbp::stability_function(tab, 0.0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(gsbp::stability_function(tab, -1.0).real(), 0.4, 1e-15);
  for (cplx z : {cplx(-0.3, 2.0), cplx(1.5, -0.5), cplx(-40.0, 7.0)}) {
    const cplx closed = 1.0 / (1.0 - z + z * z / 2.0);
    EXPECT_LT(std::abs(gsbp::stability_function(tab, z) - closed), 1e-14);
  }
}

TEST(Stability, RadauIIATwoStagePade) {
  const auto tab = gsbp::lookup_scheme("radau-iia-2").tableau;
  for (cplx z : {cplx(-1.0, 0.0), cplx(0.2, 3.0), cplx(-100.0, 1.0)}) {
    const cplx pade = (1.0 + z / 3.0) / (1.0 - 2.0 * z / 3.0 + z * z / 6.0);
    EXPECT_LT(std::abs(gsbp::stability_function(tab, z) - pade), 1e-14);
  }
}

TEST(Stability, GaussGsbpIsStronglyDamping) {
  const auto s = gsbp::lookup_scheme("gauss-gsbp-4");
  EXPECT_LT(std::abs(gsbp::stability_function(s.tableau, -1e6)), 1e-4);
  const cplx z(-2.0, 3.0);
  EXPECT_LT(std::abs(gsbp::stability_function(s.tableau, z) - gsbp::stability_function(*s.op, z)),
            1e-12);
}

TEST(Stability, PoleIsReported) {
  // backward Euler: R(z) = 1 / (1 - z), pole at z = 1
  EXPECT_THROW(gsbp::stability_function(backward_euler(), 1.0), gsbp::NumericError);
}

TEST(Stability, Lobatto4Report) {
  const auto s = gsbp::lookup_scheme("lobatto-iiic-4");
  const auto rep = gsbp::stability_report(s.tableau, &*s.op);
  EXPECT_TRUE(rep.a_stable);
  EXPECT_TRUE(rep.l_stable);
  EXPECT_TRUE(rep.bn_stable);
  EXPECT_LT(std::abs(rep.r_inf), 1e-10);
  MatD e1 = MatD::Zero(4, 4);
  e1(0, 0) = 1.0;
  EXPECT_LT(gsbp::max_abs(MatD(rep.m_hat - e1)), 1e-10);
  EXPECT_LT(*rep.gsbp_m_residual, 1e-10);
  EXPECT_LT(*rep.gsbp_resolvent_residual, 1e-10);
}

TEST(Stability, GaussCollocationIsNotLStable) {
  const auto tab = gsbp::lookup_scheme("gauss-collocation-3").tableau;
  const auto rep = gsbp::stability_report(tab);
  EXPECT_GT(std::abs(rep.r_inf), 0.1);
  EXPECT_FALSE(rep.l_stable);
  EXPECT_TRUE(rep.a_stable);
  EXPECT_TRUE(rep.bn_stable);  // M = 0 for Gauss collocation
}

TEST(Stability, ExplicitMethodsHaveUndefinedBn) {
  const auto rep = gsbp::stability_report(classical_rk4());
  EXPECT_FALSE(rep.a_invertible);
  EXPECT_FALSE(rep.bn_defined);
  EXPECT_FALSE(rep.a_stable);
  EXPECT_FALSE(rep.l_stable);
}

TEST(Stability, EveryRegistryGsbpSchemeSatisfiesTheorems) {
  for (const auto& name : gsbp::registry_names()) {
    const auto s = gsbp::lookup_scheme(name);
    if (!s.op) continue;
    const auto rep = gsbp::stability_report(s.tableau, &*s.op);
    SCOPED_TRACE(name);
    EXPECT_LT(std::abs(rep.r_inf), 1e-10);
    EXPECT_LE(rep.max_abs_r_imag, 1.0 + 1e-10);
    EXPECT_TRUE(rep.a_stable);
    EXPECT_TRUE(rep.l_stable);
    EXPECT_TRUE(rep.bn_stable);
    ASSERT_TRUE(rep.m_vs_chi0_residual.has_value());
    EXPECT_LT(*rep.m_vs_chi0_residual, 1e-10);
    EXPECT_LT(*rep.gsbp_m_residual, 1e-10);
  }
}

TEST(Report, JsonShape) {
  const auto tab = gsbp::lookup_scheme("radau-ia-3").tableau;
  const auto j = gsbp::certification_to_json(gsbp::full_order_conditions(tab),
                                             gsbp::stability_report(tab));
  EXPECT_EQ(j["order"]["p_full"], 5);
  EXPECT_EQ(j["order"]["conditions"].size(), 200u);
  EXPECT_EQ(j["stability"]["l_stable"], true);
}

}  // namespace
