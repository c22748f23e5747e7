#include <gtest/gtest.h>

#include <cmath>

#include "gsbp/io.hpp"
#include "gsbp/registry.hpp"
#include "gsbp/tableau.hpp"
#include "printed.hpp"

namespace {

using gsbp::MatD;
using gsbp::NodeFamily;
using gsbp::VecD;

TEST(Tableau, Lobatto2ClosedForm) {
  const auto op = gsbp::build_family_operator(NodeFamily::LobattoLegendre, 2);
  // P = Theta + chi0 chi0' = [[1/2, 1/2], [-1/2, 1/2]], det 1/2, adjugate inverse
  MatD P(2, 2);
  P << 0.5, 0.5, -0.5, 0.5;
  const double det = P(0, 0) * P(1, 1) - P(0, 1) * P(1, 0);
  MatD Pinv(2, 2);
  Pinv << P(1, 1), -P(0, 1), -P(1, 0), P(0, 0);
  Pinv /= det;
  const MatD expected = Pinv * MatD(VecD::Constant(2, 0.5).asDiagonal());
  EXPECT_NEAR(expected(0, 1), -0.5, 1e-16);

  const auto tab = gsbp::to_tableau(op);
  EXPECT_LT(gsbp::max_abs(MatD(tab.A - expected)), 1e-15);
  EXPECT_NEAR(tab.b(0), 0.5, 1e-16);
  EXPECT_NEAR(tab.b(1), 0.5, 1e-16);
  EXPECT_EQ(tab.structure, gsbp::Structure::FullyImplicit);
}

TEST(Tableau, Lobatto4MatchesLobattoIIIC) {
  const auto tab = gsbp::to_tableau(gsbp::build_family_operator(NodeFamily::LobattoLegendre, 4));
  EXPECT_LT(gsbp::max_abs(MatD(tab.A - printed::lobatto4_A_consistent())), 1e-12);
  EXPECT_LT(gsbp::max_abs(VecD(tab.b - printed::lobatto4_b())), 1e-12);
  EXPECT_LT(gsbp::max_abs(VecD(tab.c - printed::lobatto4_c())), 1e-12);
  // the printed first row has two signs swapped; it violates A c = c^2 / 2
  const MatD as_printed = printed::lobatto4_A_as_printed();
  EXPECT_NEAR(as_printed.row(0).dot(tab.c), -1.0 / 6, 1e-15);
  EXPECT_NEAR(tab.A.row(0).dot(tab.c), 0.0, 1e-15);
  EXPECT_LT(gsbp::max_abs(MatD(tab.A.bottomRows(3) - as_printed.bottomRows(3))), 1e-12);
  // C(3): A c^2 = c^3 / 3
  const VecD c2 = tab.c.cwiseProduct(tab.c);
  EXPECT_LT(gsbp::max_abs(VecD(tab.A * c2 - c2.cwiseProduct(tab.c) / 3)), 1e-14);
}

TEST(Tableau, Gauss4MatchesPrintedCoefficients) {
  const auto tab = gsbp::to_tableau(gsbp::build_family_operator(NodeFamily::Gauss, 4));
  EXPECT_NEAR(tab.A(0, 0), 0.0950400941860569, 1e-15);
  EXPECT_LT(gsbp::max_abs(MatD(tab.A - printed::gauss4_A())), 1e-11);
  EXPECT_LT(gsbp::max_abs(VecD(tab.c - printed::gauss4_c())), 1e-15);
  // The printed b sums to 1/2; the printed A and chif give b' = chif' A
  // equal to twice the printed b, which is what the construction yields.
  EXPECT_NEAR(printed::gauss4_b().sum(), 0.5, 1e-15);
  const VecD b_from_printed = printed::gauss4_A().transpose() * printed::gauss4_chif();
  EXPECT_LT(gsbp::max_abs(VecD(b_from_printed - 2.0 * printed::gauss4_b())), 1e-12);
  EXPECT_LT(gsbp::max_abs(VecD(tab.b - 2.0 * printed::gauss4_b())), 1e-15);
}

TEST(Tableau, RadauTwoStageClosedForms) {
  const double third = 1.0 / 3;
  auto iia = gsbp::lookup_scheme("radau-iia-2").tableau;
  MatD a(2, 2);
  a << 5.0 / 12, -1.0 / 12, 0.75, 0.25;
  EXPECT_LT(gsbp::max_abs(MatD(iia.A - a)), 1e-15);
  EXPECT_NEAR(iia.c(0), third, 1e-15);
  auto ia = gsbp::lookup_scheme("radau-ia-2").tableau;
  a << 0.25, -0.25, 0.25, 5.0 / 12;
  EXPECT_LT(gsbp::max_abs(MatD(ia.A - a)), 1e-15);
  EXPECT_NEAR(ia.c(1), 2 * third, 1e-15);
}

TEST(Tableau, GaussCollocationTwoStage) {
  const auto tab = gsbp::lookup_scheme("gauss-collocation-2").tableau;
  const double s = std::sqrt(3.0) / 6;
  MatD a(2, 2);
  a << 0.25, 0.25 - s, 0.25 + s, 0.25;
  EXPECT_LT(gsbp::max_abs(MatD(tab.A - a)), 1e-15);
  EXPECT_FALSE(tab.provenance.from_gsbp);
  const auto mid = gsbp::lookup_scheme("gauss-collocation-1").tableau;
  EXPECT_NEAR(mid.A(0, 0), 0.5, 1e-16);
}

TEST(Tableau, FamilyTableauInvariants) {
  for (auto f : {NodeFamily::Gauss, NodeFamily::LobattoLegendre, NodeFamily::RadauLeft,
                 NodeFamily::RadauRight}) {
    for (int n = 2; n <= 6; ++n) {
      const auto op = gsbp::build_family_operator(f, n);
      const auto tab = gsbp::to_tableau(op);
      SCOPED_TRACE(op.name);
      EXPECT_LT(gsbp::stage_consistency_defect(tab), 1e-12);
      EXPECT_LT(gsbp::max_abs(VecD(tab.b - tab.A.transpose() * op.proj.chif)), 1e-12);
      EXPECT_LT(gsbp::max_abs(VecD(tab.b - op.H.diagonal())), 1e-15);
      const MatD theta = gsbp::theta_from_tableau(tab, op.H, op.proj.chi0);
      EXPECT_LT(gsbp::max_abs(MatD(theta - op.theta)), 1e-10);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) EXPECT_GT(std::abs(tab.c(i) - tab.c(j)), 1e-12);
      EXPECT_EQ(tab.provenance.label(), "gsbp:" + op.name);
    }
  }
}

TEST(Tableau, Dirk3AgainstPrintedCoefficients) {
  const auto s = gsbp::lookup_scheme("dirk3");
  const auto& tab = s.tableau;
  EXPECT_EQ(tab.structure, gsbp::Structure::DiagonallyImplicit);
  const MatD pa = printed::dirk3_A();
  const MatD diff = (tab.A - pa).cwiseAbs();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (i == 2 && j == 2) continue;
      EXPECT_LT(diff(i, j), 1e-11) << i << "," << j;
    }
  // The printed A33 is off by about 7e-11, which is exactly the printed
  // tableau's own stage-consistency defect in row 3.
  const double row3_defect = pa.row(2).sum() - printed::dirk3_c()(2);
  EXPECT_GT(diff(2, 2), 5e-11);
  EXPECT_LT(diff(2, 2), 1e-10);
  EXPECT_NEAR(pa(2, 2) - tab.A(2, 2), row3_defect, 1e-12);
  EXPECT_LT(gsbp::stage_consistency_defect(tab), 1e-12);
  EXPECT_LT(gsbp::max_abs(VecD(tab.b - printed::dirk3_b())), 1e-15);
  EXPECT_LT(gsbp::max_abs(VecD(tab.c - printed::dirk3_c())), 1e-15);
}

TEST(Tableau, Dirk4AgainstPrintedCoefficients) {
  const auto tab = gsbp::lookup_scheme("dirk4").tableau;
  EXPECT_EQ(tab.structure, gsbp::Structure::DiagonallyImplicit);
  EXPECT_LT(gsbp::max_abs(MatD(tab.A - printed::dirk4_A())), 1e-11);
  EXPECT_LT(gsbp::max_abs(VecD(tab.b - printed::dirk4_b())), 1e-15);
}

TEST(Tableau, ImportPrintedDirk4) {
  gsbp::ButcherTableau<double> t;
  t.name = "dirk4-printed";
  t.A = printed::dirk4_A();
  t.b = printed::dirk4_b();
  t.c = printed::dirk4_c();
  const auto doc = gsbp::io::tableau_to_json(t);
  const auto imp = gsbp::io::tableau_from_json(doc);
  EXPECT_EQ(imp.tableau.structure, gsbp::Structure::DiagonallyImplicit);
  EXPECT_FALSE(imp.tableau.provenance.from_gsbp);
  EXPECT_LT(imp.stage_consistency_defect, 1e-12);
}

TEST(Tableau, JsonRoundTripIsByteIdentical) {
  const auto tab = gsbp::lookup_scheme("lobatto-iiic-4").tableau;
  const std::string first = gsbp::io::dump(gsbp::io::tableau_to_json(tab));
  const auto back = gsbp::io::tableau_from_json(gsbp::io::json::parse(first));
  EXPECT_EQ(back.tableau.A, tab.A);
  EXPECT_EQ(back.tableau.b, tab.b);
  EXPECT_EQ(back.tableau.provenance.label(), "gsbp:lobatto-iiic-4");
  EXPECT_EQ(gsbp::io::dump(gsbp::io::tableau_to_json(back.tableau)), first);
}

TEST(Tableau, MalformedTableauDocuments) {
  auto doc = gsbp::io::tableau_to_json(gsbp::lookup_scheme("radau-iia-2").tableau);
  auto bad = doc;
  bad["A"][0] = gsbp::io::json::array({"1"});
  EXPECT_THROW(gsbp::io::tableau_from_json(bad), gsbp::InputError);
  bad = doc;
  bad["b"][0] = "inf";
  EXPECT_THROW(gsbp::io::tableau_from_json(bad), gsbp::InputError);
  bad = doc;
  bad["n"] = 3;
  EXPECT_THROW(gsbp::io::tableau_from_json(bad), gsbp::InputError);
}

TEST(Tableau, RefusesWithoutCondition23) {
  auto op = gsbp::build_family_operator(NodeFamily::LobattoLegendre, 2);
  op.theta = -op.proj.chi0 * op.proj.chi0.transpose();  // Theta + chi0 chi0' = 0
  EXPECT_THROW(gsbp::to_tableau(op), gsbp::NumericError);
}

TEST(Tableau, AbscissaIdentities) {
  const auto lob = gsbp::build_family_operator(NodeFamily::LobattoLegendre, 4);
  const auto rep = gsbp::abscissa_checks(lob, 3);
  EXPECT_TRUE(rep.expected_pass());
  for (const auto& r : rep.rows) {
    EXPECT_LT(r.derivative_residual, 1e-10);
    EXPECT_LT(r.chi0_residual, 1e-10);
    EXPECT_LT(r.chif_residual, 1e-10);
  }
  const auto gauss = gsbp::build_family_operator(NodeFamily::Gauss, 4);
  const auto g = gsbp::abscissa_checks(gauss, 4);
  EXPECT_TRUE(g.expected_pass());
  EXPECT_FALSE(g.rows[4].derivative_expected);
  EXPECT_GT(g.rows[4].derivative_residual, 1e-3);
  for (const char* name : {"dirk3", "dirk4", "radau-ia-5"}) {
    const auto r0 = gsbp::abscissa_checks(*gsbp::lookup_scheme(name).op, 0).rows[0];
    EXPECT_LT(r0.derivative_residual, 1e-10) << name;
    EXPECT_LT(r0.chi0_residual, 1e-12) << name;
    EXPECT_LT(r0.chif_residual, 1e-12) << name;
  }
}

}  // namespace
