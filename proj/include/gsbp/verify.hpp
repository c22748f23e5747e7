#ifndef GSBP_VERIFY_HPP_
#define GSBP_VERIFY_HPP_

// Order and stability certification of Butcher tableaus.

#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsbp/io.hpp"
#include "gsbp/operator.hpp"
#include "gsbp/rooted_trees.hpp"
#include "gsbp/tableau.hpp"

namespace gsbp {

inline constexpr double kSimplifyingTol = 1e-10;
inline constexpr double kOrderConditionTol = 1e-9;
inline constexpr double kRinfTol = 1e-10;
inline constexpr double kUnitCircleTol = 1e-10;
inline constexpr double kBnEigTol = -1e-10;
inline constexpr double kWeightTol = -1e-13;
inline constexpr int kMaxTreeOrder = 8;

// ------------------------------------------------------------ simplifying

struct SimplifyingReport {
  int B = 0, C = 0, D = 0;
  int max = 0;
  std::vector<double> b_residuals, c_residuals, d_residuals;  ///< index j-1

  /// Order implied by B(p), C(q), D(xi): min(B, 2C+2, C+D+1).
  int implied_order() const { return std::min({B, 2 * C + 2, C + D + 1}); }
};

inline SimplifyingReport simplifying_conditions(const ButcherTableau<double>& tab, int max = -1) {
  const Eigen::Index n = tab.stages();
  if (max < 0) max = 2 * static_cast<int>(n) + 2;
  SimplifyingReport rep;
  rep.max = max;
  const VecD& c = tab.c;
  const MatD Bd = tab.b.asDiagonal();
  bool b_ok = true, c_ok = true, d_ok = true;
  for (int j = 1; j <= max; ++j) {
    const VecD cj1 = monomial(c, j - 1);
    const VecD cj = monomial(c, j);
    const double rb = std::abs(tab.b.dot(cj1) - 1.0 / j);
    const double rc = max_abs(VecD(tab.A * cj1 - cj / j));
    const double rd = max_abs(VecD(tab.A.transpose() * (Bd * cj1) - Bd * (VecD::Ones(n) - cj) / j));
    rep.b_residuals.push_back(rb);
    rep.c_residuals.push_back(rc);
    rep.d_residuals.push_back(rd);
    b_ok = b_ok && rb < kSimplifyingTol;
    c_ok = c_ok && rc < kSimplifyingTol;
    d_ok = d_ok && rd < kSimplifyingTol;
    if (b_ok) rep.B = j;
    if (c_ok) rep.C = j;
    if (d_ok) rep.D = j;
  }
  return rep;
}

// ------------------------------------------------------------ rooted trees

struct TreeCondition {
  int order = 0;
  std::string tree;
  double phi = 0.0;
  double inv_gamma = 0.0;
  double residual = 0.0;
};

struct OrderReport {
  int pmax = 0;
  int p_full = 0;
  int first_failing_order = 0;  ///< 0 when all orders up to pmax pass
  std::vector<int> tree_counts;  ///< index p-1
  std::vector<double> max_residual;  ///< per order, index p-1
  std::vector<TreeCondition> conditions;
  SimplifyingReport simplifying;
};

inline OrderReport full_order_conditions(const ButcherTableau<double>& tab, int pmax = kMaxTreeOrder) {
  if (pmax < 1 || pmax > kMaxTreeOrder)
    throw InputError("order conditions are available for 1 <= pmax <= " +
                     std::to_string(kMaxTreeOrder));
  const Forest forest(pmax);
  const auto g = stage_weights<double>(forest, tab.A);
  OrderReport rep;
  rep.pmax = pmax;
  bool ok = true;
  for (int p = 1; p <= pmax; ++p) {
    rep.tree_counts.push_back(forest.count(p));
    double worst = 0.0;
    for (int i = forest.begin_of(p); i < forest.end_of(p); ++i) {
      TreeCondition tc;
      tc.order = p;
      tc.tree = forest[i].label;
      tc.phi = tab.b.dot(g[i]);
      tc.inv_gamma = 1.0 / forest[i].gamma;
      tc.residual = std::abs(tc.phi - tc.inv_gamma);
      worst = std::max(worst, tc.residual);
      rep.conditions.push_back(std::move(tc));
    }
    rep.max_residual.push_back(worst);
    if (ok && worst < kOrderConditionTol) {
      rep.p_full = p;
    } else if (ok) {
      ok = false;
      rep.first_failing_order = p;
    }
  }
  rep.simplifying = simplifying_conditions(tab);
  return rep;
}

// --------------------------------------------------------------- stability

using cplx = std::complex<double>;

/// R(z) = 1 + z b'(I - zA)^{-1} 1.
inline cplx stability_function(const ButcherTableau<double>& tab, cplx z) {
  using CMat = Eigen::MatrixXcd;
  using CVec = Eigen::VectorXcd;
  const Eigen::Index n = tab.stages();
  const CMat M = CMat::Identity(n, n) - z * tab.A.cast<cplx>();
  Eigen::FullPivLU<CMat> lu(M);
  if (!lu.isInvertible()) throw NumericError("I - zA is singular: z is a pole of R");
  const CVec x = lu.solve(CVec::Ones(n));
  return 1.0 + z * tab.b.cast<cplx>().dot(x);
}

/// GSBP form chif'[I - z (Theta + chi0 chi0')^{-1} H / h]^{-1} 1.
inline cplx stability_function(const GsbpOperator<double>& op, cplx z) {
  using CMat = Eigen::MatrixXcd;
  using CVec = Eigen::VectorXcd;
  const Eigen::Index n = op.size();
  const MatD PinvH = op.penalized_theta().fullPivLu().solve(op.H) / op.length();
  Eigen::FullPivLU<CMat> lu(CMat(CMat::Identity(n, n) - z * PinvH.cast<cplx>()));
  if (!lu.isInvertible()) throw NumericError("resolvent is singular: z is a pole of R");
  const CVec x = lu.solve(CVec::Ones(n));
  return op.proj.chif.cast<cplx>().dot(x);
}

struct StabilityReport {
  bool a_invertible = false;
  double r_inf = std::numeric_limits<double>::quiet_NaN();  ///< 1 - b'A^{-1}1
  // A-stability: sampled |R(iy)| on a log grid plus a pole location check.
  double max_abs_r_imag = 0.0;
  double worst_y = 0.0;
  int samples = 0;
  bool poles_in_right_half_plane = true;  ///< all poles 1/mu(A) have Re > 0
  bool a_stable = false;
  bool l_stable = false;
  // BN / algebraic stability
  bool bn_defined = false;
  double b_min = 0.0;
  double m_min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
  MatD m_hat;
  bool bn_stable = false;
  std::string bn_note;
  // GSBP cross checks, present when an operator is supplied
  std::optional<double> gsbp_m_residual;           ///< |W H^-1 P + P' H^-1 W - chif chif' - M|
  std::optional<double> m_vs_chi0_residual;        ///< |M - chi0 chi0'| (diagonal norms)
  std::optional<double> gsbp_resolvent_residual;   ///< max |R_tab - R_gsbp| on samples
  std::string a_stability_method =
      "sampled |R(iy)| on a log grid y in [1e-3, 1e6] plus pole check; not a proof";
};

inline std::vector<double> imaginary_axis_grid(int per_decade = 40) {
  std::vector<double> ys{0.0};
  for (int k = -3 * per_decade; k <= 6 * per_decade; ++k)
    ys.push_back(std::pow(10.0, static_cast<double>(k) / per_decade));
  return ys;
}

inline StabilityReport stability_report(const ButcherTableau<double>& tab,
                                        const GsbpOperator<double>* op = nullptr) {
  StabilityReport rep;
  const Eigen::Index n = tab.stages();
  Eigen::FullPivLU<MatD> lu(tab.A);
  rep.a_invertible = lu.isInvertible();
  MatD Ainv;
  if (rep.a_invertible) {
    Ainv = lu.inverse();
    rep.r_inf = 1.0 - tab.b.dot(Ainv * VecD::Ones(n));
  }

  // poles of R are 1/mu for eigenvalues mu != 0 of A
  Eigen::EigenSolver<MatD> es(tab.A, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx mu = es.eigenvalues()(i);
    if (std::abs(mu) > 1e-14 && !(mu.real() > 0.0)) rep.poles_in_right_half_plane = false;
  }

  double cross = 0.0;
  for (double y : imaginary_axis_grid()) {
    cplx r;
    try {
      r = stability_function(tab, cplx(0.0, y));
    } catch (const NumericError&) {
      rep.max_abs_r_imag = std::numeric_limits<double>::infinity();
      rep.worst_y = y;
      continue;
    }
    ++rep.samples;
    if (std::abs(r) > rep.max_abs_r_imag) {
      rep.max_abs_r_imag = std::abs(r);
      rep.worst_y = y;
    }
    if (op) cross = std::max(cross, std::abs(r - stability_function(*op, cplx(0.0, y))));
  }
  rep.a_stable = rep.poles_in_right_half_plane && rep.max_abs_r_imag <= 1.0 + kUnitCircleTol;
  rep.l_stable = rep.a_stable && rep.a_invertible && std::abs(rep.r_inf) < kRinfTol;
  if (op) rep.gsbp_resolvent_residual = cross;

  rep.b_min = tab.b.minCoeff();
  if (!rep.a_invertible) {
    rep.bn_note = "A is singular: the BN criterion needs an invertible A";
  } else {
    rep.bn_defined = true;
    const MatD Bd = tab.b.asDiagonal();
    const VecD bA = Ainv.transpose() * tab.b;
    rep.m_hat = Bd * Ainv + Ainv.transpose() * Bd - bA * bA.transpose();
    const MatD sym = (rep.m_hat + rep.m_hat.transpose()) / 2.0;
    Eigen::SelfAdjointEigenSolver<MatD> ses(sym, Eigen::EigenvaluesOnly);
    rep.m_min_eigenvalue = ses.eigenvalues()(0);
    rep.bn_stable = rep.b_min >= kWeightTol && rep.m_min_eigenvalue >= kBnEigTol;
    rep.bn_note = "non-confluent abscissa: BN, algebraic, B and AN stability coincide";
    if (op) {
      const MatD P = op->penalized_theta();
      const MatD W = VecD(op->H * VecD::Ones(n)).asDiagonal();
      const MatD HinvP = solve_norm<double>(op->H, op->norm_kind, P);
      const MatD G = W * HinvP + HinvP.transpose() * W - op->proj.chif * op->proj.chif.transpose();
      rep.gsbp_m_residual = max_abs(MatD(G - rep.m_hat));
      if (op->norm_kind == NormKind::Diagonal)
        rep.m_vs_chi0_residual =
            max_abs(MatD(rep.m_hat - op->proj.chi0 * op->proj.chi0.transpose()));
    }
  }
  return rep;
}

// ------------------------------------------------------------------ report

inline io::json order_to_json(const OrderReport& rep) {
  io::json j;
  j["p_full"] = rep.p_full;
  j["pmax"] = rep.pmax;
  j["first_failing_order"] = rep.first_failing_order;
  j["B"] = rep.simplifying.B;
  j["C"] = rep.simplifying.C;
  j["D"] = rep.simplifying.D;
  j["implied_order"] = rep.simplifying.implied_order();
  j["tree_counts"] = rep.tree_counts;
  io::json conds = io::json::array();
  for (const auto& c : rep.conditions)
    conds.push_back({{"order", c.order},
                     {"tree", c.tree},
                     {"phi", format_double(c.phi)},
                     {"inv_gamma", format_double(c.inv_gamma)},
                     {"residual", format_double(c.residual)}});
  j["conditions"] = std::move(conds);
  io::json simp;
  simp["B"] = io::json::array();
  simp["C"] = io::json::array();
  simp["D"] = io::json::array();
  for (std::size_t k = 0; k < rep.simplifying.b_residuals.size(); ++k) {
    simp["B"].push_back(format_double(rep.simplifying.b_residuals[k]));
    simp["C"].push_back(format_double(rep.simplifying.c_residuals[k]));
    simp["D"].push_back(format_double(rep.simplifying.d_residuals[k]));
  }
  j["simplifying_residuals"] = std::move(simp);
  return j;
}

inline io::json stability_to_json(const StabilityReport& rep) {
  io::json j;
  j["R_inf"] = rep.a_invertible ? io::json(format_double(rep.r_inf)) : io::json(nullptr);
  j["a_stable"] = rep.a_stable;
  j["max_abs_R_imag_axis"] = format_double(rep.max_abs_r_imag);
  j["samples"] = rep.samples;
  j["poles_in_right_half_plane"] = rep.poles_in_right_half_plane;
  j["a_stability_method"] = rep.a_stability_method;
  j["l_stable"] = rep.l_stable;
  j["bn_defined"] = rep.bn_defined;
  j["bn_stable"] = rep.bn_stable;
  j["b_min"] = format_double(rep.b_min);
  if (rep.bn_defined) {
    j["m_min_eigenvalue"] = format_double(rep.m_min_eigenvalue);
    j["m_hat"] = io::write_matrix(rep.m_hat);
  }
  j["bn_note"] = rep.bn_note;
  if (rep.gsbp_m_residual) j["gsbp_m_residual"] = format_double(*rep.gsbp_m_residual);
  if (rep.m_vs_chi0_residual) j["m_vs_chi0_residual"] = format_double(*rep.m_vs_chi0_residual);
  if (rep.gsbp_resolvent_residual)
    j["gsbp_resolvent_residual"] = format_double(*rep.gsbp_resolvent_residual);
  return j;
}

inline io::json conditions_to_json(const ConditionReport& rep) {
  io::json j;
  j["passes"] = rep.passes();
  j["q"] = rep.q_measured;
  j["tau"] = rep.tau_measured;
  j["r"] = rep.r_measured;
  j["h_spd"] = rep.h_spd;
  j["h_min_eigenvalue"] = format_double(rep.h_min_eigenvalue);
  j["boundary_residual"] = format_double(rep.e_residual);
  j["sbp_residual"] = format_double(rep.sbp_residual);
  j["boundary_decomposition"] = rep.condition22;
  j["penalized_eigenvalues_positive"] = rep.condition23;
  io::json sig = io::json::array();
  for (const auto& s : rep.rinv_eigs)
    sig.push_back({{"sigma", format_double(s.sigma)},
                   {"min_real", format_double(s.min_real)},
                   {"positive", s.positive}});
  j["sigma_samples"] = std::move(sig);
  j["lemma_chif_residual"] = format_double(rep.lemma_chif_residual);
  j["lemma_chi0_residual"] = format_double(rep.lemma_chi0_residual);
  return j;
}

inline io::json certification_to_json(const OrderReport& order, const StabilityReport& stab) {
  io::json j;
  j["order"] = order_to_json(order);
  j["stability"] = stability_to_json(stab);
  return j;
}

}  // namespace gsbp

#endif  // GSBP_VERIFY_HPP_
