#ifndef GSBP_TABLEAU_HPP_
#define GSBP_TABLEAU_HPP_

#include <string>
#include <vector>

#include "gsbp/operator.hpp"
#include "gsbp/types.hpp"

namespace gsbp {

enum class Structure { FullyImplicit, DiagonallyImplicit, Explicit };

inline std::string_view to_string(Structure s) {
  switch (s) {
    case Structure::FullyImplicit: return "fully-implicit";
    case Structure::DiagonallyImplicit: return "diagonally-implicit";
    case Structure::Explicit: return "explicit";
  }
  return "fully-implicit";
}

inline Structure parse_structure(std::string_view s) {
  if (s == "fully-implicit") return Structure::FullyImplicit;
  if (s == "diagonally-implicit") return Structure::DiagonallyImplicit;
  if (s == "explicit") return Structure::Explicit;
  throw InputError("unknown tableau structure '" + std::string(s) + "'");
}

/// Zero test for structural (triangular) entries.
inline constexpr double kStructureTol = 1e-12;

struct Provenance {
  bool from_gsbp = false;
  std::string source;  ///< operator name when from_gsbp

  std::string label() const { return from_gsbp ? "gsbp:" + source : "imported"; }
};

/// Runge-Kutta coefficients (A, b, c) on the reference step h = 1.
template <class Scalar = double>
struct ButcherTableau {
  std::string name;
  Mat<Scalar> A;
  Vec<Scalar> b;
  Vec<Scalar> c;
  Structure structure = Structure::FullyImplicit;
  Provenance provenance;

  Eigen::Index stages() const { return b.size(); }
};

template <class Scalar>
Structure detect_structure(const Mat<Scalar>& A) {
  double upper = 0.0, diag = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = i; j < A.cols(); ++j) {
      using std::abs;
      const double v = to_double(abs(A(i, j)));
      if (j > i) upper = std::max(upper, v);
      else diag = std::max(diag, v);
    }
  if (upper >= kStructureTol) return Structure::FullyImplicit;
  return diag < kStructureTol ? Structure::Explicit : Structure::DiagonallyImplicit;
}

/// max |A 1 - c|
template <class Scalar>
double stage_consistency_defect(const ButcherTableau<Scalar>& tab) {
  return max_abs(Vec<Scalar>(tab.A.rowwise().sum() - tab.c));
}

/// RK form of a GSBP time-marching method on a unit step:
/// A = (Theta + chi0 chi0')^{-1} H / h, b' = 1' H / h, c = (t - t0) / h.
template <class Scalar>
ButcherTableau<Scalar> to_tableau(const GsbpOperator<Scalar>& op) {
  const Mat<Scalar> P = op.penalized_theta();
  const auto eig = eigenvalues_of<Scalar>(P);
  for (const auto& e : eig)
    if (!(e.real() > 0.0))
      throw NumericError(op.name + ": Theta + chi0 chi0' has an eigenvalue with non-positive "
                         "real part (Condition 2.3 at sigma = -1)");
  Eigen::FullPivLU<Mat<Scalar>> lu(P);
  if (!lu.isInvertible()) throw NumericError(op.name + ": Theta + chi0 chi0' is singular");
  const Scalar h = op.length();

  ButcherTableau<Scalar> tab;
  tab.name = op.name;
  tab.A = lu.solve(op.H) / h;
  tab.b = op.H.transpose() * Vec<Scalar>::Ones(op.size()) / h;
  tab.c = op.abscissa();
  tab.provenance = {true, op.name};

  // A^{-1} = h H^{-1} (Theta + chi0 chi0'); lower triangular means DIRK
  const Mat<Scalar> inv = op.H.fullPivLu().solve(P);
  double upper = 0.0;
  for (Eigen::Index i = 0; i < inv.rows(); ++i)
    for (Eigen::Index j = i + 1; j < inv.cols(); ++j) {
      using std::abs;
      upper = std::max(upper, to_double(abs(inv(i, j))));
    }
  tab.structure = upper < kStructureTol ? Structure::DiagonallyImplicit : Structure::FullyImplicit;
  // A is then exactly lower triangular; drop the rounding residue above the diagonal
  if (tab.structure == Structure::DiagonallyImplicit)
    tab.A = Mat<Scalar>(tab.A.template triangularView<Eigen::Lower>());
  return tab;
}

/// Theta recovered from a GSBP-derived tableau: h H A^{-1} - chi0 chi0'.
template <class Scalar>
Mat<Scalar> theta_from_tableau(const ButcherTableau<Scalar>& tab, const Mat<Scalar>& H,
                               const Vec<Scalar>& chi0, Scalar h = Scalar(1)) {
  const Mat<Scalar> Ainv = tab.A.fullPivLu().inverse();
  return h * H * Ainv - chi0 * chi0.transpose();
}

/// Classical collocation method on abscissa c (Gauss nodes give the
/// order-2n Butcher/Kuntzmann schemes). Not a GSBP method.
template <class Scalar = double>
ButcherTableau<Scalar> collocation_tableau(const Vec<Scalar>& c, std::string name) {
  validate_nodes(c);
  const int n = static_cast<int>(c.size());
  const Mat<Scalar> V = legendre_vandermonde<Scalar>(c, n);
  // integral of the shifted Legendre P_k from 0 to x
  auto integral = [&](const Scalar& x, int k) -> Scalar {
    if (k == 0) return x;
    std::vector<Scalar> p, dp;
    detail::legendre_table<Scalar>(Scalar(2) * x - Scalar(1), k + 1, p, dp);
    return (p[k + 1] - p[k - 1]) / Scalar(2 * (2 * k + 1));
  };
  Mat<Scalar> I(n, n);
  Vec<Scalar> total(n);
  for (int k = 0; k < n; ++k) {
    total(k) = integral(Scalar(1), k);
    for (int i = 0; i < n; ++i) I(i, k) = integral(c(i), k);
  }
  Eigen::FullPivLU<Mat<Scalar>> lu(Mat<Scalar>(V.transpose()));
  ButcherTableau<Scalar> tab;
  tab.name = std::move(name);
  // A V = I  ->  A = I V^{-1};  b' V = total'
  tab.A = lu.solve(Mat<Scalar>(I.transpose())).transpose();
  tab.b = lu.solve(total);
  tab.c = c;
  tab.structure = detect_structure(tab.A);
  tab.provenance = {false, {}};
  return tab;
}

/// Appendix identities of a GSBP operator on its abscissa c:
/// D c^p = (p/h) c^{p-1}, chi0' c^p = [p == 0], chif' c^p = 1.
struct AbscissaRow {
  int p = 0;
  double derivative_residual = 0.0;
  double chi0_residual = 0.0;
  double chif_residual = 0.0;
  bool derivative_expected = false;  ///< p <= q
  bool projection_expected = false;  ///< p <= r
};

struct AbscissaReport {
  std::vector<AbscissaRow> rows;
  double tol = 1e-10;

  /// Every identity that the operator's orders guarantee holds.
  bool expected_pass() const {
    for (const auto& r : rows) {
      if (r.derivative_expected && r.derivative_residual >= tol) return false;
      if (r.projection_expected && std::max(r.chi0_residual, r.chif_residual) >= tol) return false;
    }
    return true;
  }
};

template <class Scalar>
AbscissaReport abscissa_checks(const GsbpOperator<Scalar>& op, int pmax) {
  AbscissaReport rep;
  const Vec<Scalar> c = op.abscissa();
  const Scalar h = op.length();
  for (int p = 0; p <= pmax; ++p) {
    AbscissaRow row;
    row.p = p;
    const Vec<Scalar> cp = monomial(c, p);
    Vec<Scalar> expect = Vec<Scalar>::Zero(c.size());
    if (p > 0) expect = (Scalar(p) / h) * monomial(c, p - 1);
    row.derivative_residual = max_abs(Vec<Scalar>(op.D * cp - expect));
    using std::abs;
    row.chi0_residual = to_double(abs(op.proj.chi0.dot(cp) - (p == 0 ? Scalar(1) : Scalar(0))));
    row.chif_residual = to_double(abs(op.proj.chif.dot(cp) - Scalar(1)));
    row.derivative_expected = p <= op.q;
    row.projection_expected = p <= op.proj.r;
    rep.rows.push_back(row);
  }
  return rep;
}

template <class To, class From>
ButcherTableau<To> cast_tableau(const ButcherTableau<From>& tab) {
  ButcherTableau<To> out;
  out.name = tab.name;
  out.A = cast_mat<To>(tab.A);
  out.b = cast_vec<To>(tab.b);
  out.c = cast_vec<To>(tab.c);
  out.structure = tab.structure;
  out.provenance = tab.provenance;
  return out;
}

}  // namespace gsbp

#endif  // GSBP_TABLEAU_HPP_
