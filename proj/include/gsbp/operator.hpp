#ifndef GSBP_OPERATOR_HPP_
#define GSBP_OPERATOR_HPP_

#include <algorithm>
#include <array>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "gsbp/nodes.hpp"
#include "gsbp/types.hpp"

namespace gsbp {

enum class NormKind { Diagonal, Dense };

inline std::string_view to_string(NormKind k) {
  return k == NormKind::Diagonal ? "diagonal" : "dense";
}

/// Boundary projections: chi0' t^j = t0^j and chif' t^j = tf^j for j <= r.
template <class Scalar = double>
struct ProjectionPair {
  Vec<Scalar> chi0;
  Vec<Scalar> chif;
  int r = 0;
};

/// First-derivative operator D = H^{-1} Theta on the nodes t of [t0, tf],
/// with Theta + Theta' = chif chif' - chi0 chi0'.
template <class Scalar = double>
struct GsbpOperator {
  std::string name;
  NodeFamily family = NodeFamily::Custom;
  Vec<Scalar> t;
  Scalar t0 = Scalar(0);
  Scalar tf = Scalar(1);
  Mat<Scalar> H;
  Mat<Scalar> theta;
  Mat<Scalar> D;
  ProjectionPair<Scalar> proj;
  int q = 0;
  int tau = 0;
  int rho = 0;
  NormKind norm_kind = NormKind::Diagonal;

  Eigen::Index size() const { return t.size(); }
  Scalar length() const { return tf - t0; }
  /// Nodes mapped to [0,1].
  Vec<Scalar> abscissa() const { return (t.array() - t0) / (tf - t0); }
  /// Boundary operator E = chif chif' - chi0 chi0'.
  Mat<Scalar> boundary() const {
    return proj.chif * proj.chif.transpose() - proj.chi0 * proj.chi0.transpose();
  }
  /// Theta + chi0 chi0', the matrix whose inverse yields the RK coefficients.
  Mat<Scalar> penalized_theta() const { return theta + proj.chi0 * proj.chi0.transpose(); }
};

/// Thrown when the accuracy system for Theta_A has no exact solution.
class AccuracySystemError : public NumericError {
 public:
  AccuracySystemError(const std::string& what, double residual)
      : NumericError(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// H^{-1} M, with a row scaling when H is diagonal.
template <class Scalar>
Mat<Scalar> solve_norm(const Mat<Scalar>& H, NormKind kind, const Mat<Scalar>& M) {
  if (kind == NormKind::Diagonal) {
    Mat<Scalar> out = M;
    for (Eigen::Index i = 0; i < M.rows(); ++i) out.row(i) /= H(i, i);
    return out;
  }
  Eigen::FullPivLU<Mat<Scalar>> lu(H);
  if (!lu.isInvertible()) throw InputError("norm H is singular");
  return lu.solve(M);
}

/// Residual below which a monomial derivative identity counts as exact.
inline constexpr double kDerivativeExactTol = 1e-8;
/// Residual gate for the least-squares Theta_A solve.
inline constexpr double kAccuracySystemTol = 1e-10;
/// Condition 2.2 defect allowed when accepting an operator.
inline constexpr double kBoundaryTol = 1e-12;
/// Penalty values at which Theta - sigma chi0 chi0' is sampled.
inline constexpr std::array<double, 4> kSampledSigmas{-1.0, -0.75, -2.0, -10.0};

/// Projection vectors of order r on reference nodes t in [0,1].
template <class Scalar = double>
ProjectionPair<Scalar> build_projection(const Vec<Scalar>& t, int r) {
  const int n = static_cast<int>(t.size());
  if (r < 0 || r > n - 1) throw InputError("projection order must satisfy 0 <= r <= n-1");
  validate_nodes(t);
  const Mat<Scalar> V = legendre_vandermonde<Scalar>(t, r + 1);
  Vec<Scalar> at0(r + 1), at1(r + 1);
  for (int k = 0; k <= r; ++k) {
    at0(k) = (k % 2 == 0) ? Scalar(1) : Scalar(-1);  // P_k(-1)
    at1(k) = Scalar(1);                                // P_k(1)
  }
  ProjectionPair<Scalar> out;
  out.r = r;
  auto solve = [&](const Vec<Scalar>& rhs, const Scalar& endpoint) -> Vec<Scalar> {
    if (r == n - 1) {
      for (int i = 0; i < n; ++i)
        if (t(i) == endpoint) {
          Vec<Scalar> e = Vec<Scalar>::Zero(n);
          e(i) = Scalar(1);
          return e;
        }
      Eigen::FullPivLU<Mat<Scalar>> lu(V.transpose());
      if (!lu.isInvertible()) throw NumericError("singular Vandermonde: duplicated nodes");
      return lu.solve(rhs);
    }
    // minimum-norm solution of the underdetermined moment system
    return V.transpose().completeOrthogonalDecomposition().solve(rhs);
  };
  out.chi0 = solve(at0, Scalar(0));
  out.chif = solve(at1, Scalar(1));
  return out;
}

/// Largest j such that h D c^i = i c^{i-1} for all i <= j (c = abscissa).
template <class Scalar>
int measure_derivative_order(const GsbpOperator<Scalar>& op, int jmax,
                             double tol = kDerivativeExactTol) {
  const Vec<Scalar> c = op.abscissa();
  const Scalar h = op.length();
  int q = -1;
  for (int j = 0; j <= jmax; ++j) {
    Vec<Scalar> expect = Vec<Scalar>::Zero(c.size());
    if (j > 0) expect = Scalar(j) * monomial(c, j - 1);
    const Vec<Scalar> r = h * (op.D * monomial(c, j)) - expect;
    if (max_abs(r) >= tol) break;
    q = j;
  }
  return q;
}

/// Largest j such that both projections reproduce endpoint monomials up to j.
template <class Scalar>
int measure_projection_order(const GsbpOperator<Scalar>& op, int jmax,
                             double tol = kDerivativeExactTol) {
  const Vec<Scalar> c = op.abscissa();
  int r = -1;
  for (int j = 0; j <= jmax; ++j) {
    const Vec<Scalar> cj = monomial(c, j);
    using std::abs;
    const double e0 = to_double(abs(op.proj.chi0.dot(cj) - (j == 0 ? Scalar(1) : Scalar(0))));
    const double e1 = to_double(abs(op.proj.chif.dot(cj) - Scalar(1)));
    if (std::max(e0, e1) >= tol) break;
    r = j;
  }
  return r;
}

template <class Scalar>
int measure_norm_quadrature_order(const GsbpOperator<Scalar>& op, int jmax) {
  const Vec<Scalar> w = op.H * Vec<Scalar>::Ones(op.size()) / op.length();
  return measure_quadrature_order<Scalar>(op.abscissa(), w, jmax);
}

/// rho = min(2q+1, tau) for diagonal norms; the bound min(q+1, tau) otherwise.
template <class Scalar>
int norm_accuracy(const GsbpOperator<Scalar>& op) {
  if (op.norm_kind == NormKind::Diagonal) return std::min(2 * op.q + 1, op.tau);
  return std::min(op.q + 1, op.tau);
}

/// Diagonal-norm operator with H = diag(w), Theta_S = E/2 and the
/// antisymmetric Theta_A fitted to the accuracy conditions up to degree q.
template <class Scalar = double>
GsbpOperator<Scalar> build_diag_norm_operator(const NodeSet<Scalar>& nodes,
                                              const QuadratureRule<Scalar>& quad, int q) {
  const int n = static_cast<int>(nodes.size());
  if (quad.weights.size() != n) throw InputError("weights and nodes differ in length");
  if ((quad.weights.array() <= Scalar(0)).any())
    throw InputError("diagonal-norm construction refused: non-positive quadrature weights");
  if (q < 1) throw InputError("derivative order q must be >= 1");
  if (quad.tau < 2 * q)
    throw InputError("diagonal-norm construction needs tau >= 2q (tau = " +
                     std::to_string(quad.tau) + ", q = " + std::to_string(q) + ")");
  if (q > n - 1) {
    throw AccuracySystemError("q = " + std::to_string(q) + " too large for n = " +
                                  std::to_string(n),
                              std::numeric_limits<double>::infinity());
  }

  GsbpOperator<Scalar> op;
  op.family = nodes.family;
  op.name = std::string(to_string(nodes.family)) + "-" + std::to_string(n);
  op.t = nodes.nodes;
  op.H = quad.weights.asDiagonal();
  op.proj = build_projection<Scalar>(nodes.nodes, n - 1);
  op.norm_kind = NormKind::Diagonal;

  const Mat<Scalar> theta_s = op.boundary() / Scalar(2);
  const Mat<Scalar> V = legendre_vandermonde<Scalar>(nodes.nodes, q + 1);
  const Mat<Scalar> dV = legendre_vandermonde_derivative<Scalar>(nodes.nodes, q + 1);
  const Mat<Scalar> target = op.H * dV - theta_s * V;

  // unknowns: upper-triangle entries of Theta_A, row-major
  const int unknowns = n * (n - 1) / 2;
  std::vector<int> index(n * n, -1);
  for (int i = 0, k = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) index[i * n + j] = k++;
  Mat<Scalar> M = Mat<Scalar>::Zero(n * (q + 1), unknowns);
  Vec<Scalar> rhs(n * (q + 1));
  for (int col = 0; col <= q; ++col)
    for (int i = 0; i < n; ++i) {
      const int row = col * n + i;
      rhs(row) = target(i, col);
      for (int j = 0; j < n; ++j) {
        if (i < j) M(row, index[i * n + j]) += V(j, col);
        if (i > j) M(row, index[j * n + i]) -= V(j, col);
      }
    }
  Vec<Scalar> x = Vec<Scalar>::Zero(unknowns);
  if (unknowns > 0) x = M.completeOrthogonalDecomposition().solve(rhs);
  const double residual = unknowns > 0 ? max_abs(Vec<Scalar>(M * x - rhs)) : max_abs(rhs);
  if (residual > kAccuracySystemTol) {
    throw AccuracySystemError("accuracy system infeasible for q = " + std::to_string(q) +
                                  " on " + op.name + " (residual " + format_double(residual) + ")",
                              residual);
  }
  Mat<Scalar> theta_a = Mat<Scalar>::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      theta_a(i, j) = x(index[i * n + j]);
      theta_a(j, i) = -x(index[i * n + j]);
    }
  op.theta = theta_s + theta_a;
  op.D = solve_norm<Scalar>(op.H, NormKind::Diagonal, op.theta);
  op.q = q;
  op.tau = quad.tau;
  op.rho = norm_accuracy(op);
  return op;
}

/// Convenience: nodes, weights and the maximal-order operator (q = n-1
/// for Gauss/Radau/Lobatto, q = tau/2 capped at n-1 otherwise).
template <class Scalar = double>
GsbpOperator<Scalar> build_family_operator(NodeFamily family, int n, int q = -1) {
  const auto nw = build_nodes<Scalar>(family, n);
  if (q < 0) q = std::min(n - 1, nw.rule.tau / 2);
  return build_diag_norm_operator<Scalar>(nw.nodes, nw.rule, q);
}

struct SigmaSample {
  double sigma = 0.0;
  std::vector<std::complex<double>> eigenvalues;
  double min_real = 0.0;
  bool positive = false;
};

/// Measured properties of an operator; always produced, pass/fail inside.
struct ConditionReport {
  double e_residual = 0.0;    ///< max |Theta + Theta' - E|
  double sbp_residual = 0.0;  ///< max |HD + D'H - E|
  double h_symmetry = 0.0;
  double h_min_eigenvalue = 0.0;
  std::vector<SigmaSample> rinv_eigs;
  int q_measured = 0;
  int tau_measured = 0;
  int r_measured = 0;
  double lemma_chif_residual = 0.0;  ///< chif' (Theta + chi0 chi0')^{-1} = 1'
  double lemma_chi0_residual = 0.0;  ///< (Theta + chi0 chi0')^{-1} chi0 = 1
  bool condition22 = false;
  bool condition23 = false;
  bool h_spd = false;

  bool passes() const { return condition22 && condition23 && h_spd && q_measured >= 1; }
};

template <class Scalar>
std::vector<std::complex<double>> eigenvalues_of(const Mat<Scalar>& m) {
  Eigen::EigenSolver<Mat<Scalar>> es(m, false);
  std::vector<std::complex<double>> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    out.emplace_back(to_double(es.eigenvalues()(i).real()), to_double(es.eigenvalues()(i).imag()));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return out;
}

template <class Scalar>
ConditionReport certify_operator(const GsbpOperator<Scalar>& op) {
  const int n = static_cast<int>(op.size());
  ConditionReport rep;
  rep.e_residual = max_abs(Mat<Scalar>(op.theta + op.theta.transpose() - op.boundary()));
  rep.sbp_residual =
      max_abs(Mat<Scalar>(op.H * op.D + op.D.transpose() * op.H - op.boundary()));
  rep.h_symmetry = max_abs(Mat<Scalar>(op.H - op.H.transpose()));
  {
    const Mat<Scalar> hs = (op.H + op.H.transpose()) / Scalar(2);
    Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(hs, Eigen::EigenvaluesOnly);
    rep.h_min_eigenvalue = to_double(es.eigenvalues()(0));
  }
  rep.h_spd = rep.h_symmetry < kBoundaryTol && rep.h_min_eigenvalue > 0.0;
  rep.condition22 = rep.e_residual < kBoundaryTol;

  rep.condition23 = true;
  const Mat<Scalar> c0c0 = op.proj.chi0 * op.proj.chi0.transpose();
  for (double sigma : kSampledSigmas) {
    SigmaSample s;
    s.sigma = sigma;
    s.eigenvalues = eigenvalues_of<Scalar>(Mat<Scalar>(op.theta - Scalar(sigma) * c0c0));
    s.min_real = s.eigenvalues.front().real();
    for (const auto& e : s.eigenvalues) s.min_real = std::min(s.min_real, e.real());
    s.positive = s.min_real > 0.0;
    rep.condition23 = rep.condition23 && s.positive;
    rep.rinv_eigs.push_back(std::move(s));
  }

  rep.q_measured = std::max(0, measure_derivative_order(op, n + 1));
  rep.tau_measured = measure_norm_quadrature_order(op, 2 * n + 2);
  rep.r_measured = std::max(0, measure_projection_order(op, n - 1));

  Eigen::FullPivLU<Mat<Scalar>> lu(op.penalized_theta());
  if (lu.isInvertible()) {
    const Vec<Scalar> ones = Vec<Scalar>::Ones(n);
    const Vec<Scalar> row =
        Eigen::FullPivLU<Mat<Scalar>>(Mat<Scalar>(op.penalized_theta().transpose())).solve(op.proj.chif);
    rep.lemma_chif_residual = max_abs(Vec<Scalar>(row - ones));
    rep.lemma_chi0_residual = max_abs(Vec<Scalar>(lu.solve(op.proj.chi0) - ones));
  } else {
    rep.lemma_chif_residual = rep.lemma_chi0_residual = std::numeric_limits<double>::infinity();
  }
  return rep;
}

/// Assemble an operator from raw data on [t0, tf], then re-verify every
/// invariant. Measured q, tau, r replace whatever the caller declared.
/// Throws InputError naming the failing residual.
template <class Scalar = double>
GsbpOperator<Scalar> assemble_operator(std::string name, NodeFamily family, const Vec<Scalar>& t,
                                       Scalar t0, Scalar tf, const Mat<Scalar>& H,
                                       const Mat<Scalar>& theta, const Vec<Scalar>& chi0,
                                       const Vec<Scalar>& chif) {
  const Eigen::Index n = t.size();
  if (n < 2) throw InputError("operator needs at least 2 nodes");
  if (H.rows() != n || H.cols() != n || theta.rows() != n || theta.cols() != n ||
      chi0.size() != n || chif.size() != n)
    throw InputError("operator dimensions disagree with node count");
  if (!(tf > t0)) throw InputError("interval must satisfy tf > t0");
  validate_nodes<Scalar>(Vec<Scalar>((t.array() - t0) / (tf - t0)));

  GsbpOperator<Scalar> op;
  op.name = std::move(name);
  op.family = family;
  op.t = t;
  op.t0 = t0;
  op.tf = tf;
  op.H = H;
  op.theta = theta;
  op.proj.chi0 = chi0;
  op.proj.chif = chif;
  bool diagonal = true;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && H(i, j) != Scalar(0)) diagonal = false;
  op.norm_kind = diagonal ? NormKind::Diagonal : NormKind::Dense;

  const ConditionReport pre = [&] {
    // D is needed for the SPD and order checks; guard the inverse
    op.D = solve_norm<Scalar>(H, op.norm_kind, theta);
    return certify_operator(op);
  }();
  if (!pre.h_spd)
    throw InvariantError("norm H is not symmetric positive definite (min eigenvalue " +
                     format_double(pre.h_min_eigenvalue) + ")");
  if (!pre.condition22)
    throw InvariantError("Theta + Theta' != chif chif' - chi0 chi0' (residual " +
                     format_double(pre.e_residual) + ")");
  if (pre.q_measured < 1) throw InvariantError("operator is not first-order accurate");
  if (pre.r_measured < pre.q_measured)
    throw InvariantError("projection order r < derivative order q");
  if (!pre.rinv_eigs.front().positive)
    throw InvariantError("Theta + chi0 chi0' has an eigenvalue with non-positive real part");
  op.q = pre.q_measured;
  op.tau = pre.tau_measured;
  op.proj.r = pre.r_measured;
  op.rho = norm_accuracy(op);
  return op;
}

/// Same operator on [a, b]: D scales by 1/(b-a), H by (b-a); Theta and chi unchanged.
template <class Scalar>
GsbpOperator<Scalar> rescale(const GsbpOperator<Scalar>& op, Scalar a, Scalar b) {
  if (!(b > a)) throw InputError("rescale needs b > a");
  GsbpOperator<Scalar> out = op;
  const Scalar ratio = (b - a) / op.length();
  out.t = (op.t.array() - op.t0) * ratio + a;
  out.t0 = a;
  out.tf = b;
  out.H = op.H * ratio;
  out.D = op.D / ratio;
  return out;
}

/// Time-reversed operator: nodes t -> t0 + tf - t, D -> -D, chi0 <-> chif.
/// Its primal discretization is the discrete dual of the original.
template <class Scalar>
GsbpOperator<Scalar> reversed(const GsbpOperator<Scalar>& op) {
  GsbpOperator<Scalar> out = op;
  out.name = op.name + "-reversed";
  out.t = (op.t0 + op.tf) - op.t.array();
  out.theta = -op.theta;
  out.D = -op.D;
  out.proj.chi0 = op.proj.chif;
  out.proj.chif = op.proj.chi0;
  return out;
}

template <class To, class From>
GsbpOperator<To> cast_operator(const GsbpOperator<From>& op) {
  GsbpOperator<To> out;
  out.name = op.name;
  out.family = op.family;
  out.t = cast_vec<To>(op.t);
  out.t0 = static_cast<To>(op.t0);
  out.tf = static_cast<To>(op.tf);
  out.H = cast_mat<To>(op.H);
  out.theta = cast_mat<To>(op.theta);
  out.D = cast_mat<To>(op.D);
  out.proj.chi0 = cast_vec<To>(op.proj.chi0);
  out.proj.chif = cast_vec<To>(op.proj.chif);
  out.proj.r = op.proj.r;
  out.q = op.q;
  out.tau = op.tau;
  out.rho = op.rho;
  out.norm_kind = op.norm_kind;
  return out;
}

}  // namespace gsbp

#endif  // GSBP_OPERATOR_HPP_
