#ifndef GSBP_NODES_HPP_
#define GSBP_NODES_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Eigenvalues>

#include "gsbp/types.hpp"

namespace gsbp {

enum class NodeFamily {
  Gauss,
  LobattoLegendre,
  RadauLeft,   ///< includes t = 0 (Radau IA abscissa)
  RadauRight,  ///< includes t = 1 (Radau IIA abscissa)
  NewtonCotesClosed,
  NewtonCotesOpen,
  Custom
};

inline std::string_view to_string(NodeFamily f) {
  switch (f) {
    case NodeFamily::Gauss: return "gauss";
    case NodeFamily::LobattoLegendre: return "lobatto";
    case NodeFamily::RadauLeft: return "radau-left";
    case NodeFamily::RadauRight: return "radau-right";
    case NodeFamily::NewtonCotesClosed: return "newton-cotes-closed";
    case NodeFamily::NewtonCotesOpen: return "newton-cotes-open";
    case NodeFamily::Custom: return "custom";
  }
  return "custom";
}

inline NodeFamily parse_family(std::string_view name) {
  if (name == "gauss" || name == "lg") return NodeFamily::Gauss;
  if (name == "lobatto" || name == "lgl") return NodeFamily::LobattoLegendre;
  if (name == "radau-left" || name == "radau-ia" || name == "lgri") return NodeFamily::RadauLeft;
  if (name == "radau-right" || name == "radau-iia" || name == "lgrii") return NodeFamily::RadauRight;
  if (name == "newton-cotes-closed" || name == "nc" || name == "newton-cotes")
    return NodeFamily::NewtonCotesClosed;
  if (name == "newton-cotes-open" || name == "nc-open") return NodeFamily::NewtonCotesOpen;
  if (name == "custom") return NodeFamily::Custom;
  throw InputError("unknown node family '" + std::string(name) + "'");
}

/// Nodes on the reference interval [0,1].
template <class Scalar = double>
struct NodeSet {
  NodeFamily family = NodeFamily::Custom;
  Vec<Scalar> nodes;

  Eigen::Index size() const { return nodes.size(); }
};

template <class Scalar = double>
struct QuadratureRule {
  Vec<Scalar> weights;
  int tau = 0;  ///< exact for monomials of degree < tau
  bool negative_weights = false;
};

/// Minimum admissible gap between two nodes.
inline constexpr double kMinNodeGap = 1e-12;
/// A quadrature moment counts as exact below this residual.
inline constexpr double kQuadratureExactTol = 1e-12;

namespace detail {

/// Legendre polynomials P_0..P_{m} on [-1,1] at x, and their derivatives.
template <class Scalar>
void legendre_table(const Scalar& x, int m, std::vector<Scalar>& p, std::vector<Scalar>& dp) {
  p.assign(m + 1, Scalar(0));
  dp.assign(m + 1, Scalar(0));
  p[0] = Scalar(1);
  if (m >= 1) {
    p[1] = x;
    dp[1] = Scalar(1);
  }
  for (int k = 1; k < m; ++k) {
    p[k + 1] = (Scalar(2 * k + 1) * x * p[k] - Scalar(k) * p[k - 1]) / Scalar(k + 1);
    // P'_{k+1} = P'_{k-1} + (2k+1) P_k
    dp[k + 1] = dp[k - 1] + Scalar(2 * k + 1) * p[k];
  }
}

/// Monic Jacobi recurrence coefficients for weight (1-x)^alpha (1+x)^beta.
template <class Scalar>
void jacobi_recurrence(int m, int alpha, int beta, std::vector<Scalar>& a, std::vector<Scalar>& b) {
  a.assign(m, Scalar(0));
  b.assign(m, Scalar(0));
  const Scalar al(alpha), be(beta), ab(alpha + beta);
  for (int k = 0; k < m; ++k) {
    if (alpha == beta) {
      a[k] = Scalar(0);
    } else if (k == 0) {
      a[k] = (be - al) / (ab + Scalar(2));
    } else {
      const Scalar s = Scalar(2 * k) + ab;
      a[k] = (be * be - al * al) / (s * (s + Scalar(2)));
    }
    if (k >= 1) {
      const Scalar kk(k);
      const Scalar s = Scalar(2 * k) + ab;
      b[k] = Scalar(4) * kk * (kk + al) * (kk + be) * (kk + ab) /
             (s * s * (s + Scalar(1)) * (s - Scalar(1)));
    }
  }
}

/// Roots of the degree-m Jacobi polynomial: Golub-Welsch eigen-solve of the
/// symmetric Jacobi matrix, then one Newton step on the recurrence.
template <class Scalar>
std::vector<Scalar> jacobi_roots(int m, int alpha, int beta) {
  if (m == 0) return {};
  std::vector<Scalar> a, b;
  jacobi_recurrence<Scalar>(m, alpha, beta, a, b);
  Mat<Scalar> J = Mat<Scalar>::Zero(m, m);
  for (int k = 0; k < m; ++k) {
    J(k, k) = a[k];
    if (k + 1 < m) {
      using std::sqrt;
      J(k, k + 1) = J(k + 1, k) = sqrt(b[k + 1]);
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(J, Eigen::EigenvaluesOnly);
  std::vector<Scalar> roots(m);
  for (int i = 0; i < m; ++i) {
    Scalar x = es.eigenvalues()(i);
    Scalar p0(1), p1 = x - a[0], d0(0), d1(1);
    for (int k = 1; k < m; ++k) {
      const Scalar p2 = (x - a[k]) * p1 - b[k] * p0;
      const Scalar d2 = p1 + (x - a[k]) * d1 - b[k] * d0;
      p0 = p1;
      p1 = p2;
      d0 = d1;
      d1 = d2;
    }
    using std::abs;
    if (abs(d1) > Scalar(0)) x -= p1 / d1;
    roots[i] = x;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace detail

/// Shifted Legendre basis on [0,1]: V(i,k) = P_k(2 t_i - 1), k < cols.
template <class Scalar>
Mat<Scalar> legendre_vandermonde(const Vec<Scalar>& t, int cols) {
  Mat<Scalar> V(t.size(), cols);
  std::vector<Scalar> p, dp;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    detail::legendre_table<Scalar>(Scalar(2) * t(i) - Scalar(1), std::max(cols - 1, 0), p, dp);
    for (int k = 0; k < cols; ++k) V(i, k) = p[k];
  }
  return V;
}

/// Derivative (w.r.t. t on [0,1]) of the shifted Legendre basis.
template <class Scalar>
Mat<Scalar> legendre_vandermonde_derivative(const Vec<Scalar>& t, int cols) {
  Mat<Scalar> V(t.size(), cols);
  std::vector<Scalar> p, dp;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    detail::legendre_table<Scalar>(Scalar(2) * t(i) - Scalar(1), std::max(cols - 1, 0), p, dp);
    for (int k = 0; k < cols; ++k) V(i, k) = Scalar(2) * dp[k];
  }
  return V;
}

/// Throws InputError if any node leaves [0,1] or two nodes are confluent.
template <class Scalar>
void validate_nodes(const Vec<Scalar>& t) {
  if (t.size() < 1) throw InputError("empty node set");
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double ti = to_double(t(i));
    if (!std::isfinite(ti) || ti < -1e-15 || ti > 1.0 + 1e-15)
      throw InputError("node " + std::to_string(i) + " outside [0,1]");
    for (Eigen::Index j = 0; j < i; ++j) {
      using std::abs;
      if (to_double(abs(t(i) - t(j))) <= kMinNodeGap)
        throw InputError("nodes " + std::to_string(j) + " and " + std::to_string(i) +
                         " are not distinct");
    }
  }
}

/// Interpolatory weights on [0,1]: sum_i w_i P_k(t_i) = int_0^1 P_k, k < n.
template <class Scalar>
Vec<Scalar> interpolatory_weights(const Vec<Scalar>& t) {
  const int n = static_cast<int>(t.size());
  const Mat<Scalar> V = legendre_vandermonde<Scalar>(t, n);
  Vec<Scalar> rhs = Vec<Scalar>::Zero(n);
  rhs(0) = Scalar(1);
  return V.transpose().fullPivLu().solve(rhs);
}

/// Largest tau such that sum w t^j = 1/(j+1) for all j < tau (capped at jmax).
template <class Scalar>
int measure_quadrature_order(const Vec<Scalar>& t, const Vec<Scalar>& w, int jmax,
                             double tol = kQuadratureExactTol) {
  int tau = 0;
  for (int j = 0; j <= jmax; ++j) {
    using std::abs;
    const Scalar r = w.dot(monomial(t, j)) - Scalar(1) / Scalar(j + 1);
    if (to_double(abs(r)) >= tol) break;
    tau = j + 1;
  }
  return tau;
}

inline int analytic_quadrature_order(NodeFamily f, int n) {
  switch (f) {
    case NodeFamily::Gauss: return 2 * n;
    case NodeFamily::LobattoLegendre: return 2 * n - 2;
    case NodeFamily::RadauLeft:
    case NodeFamily::RadauRight: return 2 * n - 1;
    case NodeFamily::NewtonCotesClosed:
    case NodeFamily::NewtonCotesOpen: return 2 * ((n + 1) / 2);
    case NodeFamily::Custom: return -1;
  }
  return -1;
}

template <class Scalar = double>
struct NodesAndWeights {
  NodeSet<Scalar> nodes;
  QuadratureRule<Scalar> rule;
};

/// Quadrature rule for arbitrary distinct nodes in [0,1]; tau is measured.
template <class Scalar = double>
NodesAndWeights<Scalar> custom_nodes(const Vec<Scalar>& t) {
  validate_nodes(t);
  NodesAndWeights<Scalar> out;
  out.nodes.family = NodeFamily::Custom;
  out.nodes.nodes = t;
  out.rule.weights = interpolatory_weights(t);
  out.rule.tau = measure_quadrature_order(t, out.rule.weights, 2 * static_cast<int>(t.size()) + 2);
  out.rule.negative_weights = (out.rule.weights.array() <= Scalar(0)).any();
  return out;
}

/// Nodes and interpolatory weights on [0,1] for the standard families.
///
/// Orthogonal-polynomial families take their interior nodes from Jacobi
/// polynomial roots on [-1,1] (Gauss: P^(0,0)_n; Lobatto: P^(1,1)_{n-2};
/// Radau: P^(0,1)_{n-1} or P^(1,0)_{n-1}) and map them affinely. The
/// analytic order is then re-verified against monomial moments.
template <class Scalar = double>
NodesAndWeights<Scalar> build_nodes(NodeFamily family, int n) {
  if (family == NodeFamily::Custom) throw InputError("custom nodes need explicit values");
  if (n < 2) throw InputError("need at least 2 nodes (no GSBP operator with q >= 1 exists for n = 1)");
  if (n > 24) throw InputError("node count above 24 not supported");

  std::vector<Scalar> x;  // on [-1,1]
  switch (family) {
    case NodeFamily::Gauss:
      x = detail::jacobi_roots<Scalar>(n, 0, 0);
      break;
    case NodeFamily::LobattoLegendre:
      x = detail::jacobi_roots<Scalar>(n - 2, 1, 1);
      x.insert(x.begin(), Scalar(-1));
      x.push_back(Scalar(1));
      break;
    case NodeFamily::RadauLeft:
      x = detail::jacobi_roots<Scalar>(n - 1, 0, 1);
      x.insert(x.begin(), Scalar(-1));
      break;
    case NodeFamily::RadauRight:
      x = detail::jacobi_roots<Scalar>(n - 1, 1, 0);
      x.push_back(Scalar(1));
      break;
    case NodeFamily::NewtonCotesClosed:
      for (int i = 0; i < n; ++i) x.push_back(Scalar(2 * i) / Scalar(n - 1) - Scalar(1));
      break;
    case NodeFamily::NewtonCotesOpen:
      for (int i = 1; i <= n; ++i) x.push_back(Scalar(2 * i) / Scalar(n + 1) - Scalar(1));
      break;
    case NodeFamily::Custom:
      break;
  }

  NodesAndWeights<Scalar> out;
  out.nodes.family = family;
  out.nodes.nodes.resize(n);
  for (int i = 0; i < n; ++i) out.nodes.nodes(i) = (x[i] + Scalar(1)) / Scalar(2);
  // endpoints exact
  if (family == NodeFamily::LobattoLegendre || family == NodeFamily::RadauLeft ||
      family == NodeFamily::NewtonCotesClosed)
    out.nodes.nodes(0) = Scalar(0);
  if (family == NodeFamily::LobattoLegendre || family == NodeFamily::RadauRight ||
      family == NodeFamily::NewtonCotesClosed)
    out.nodes.nodes(n - 1) = Scalar(1);
  validate_nodes(out.nodes.nodes);

  out.rule.weights = interpolatory_weights(out.nodes.nodes);
  out.rule.negative_weights = (out.rule.weights.array() <= Scalar(0)).any();
  const int tau = analytic_quadrature_order(family, n);
  // For large n the defect at degree tau drops below the threshold, so only
  // exactness below tau is checked; tau itself comes from the family.
  const int measured = measure_quadrature_order(out.nodes.nodes, out.rule.weights, tau);
  if (measured < tau) {
    throw NumericError("quadrature order check failed for " + std::string(to_string(family)) +
                       "-" + std::to_string(n) + ": expected " + std::to_string(tau) +
                       ", measured " + std::to_string(measured));
  }
  out.rule.tau = tau;
  return out;
}

}  // namespace gsbp

#endif  // GSBP_NODES_HPP_
