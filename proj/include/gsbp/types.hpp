#ifndef GSBP_TYPES_HPP_
#define GSBP_TYPES_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace gsbp {

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VecD = Vec<double>;
using MatD = Mat<double>;

/// Malformed or unsupported input (bad document, unsupported node count).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Well-formed input whose data violate an operator invariant.
class InvariantError : public InputError {
 public:
  using InputError::InputError;
};

/// A numerical contract failed: invariant violation, singular system,
/// Newton divergence.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parse a decimal string into `Scalar` without going through double, so
/// extended types keep every printed digit.
template <class Scalar>
Scalar parse_scalar(const std::string& text) {
  if constexpr (std::is_floating_point_v<Scalar>) {
    char* end = nullptr;
    const long double v = std::strtold(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') {
      throw InputError("not a number: '" + text + "'");
    }
    if constexpr (std::is_same_v<Scalar, double>) {
      return std::strtod(text.c_str(), nullptr);
    } else {
      return static_cast<Scalar>(v);
    }
  } else {
    try {
      return Scalar(text);
    } catch (const std::exception&) {
      throw InputError("not a number: '" + text + "'");
    }
  }
}

/// Shortest text that round-trips a binary64 exactly (17 significant digits).
inline std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

template <class Scalar>
double to_double(const Scalar& x) {
  return static_cast<double>(x);
}

template <class To, class From>
Vec<To> cast_vec(const Vec<From>& v) {
  Vec<To> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = static_cast<To>(v(i));
  return out;
}

template <class To, class From>
Mat<To> cast_mat(const Mat<From>& m) {
  Mat<To> out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = static_cast<To>(m(i, j));
  return out;
}

template <class Scalar>
double max_abs(const Mat<Scalar>& m) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      using std::abs;
      r = std::max(r, to_double(abs(m(i, j))));
    }
  return r;
}

template <class Scalar>
double max_abs(const Vec<Scalar>& v) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    using std::abs;
    r = std::max(r, to_double(abs(v(i))));
  }
  return r;
}

/// Elementwise power t^j, with 0^0 = 1.
template <class Scalar>
Vec<Scalar> monomial(const Vec<Scalar>& t, int j) {
  Vec<Scalar> out(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    Scalar p(1);
    for (int k = 0; k < j; ++k) p *= t(i);
    out(i) = p;
  }
  return out;
}

}  // namespace gsbp

#endif  // GSBP_TYPES_HPP_
