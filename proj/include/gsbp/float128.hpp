#ifndef GSBP_FLOAT128_HPP_
#define GSBP_FLOAT128_HPP_

// Quad precision scalar for convergence studies whose errors fall below
// binary64 resolution. Requires GNU extensions and libquadmath.

#include <boost/multiprecision/float128.hpp>

#include <Eigen/Core>

namespace gsbp {
using quad = boost::multiprecision::float128;
}  // namespace gsbp

namespace Eigen {
template <>
struct NumTraits<gsbp::quad> : GenericNumTraits<gsbp::quad> {
  using Real = gsbp::quad;
  using NonInteger = gsbp::quad;
  using Literal = gsbp::quad;
  using Nested = gsbp::quad;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 4,
    MulCost = 8
  };
  static inline Real dummy_precision() { return Real(1e-30); }
  static inline int digits10() { return 33; }
};
}  // namespace Eigen

#endif  // GSBP_FLOAT128_HPP_
