#ifndef GSBP_TESTS_PRINTED_HPP_
#define GSBP_TESTS_PRINTED_HPP_

// Published coefficient tables, kept verbatim so tests compare against the
// printed digits rather than anything the library computes.

#include <cmath>

#include "gsbp/types.hpp"

namespace printed {

using gsbp::MatD;
using gsbp::VecD;

inline MatD mat(int n, std::initializer_list<double> v) {
  MatD m(n, n);
  auto it = v.begin();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = *it++;
  return m;
}

inline VecD vec(std::initializer_list<double> v) {
  VecD out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// four-node Gauss operator on [-1, 1]
inline VecD gauss4_t() {
  return vec({-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526});
}
inline VecD gauss4_H() {
  return vec({0.3478548451374539, 0.6521451548625461, 0.6521451548625461, 0.3478548451374539});
}
inline MatD gauss4_D() {
  return mat(4, {-3.3320002363522817, 4.8601544156851962, -2.1087823484951789, 0.5806281691622644,
                 -0.7575576147992339, -0.3844143922232086, 1.4706702312807167, -0.3286982242582743,
                 0.3286982242582743, -1.4706702312807167, 0.3844143922232086, 0.7575576147992339,
                 -0.5806281691622644, 2.1087823484951789, -4.8601544156851962, 3.3320002363522817});
}
inline VecD gauss4_chi0() {
  return vec({1.5267881254572668, -0.8136324494869273, 0.4007615203116504, -0.1139171962819899});
}
inline VecD gauss4_chif() {
  return vec({-0.1139171962819899, 0.4007615203116504, -0.8136324494869273, 1.5267881254572668});
}
inline MatD gauss4_A() {
  return mat(4, {0.0950400941860569, -0.0470608105772507, 0.0330840931816566, -0.0116315325874891,
                 0.1772065313616314, 0.1906741915282288, -0.0555183314150631, 0.0176470867327749,
                 0.1781035081124255, 0.3263151032211517, 0.1906741915282288, -0.0251022810693778,
                 0.1694061893528291, 0.3339017452341202, 0.3322201270240200, 0.0950400941860569});
}
inline VecD gauss4_b() {
  return vec({0.0869637112843635, 0.1630362887156365, 0.1630362887156365, 0.0869637112843635});
}
inline VecD gauss4_c() {
  return vec({0.0694318442029737, 0.3300094782075719, 0.6699905217924281, 0.9305681557970263});
}

// four-node Lobatto operator on [-1, 1]
inline MatD lobatto4_D() {
  const double s = std::sqrt(5.0);
  return mat(4, {-3, -5 * s / (s - 5), -5 * s / (s + 5), 0.5,
                 s / (s - 5), 0, s / 2, -5 * s / (s + 5),
                 s / (s + 5), -s / 2, 0, -5 * s / (s - 5),
                 -0.5, 5 * s / (s + 5), 5 * s / (s - 5), 3});
}

// Lobatto IIIC four-stage tableau as printed: the first row reads
// [1/12, -(-sqrt5)/12, (-sqrt5)/12, -1/12].
inline MatD lobatto4_A_as_printed() {
  const double s = std::sqrt(5.0);
  return mat(4, {1.0 / 12, s / 12, -s / 12, -1.0 / 12,
                 1.0 / 12, 0.25, (10 - 7 * s) / 60, s / 60,
                 1.0 / 12, (10 + 7 * s) / 60, 0.25, -s / 60,
                 1.0 / 12, 5.0 / 12, 5.0 / 12, 1.0 / 12});
}
// The same tableau with the first-row signs that satisfy A 1 = c and
// A c = c^2 / 2 (the standard Lobatto IIIC coefficients).
inline MatD lobatto4_A_consistent() {
  MatD a = lobatto4_A_as_printed();
  a(0, 1) = -a(0, 1);
  a(0, 2) = -a(0, 2);
  return a;
}
inline VecD lobatto4_b() { return vec({1.0 / 12, 5.0 / 12, 5.0 / 12, 1.0 / 12}); }
inline VecD lobatto4_c() {
  const double s = std::sqrt(5.0);
  return vec({0, 0.5 - s / 10, 0.5 + s / 10, 1});
}

inline MatD dirk3_A() {
  return mat(3, {0.0585104413426586, 0, 0,
                 0.0389225469556698, 0.7675348853239251, 0,
                 0.1613387070350185, -0.5944302919004032, 0.7165457925008468});
}
inline VecD dirk3_b() { return vec({0.1008717264855379, 0.4574278841698629, 0.4417003893445992}); }
inline VecD dirk3_c() { return vec({0.0585104413419415, 0.8064574322792799, 0.2834542075672883}); }

inline MatD dirk4_A() {
  return mat(4, {0.5975501145870646, 0, 0, 0,
                 -0.3662683378362842, 0.4899631271029300, 0, 0,
                 -0.9122346095222909, 1.395636663278596, 0.4979628247281717, 0,
                 4.870201094711127, -3.007233691002447, -2.425297972138512, 0.7811652842149162});
}
inline VecD dirk4_b() {
  return vec({0.5263633266867775, 0.3002573924935185, 0.1447678514141155, 0.02861142940558849});
}
inline VecD dirk4_c() {
  return vec({0.5975501145870646, 0.1236947892666459, 0.9813648784844768, 0.2188347157850838});
}

}  // namespace printed

#endif  // GSBP_TESTS_PRINTED_HPP_
