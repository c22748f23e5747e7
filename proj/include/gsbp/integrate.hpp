#ifndef GSBP_INTEGRATE_HPP_
#define GSBP_INTEGRATE_HPP_

// Time marching in Runge-Kutta form and in the multiblock SAT form, the
// discrete dual problem, and quadrature functionals.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "gsbp/operator.hpp"
#include "gsbp/tableau.hpp"
#include "gsbp/types.hpp"

namespace gsbp {

enum class ProblemKind { LinearAutonomous, LinearForced, Nonlinear };

inline std::string_view to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::LinearAutonomous: return "linear-autonomous";
    case ProblemKind::LinearForced: return "linear-forced";
    case ProblemKind::Nonlinear: return "nonlinear";
  }
  return "nonlinear";
}

/// y' = f(y, t). Linear kinds use f = L y (+ g(t)); rhs/jacobian are then
/// derived and need not be set.
template <class Scalar = double>
struct IvpSpec {
  using VecFn = std::function<Vec<Scalar>(const Vec<Scalar>&, Scalar)>;
  using MatFn = std::function<Mat<Scalar>(const Vec<Scalar>&, Scalar)>;

  std::string name;
  ProblemKind kind = ProblemKind::Nonlinear;
  Mat<Scalar> L;                              ///< linear kinds
  std::function<Vec<Scalar>(Scalar)> forcing;  ///< LinearForced
  VecFn rhs;                                  ///< Nonlinear
  MatFn jacobian;                             ///< optional
  Vec<Scalar> y0;
  Scalar t0 = Scalar(0);
  Scalar tf = Scalar(1);
  std::function<Vec<Scalar>(Scalar)> exact;  ///< optional oracle

  Eigen::Index dim() const { return y0.size(); }
  bool linear() const { return kind != ProblemKind::Nonlinear; }

  Vec<Scalar> f(const Vec<Scalar>& y, Scalar t) const {
    if (kind == ProblemKind::Nonlinear) return rhs(y, t);
    Vec<Scalar> out = L * y;
    if (kind == ProblemKind::LinearForced) out += forcing(t);
    return out;
  }

  Vec<Scalar> g(Scalar t) const {
    if (kind == ProblemKind::LinearForced) return forcing(t);
    return Vec<Scalar>::Zero(dim());
  }

  /// Jacobian, by central differences with step sqrt(eps)(1 + |y_j|) when
  /// none is supplied.
  Mat<Scalar> J(const Vec<Scalar>& y, Scalar t) const {
    if (kind != ProblemKind::Nonlinear) return L;
    if (jacobian) return jacobian(y, t);
    using std::abs;
    using std::sqrt;
    const Scalar root_eps = sqrt(std::numeric_limits<Scalar>::epsilon());
    Mat<Scalar> out(dim(), dim());
    for (Eigen::Index j = 0; j < dim(); ++j) {
      const Scalar d = root_eps * (Scalar(1) + abs(y(j)));
      Vec<Scalar> yp = y, ym = y;
      yp(j) += d;
      ym(j) -= d;
      out.col(j) = (rhs(yp, t) - rhs(ym, t)) / (Scalar(2) * d);
    }
    return out;
  }

  void validate() const {
    if (!(tf > t0)) throw InputError("problem interval must satisfy tf > t0");
    if (dim() < 1) throw InputError("problem needs an initial state");
    for (Eigen::Index i = 0; i < dim(); ++i)
      if (!std::isfinite(to_double(y0(i)))) throw InputError("initial state is not finite");
    if (linear() && (L.rows() != dim() || L.cols() != dim()))
      throw InputError("linear operator size differs from the state dimension");
    if (kind == ProblemKind::LinearForced && !forcing) throw InputError("missing forcing term");
    if (kind == ProblemKind::Nonlinear && !rhs) throw InputError("missing right-hand side");
  }
};

// ------------------------------------------------------------------ newton

struct NewtonStats {
  int iterations = 0;
  int refreshes = 0;  ///< switches from the frozen to the current Jacobian
  bool converged = true;
  double last_increment = 0.0;
};

/// 1e-12 (1 + |y|) in binary64, scaled with the working precision.
template <class Scalar>
Scalar newton_tolerance(const Vec<Scalar>& y) {
  const Scalar scale = std::numeric_limits<Scalar>::epsilon() /
                       Scalar(std::numeric_limits<double>::epsilon());
  Scalar m(0);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    using std::abs;
    m = std::max<Scalar>(m, abs(y(i)));
  }
  return Scalar(1e-12) * scale * (Scalar(1) + m);
}

inline constexpr int kNewtonMaxIterations = 25;
inline constexpr double kNewtonRateGuard = 0.5;

/// Simplified Newton: the `frozen` matrix is factored once; when the
/// increment ratio exceeds the guard, or predicts that tol is out of reach
/// within the iteration budget, the iteration switches to full Newton,
/// refactoring the current Jacobian every iteration, with residual
/// backtracking.
template <class Scalar, class Residual, class Jacobian>
NewtonStats newton_solve(Vec<Scalar>& x, const Residual& residual, const Mat<Scalar>& frozen,
                         const Jacobian& current, Scalar tol) {
  NewtonStats st;
  st.converged = false;
  Eigen::PartialPivLU<Mat<Scalar>> lu(frozen);
  bool full = false;
  Scalar prev = std::numeric_limits<Scalar>::infinity();
  for (int it = 1; it <= kNewtonMaxIterations; ++it) {
    st.iterations = it;
    const Vec<Scalar> r = residual(x);
    if (full) lu.compute(current(x));
    Vec<Scalar> dx = -lu.solve(r);
    if (full) {
      const Scalar r0 = r.template lpNorm<Eigen::Infinity>();
      Scalar lam(1);
      for (int k = 0; k < 10; ++k) {
        const Vec<Scalar> trial = x + lam * dx;
        if (residual(trial).template lpNorm<Eigen::Infinity>() <= r0) break;
        lam /= Scalar(2);
      }
      dx *= lam;
    }
    x += dx;
    const Scalar inc = dx.template lpNorm<Eigen::Infinity>();
    st.last_increment = to_double(inc);
    if (!std::isfinite(st.last_increment)) return st;
    if (inc < tol) {
      st.converged = true;
      return st;
    }
    // switch when the rate is poor or too slow to reach tol within the budget
    using std::pow;
    const bool finite_prev = std::isfinite(to_double(prev));
    const Scalar theta = finite_prev ? inc / prev : Scalar(0);
    const bool too_slow = finite_prev && theta < Scalar(1) &&
                          inc * pow(theta, kNewtonMaxIterations - it) / (Scalar(1) - theta) > tol;
    if (!full && finite_prev && (theta > Scalar(kNewtonRateGuard) || too_slow)) {
      full = true;
      ++st.refreshes;
    }
    prev = inc;
  }
  return st;
}

// ---------------------------------------------------------------- RK steps

template <class Scalar = double>
struct StepResult {
  Vec<Scalar> y_next;
  Mat<Scalar> stages;  ///< n x M, row i is stage value Y_i
  NewtonStats newton;
};

namespace detail {

template <class Scalar>
Mat<Scalar> kron(const Mat<Scalar>& a, const Mat<Scalar>& b) {
  Mat<Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// (a x I_M) v without forming the Kronecker product.
template <class Scalar>
Vec<Scalar> kron_apply(const Mat<Scalar>& a, const Vec<Scalar>& v, Eigen::Index M) {
  Vec<Scalar> out = Vec<Scalar>::Zero(a.rows() * M);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (a(i, j) != Scalar(0)) out.segment(i * M, M) += a(i, j) * v.segment(j * M, M);
  return out;
}

template <class Scalar>
Mat<Scalar> unstack(const Vec<Scalar>& v, Eigen::Index n, Eigen::Index M) {
  Mat<Scalar> out(n, M);
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = v.segment(i * M, M).transpose();
  return out;
}

}  // namespace detail

/// Runge-Kutta stepper; caches the stage-matrix factorization of linear
/// problems across steps of equal size.
template <class Scalar = double>
class RkStepper {
 public:
  RkStepper(ButcherTableau<Scalar> tab, const IvpSpec<Scalar>& ivp)
      : tab_(std::move(tab)), ivp_(ivp) {
    ivp_.validate();
    n_ = tab_.stages();
    M_ = ivp_.dim();
    sequential_ = tab_.structure != Structure::FullyImplicit;
  }

  const ButcherTableau<Scalar>& tableau() const { return tab_; }

  StepResult<Scalar> step(const Vec<Scalar>& y, Scalar t, Scalar h) {
    if (!(h > Scalar(0))) throw InputError("step size must be positive");
    if (y.size() != M_) throw InputError("state dimension mismatch");
    StepResult<Scalar> out;
    if (ivp_.linear()) {
      out.stages = sequential_ ? linear_sequential(y, t, h) : linear_coupled(y, t, h);
      out.newton.iterations = 0;
    } else {
      out = sequential_ ? nonlinear_sequential(y, t, h) : nonlinear_coupled(y, t, h);
    }
    Vec<Scalar> incr = Vec<Scalar>::Zero(M_);
    for (Eigen::Index j = 0; j < n_; ++j)
      incr += tab_.b(j) * ivp_.f(Vec<Scalar>(out.stages.row(j).transpose()), t + tab_.c(j) * h);
    out.y_next = y + h * incr;
    return out;
  }

 private:
  Mat<Scalar> linear_coupled(const Vec<Scalar>& y, Scalar t, Scalar h) {
    if (!lu_ || h != lu_h_) {
      const Mat<Scalar> K = Mat<Scalar>::Identity(n_ * M_, n_ * M_) -
                            h * detail::kron<Scalar>(tab_.A, ivp_.L);
      lu_.emplace(K);
      lu_h_ = h;
    }
    Vec<Scalar> rhs(n_ * M_);
    Vec<Scalar> G(n_ * M_);
    for (Eigen::Index j = 0; j < n_; ++j) G.segment(j * M_, M_) = ivp_.g(t + tab_.c(j) * h);
    for (Eigen::Index i = 0; i < n_; ++i) {
      Vec<Scalar> acc = y;
      for (Eigen::Index j = 0; j < n_; ++j)
        if (tab_.A(i, j) != Scalar(0)) acc += h * tab_.A(i, j) * G.segment(j * M_, M_);
      rhs.segment(i * M_, M_) = acc;
    }
    return detail::unstack<Scalar>(lu_->solve(rhs), n_, M_);
  }

  Mat<Scalar> linear_sequential(const Vec<Scalar>& y, Scalar t, Scalar h) {
    if (stage_lu_.empty() || h != lu_h_) {
      stage_lu_.clear();
      for (Eigen::Index i = 0; i < n_; ++i)
        stage_lu_.emplace_back(Mat<Scalar>(Mat<Scalar>::Identity(M_, M_) - h * tab_.A(i, i) * ivp_.L));
      lu_h_ = h;
    }
    Mat<Scalar> Y(n_, M_);
    std::vector<Vec<Scalar>> F(n_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      const Scalar ti = t + tab_.c(i) * h;
      Vec<Scalar> rhs = y + h * tab_.A(i, i) * ivp_.g(ti);
      for (Eigen::Index j = 0; j < i; ++j) rhs += h * tab_.A(i, j) * F[j];
      const Vec<Scalar> Yi = stage_lu_[i].solve(rhs);
      Y.row(i) = Yi.transpose();
      F[i] = ivp_.f(Yi, ti);
    }
    return Y;
  }

  StepResult<Scalar> nonlinear_coupled(const Vec<Scalar>& y, Scalar t, Scalar h) {
    const Eigen::Index N = n_ * M_;
    Vec<Scalar> Y(N);
    for (Eigen::Index i = 0; i < n_; ++i) Y.segment(i * M_, M_) = y;
    auto F = [&](const Vec<Scalar>& Yv) {
      Vec<Scalar> out(N);
      for (Eigen::Index j = 0; j < n_; ++j)
        out.segment(j * M_, M_) = ivp_.f(Vec<Scalar>(Yv.segment(j * M_, M_)), t + tab_.c(j) * h);
      return out;
    };
    const Mat<Scalar> AI = detail::kron<Scalar>(tab_.A, Mat<Scalar>::Identity(M_, M_));
    auto residual = [&](const Vec<Scalar>& Yv) -> Vec<Scalar> {
      Vec<Scalar> r = Yv - h * (AI * F(Yv));
      for (Eigen::Index i = 0; i < n_; ++i) r.segment(i * M_, M_) -= y;
      return r;
    };
    auto current = [&](const Vec<Scalar>& Yv) -> Mat<Scalar> {
      Mat<Scalar> Jd = Mat<Scalar>::Zero(N, N);
      for (Eigen::Index j = 0; j < n_; ++j)
        Jd.block(j * M_, j * M_, M_, M_) =
            ivp_.J(Vec<Scalar>(Yv.segment(j * M_, M_)), t + tab_.c(j) * h);
      return Mat<Scalar>(Mat<Scalar>::Identity(N, N) - h * AI * Jd);
    };
    const Mat<Scalar> frozen =
        Mat<Scalar>::Identity(N, N) - h * detail::kron<Scalar>(tab_.A, ivp_.J(y, t));
    StepResult<Scalar> out;
    out.newton = newton_solve<Scalar>(Y, residual, frozen, current, newton_tolerance<Scalar>(y));
    if (!out.newton.converged) throw_diverged(t, out.newton);
    out.stages = detail::unstack<Scalar>(Y, n_, M_);
    return out;
  }

  StepResult<Scalar> nonlinear_sequential(const Vec<Scalar>& y, Scalar t, Scalar h) {
    StepResult<Scalar> out;
    out.stages.resize(n_, M_);
    std::vector<Vec<Scalar>> F(n_);
    const Mat<Scalar> I = Mat<Scalar>::Identity(M_, M_);
    const Mat<Scalar> J0 = ivp_.J(y, t);
    for (Eigen::Index i = 0; i < n_; ++i) {
      const Scalar ti = t + tab_.c(i) * h;
      const Scalar aii = tab_.A(i, i);
      Vec<Scalar> base = y;
      for (Eigen::Index j = 0; j < i; ++j) base += h * tab_.A(i, j) * F[j];
      Vec<Scalar> Yi = base;
      auto residual = [&](const Vec<Scalar>& v) -> Vec<Scalar> {
        return v - base - h * aii * ivp_.f(v, ti);
      };
      auto current = [&](const Vec<Scalar>& v) -> Mat<Scalar> {
        return Mat<Scalar>(I - h * aii * ivp_.J(v, ti));
      };
      if (aii != Scalar(0)) {
        const auto st = newton_solve<Scalar>(Yi, residual, Mat<Scalar>(I - h * aii * J0), current,
                                             newton_tolerance<Scalar>(y));
        out.newton.iterations += st.iterations;
        out.newton.refreshes += st.refreshes;
        out.newton.last_increment = std::max(out.newton.last_increment, st.last_increment);
        if (!st.converged) {
          out.newton.converged = false;
          throw_diverged(t, st);
        }
      }
      out.stages.row(i) = Yi.transpose();
      F[i] = ivp_.f(Yi, ti);
    }
    return out;
  }

  [[noreturn]] void throw_diverged(Scalar t, const NewtonStats& st) const {
    std::ostringstream msg;
    msg << "Newton iteration did not converge at t = " << format_double(to_double(t)) << " after "
        << st.iterations << " iterations (last increment " << format_double(st.last_increment)
        << ")";
    throw NumericError(msg.str());
  }

  ButcherTableau<Scalar> tab_;
  IvpSpec<Scalar> ivp_;
  Eigen::Index n_ = 0, M_ = 0;
  bool sequential_ = false;
  std::optional<Eigen::PartialPivLU<Mat<Scalar>>> lu_;
  std::vector<Eigen::PartialPivLU<Mat<Scalar>>> stage_lu_;
  Scalar lu_h_ = Scalar(-1);
};

template <class Scalar>
StepResult<Scalar> step(const ButcherTableau<Scalar>& tab, const IvpSpec<Scalar>& ivp,
                        const Vec<Scalar>& y, Scalar t, Scalar h) {
  RkStepper<Scalar> s(tab, ivp);
  return s.step(y, t, h);
}

// -------------------------------------------------------------- trajectory

template <class Scalar = double>
struct Trajectory {
  std::string scheme;
  Vec<Scalar> c;                   ///< abscissa
  std::vector<Scalar> t;           ///< step boundaries, size N+1
  std::vector<Vec<Scalar>> y;      ///< endpoint values, size N+1 (y[0] = y0)
  std::vector<Mat<Scalar>> stages; ///< per step, n x M
  std::vector<int> newton_iterations;
  std::vector<int> newton_refreshes;
  bool dual_consistent = true;

  int steps() const { return static_cast<int>(stages.size()); }
  Scalar h(int m) const { return t[m + 1] - t[m]; }
  const Vec<Scalar>& final_value() const { return y.back(); }
};

/// Step boundaries from t0 to tf with step h; the last step is shortened
/// to land on tf.
template <class Scalar>
std::vector<Scalar> step_grid(Scalar t0, Scalar tf, Scalar h) {
  if (!(h > Scalar(0))) throw InputError("step size must be positive");
  std::vector<Scalar> grid{t0};
  const Scalar slack = (tf - t0) * Scalar(1e-12);
  for (long m = 1;; ++m) {
    const Scalar next = t0 + Scalar(m) * h;
    if (next >= tf - slack) {
      grid.push_back(tf);
      break;
    }
    grid.push_back(next);
  }
  return grid;
}

template <class Scalar>
Trajectory<Scalar> march(const ButcherTableau<Scalar>& tab, const IvpSpec<Scalar>& ivp, Scalar h) {
  RkStepper<Scalar> stepper(tab, ivp);
  Trajectory<Scalar> traj;
  traj.scheme = tab.name;
  traj.c = tab.c;
  traj.t = step_grid(ivp.t0, ivp.tf, h);
  traj.y.push_back(ivp.y0);
  for (std::size_t m = 0; m + 1 < traj.t.size(); ++m) {
    // the nominal h keeps cached factorizations valid; only the last step
    // may differ
    using std::abs;
    const Scalar last = traj.t[m + 1] - traj.t[m];
    const Scalar hm = (m + 2 < traj.t.size() || abs(last - h) <= Scalar(1e-12) * h) ? h : last;
    auto r = stepper.step(traj.y.back(), traj.t[m], hm);
    traj.y.push_back(std::move(r.y_next));
    traj.stages.push_back(std::move(r.stages));
    traj.newton_iterations.push_back(r.newton.iterations);
    traj.newton_refreshes.push_back(r.newton.refreshes);
  }
  return traj;
}

template <class Scalar>
Trajectory<Scalar> march_steps(const ButcherTableau<Scalar>& tab, const IvpSpec<Scalar>& ivp,
                               int nsteps) {
  if (nsteps < 1) throw InputError("need at least one step");
  return march(tab, ivp, Scalar((ivp.tf - ivp.t0) / Scalar(nsteps)));
}

// --------------------------------------------------------------------- SAT

struct SatConfig {
  double sigma_init = -1.0;
  double sigma1 = 0.0;   ///< penalty on the upstream side of an interface
  double sigma2 = -1.0;  ///< penalty on the downstream side

  static SatConfig with_interface(double sigma2, double sigma_init = -1.0) {
    return {sigma_init, sigma2 + 1.0, sigma2};
  }
  void validate() const {
    if (std::abs(sigma1 - (sigma2 + 1.0)) > 1e-14)
      throw InputError("interface penalties must satisfy sigma1 = sigma2 + 1 (conservation)");
  }
  bool dual_consistent() const { return sigma_init == -1.0 && sigma2 == -1.0; }
  bool sequential() const { return sigma1 == 0.0; }
};

/// All steps solved as one linear system; valid for any conservative
/// penalties, required when sigma2 != -1.
template <class Scalar>
Trajectory<Scalar> sat_march_coupled(const GsbpOperator<Scalar>& op, const IvpSpec<Scalar>& ivp,
                                     int nsteps, const SatConfig& cfg = {}) {
  cfg.validate();
  ivp.validate();
  if (nsteps < 1) throw InputError("need at least one step");
  const Eigen::Index n = op.size(), M = ivp.dim();
  const Scalar h = (ivp.tf - ivp.t0) / Scalar(nsteps);
  const Vec<Scalar> c = op.abscissa();
  const Mat<Scalar> Hh = op.H * (h / op.length());
  const Mat<Scalar> IM = Mat<Scalar>::Identity(M, M);
  const Mat<Scalar> c00 = op.proj.chi0 * op.proj.chi0.transpose();

  Trajectory<Scalar> traj;
  traj.scheme = op.name + "-sat";
  traj.c = c;
  traj.dual_consistent = cfg.dual_consistent();
  for (int m = 0; m <= nsteps; ++m) traj.t.push_back(ivp.t0 + Scalar(m) * h);
  traj.t.back() = ivp.tf;
  traj.y.push_back(ivp.y0);
  auto project = [&](const Vec<Scalar>& chi, const Vec<Scalar>& Y) {
    Vec<Scalar> out = Vec<Scalar>::Zero(M);
    for (Eigen::Index j = 0; j < n; ++j) out += chi(j) * Y.segment(j * M, M);
    return out;
  };

  if (!ivp.linear())
    throw InputError("globally coupled SAT marching (sigma2 != -1) is limited to linear problems");
  // Globally coupled system over all steps, blocks of size n M.
  const Eigen::Index B = n * M, N = B * nsteps;
  const Mat<Scalar> cff = op.proj.chif * op.proj.chif.transpose();
  const Mat<Scalar> c0f = op.proj.chi0 * op.proj.chif.transpose();
  const Mat<Scalar> cf0 = op.proj.chif * op.proj.chi0.transpose();
  std::vector<Eigen::Triplet<Scalar>> trip;
  Vec<Scalar> rhs = Vec<Scalar>::Zero(N);
  auto put = [&](Eigen::Index r0, Eigen::Index c0, const Mat<Scalar>& blk) {
    for (Eigen::Index i = 0; i < blk.rows(); ++i)
      for (Eigen::Index j = 0; j < blk.cols(); ++j)
        if (blk(i, j) != Scalar(0)) trip.emplace_back(r0 + i, c0 + j, blk(i, j));
  };
  const Scalar si(cfg.sigma_init), s1(cfg.sigma1), s2(cfg.sigma2);
  for (int m = 0; m < nsteps; ++m) {
    const Scalar tm = traj.t[m];
    Mat<Scalar> diag = op.theta;
    if (m == 0) diag -= si * c00;
    if (m > 0) diag -= s2 * c00;
    if (m + 1 < nsteps) diag -= s1 * cff;
    put(m * B, m * B, Mat<Scalar>(detail::kron<Scalar>(diag, IM) - detail::kron<Scalar>(Hh, ivp.L)));
    if (m > 0) put(m * B, (m - 1) * B, detail::kron<Scalar>(Mat<Scalar>(s2 * c0f), IM));
    if (m + 1 < nsteps) put(m * B, (m + 1) * B, detail::kron<Scalar>(Mat<Scalar>(s1 * cf0), IM));
    Vec<Scalar> G(B);
    for (Eigen::Index j = 0; j < n; ++j) G.segment(j * M, M) = ivp.g(tm + c(j) * h);
    rhs.segment(m * B, B) = detail::kron_apply<Scalar>(Hh, G, M);
    if (m == 0)
      for (Eigen::Index j = 0; j < n; ++j)
        rhs.segment(j * M, M) -= si * op.proj.chi0(j) * ivp.y0;
  }
  Eigen::SparseMatrix<Scalar> K(N, N);
  K.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<Scalar>> lu;
  lu.compute(K);
  if (lu.info() != Eigen::Success) throw NumericError("coupled SAT system is singular");
  const Vec<Scalar> Y = lu.solve(rhs);
  for (int m = 0; m < nsteps; ++m) {
    const Vec<Scalar> Ym = Y.segment(m * B, B);
    traj.stages.push_back(detail::unstack<Scalar>(Ym, n, M));
    traj.y.push_back(project(op.proj.chif, Ym));
    traj.newton_iterations.push_back(0);
    traj.newton_refreshes.push_back(0);
  }
  return traj;
}

/// GSBP-SAT time marching with N equal steps. With sigma2 = -1 the steps
/// decouple and are solved in sequence (any problem); otherwise the coupled
/// system over all steps is solved at once (linear problems only).
template <class Scalar>
Trajectory<Scalar> sat_march(const GsbpOperator<Scalar>& op, const IvpSpec<Scalar>& ivp,
                             int nsteps, const SatConfig& cfg = {}) {
  cfg.validate();
  ivp.validate();
  if (nsteps < 1) throw InputError("need at least one step");
  const Eigen::Index n = op.size(), M = ivp.dim();
  const Scalar h = (ivp.tf - ivp.t0) / Scalar(nsteps);
  const Vec<Scalar> c = op.abscissa();
  const Mat<Scalar> Hh = op.H * (h / op.length());
  const Mat<Scalar> IM = Mat<Scalar>::Identity(M, M);
  const Mat<Scalar> c00 = op.proj.chi0 * op.proj.chi0.transpose();

  Trajectory<Scalar> traj;
  traj.scheme = op.name + "-sat";
  traj.c = c;
  traj.dual_consistent = cfg.dual_consistent();
  for (int m = 0; m <= nsteps; ++m) traj.t.push_back(ivp.t0 + Scalar(m) * h);
  traj.t.back() = ivp.tf;
  traj.y.push_back(ivp.y0);

  auto project = [&](const Vec<Scalar>& chi, const Vec<Scalar>& Y) {
    Vec<Scalar> out = Vec<Scalar>::Zero(M);
    for (Eigen::Index j = 0; j < n; ++j) out += chi(j) * Y.segment(j * M, M);
    return out;
  };

  if (cfg.sequential()) {
    // linear step matrices depend only on sigma: at most two factorizations
    std::optional<Eigen::FullPivLU<Mat<Scalar>>> lu_init, lu_interface;
    for (int m = 0; m < nsteps; ++m) {
      const Scalar sigma = Scalar(m == 0 ? cfg.sigma_init : cfg.sigma2);
      const Vec<Scalar>& prev = traj.y.back();
      const Scalar tm = traj.t[m];
      const Mat<Scalar> P = op.theta - sigma * c00;
      // (P x I) Y - (Hh x I) F(Y) + sigma (chi0 x prev) = 0
      Vec<Scalar> shift(n * M);
      for (Eigen::Index j = 0; j < n; ++j) shift.segment(j * M, M) = sigma * op.proj.chi0(j) * prev;
      Vec<Scalar> Y(n * M);
      NewtonStats st;
      if (ivp.linear()) {
        auto& lu = (m == 0 || cfg.sigma_init == cfg.sigma2) ? lu_init : lu_interface;
        if (!lu) {
          lu.emplace(Mat<Scalar>(detail::kron<Scalar>(P, IM) - detail::kron<Scalar>(Hh, ivp.L)));
          if (!lu->isInvertible()) throw NumericError("SAT step system is singular");
        }
        Vec<Scalar> G(n * M);
        for (Eigen::Index j = 0; j < n; ++j) G.segment(j * M, M) = ivp.g(tm + c(j) * h);
        const Vec<Scalar> rhs = detail::kron_apply<Scalar>(Hh, G, M) - shift;
        Y = lu->solve(rhs);
      } else {
        for (Eigen::Index j = 0; j < n; ++j) Y.segment(j * M, M) = prev;
        const Mat<Scalar> PI = detail::kron<Scalar>(P, IM);
        const Mat<Scalar> HI = detail::kron<Scalar>(Hh, IM);
        auto F = [&](const Vec<Scalar>& Yv) {
          Vec<Scalar> out(n * M);
          for (Eigen::Index j = 0; j < n; ++j)
            out.segment(j * M, M) = ivp.f(Vec<Scalar>(Yv.segment(j * M, M)), tm + c(j) * h);
          return out;
        };
        auto residual = [&](const Vec<Scalar>& Yv) -> Vec<Scalar> {
          return PI * Yv - HI * F(Yv) + shift;
        };
        auto current = [&](const Vec<Scalar>& Yv) -> Mat<Scalar> {
          Mat<Scalar> Jd = Mat<Scalar>::Zero(n * M, n * M);
          for (Eigen::Index j = 0; j < n; ++j)
            Jd.block(j * M, j * M, M, M) = ivp.J(Vec<Scalar>(Yv.segment(j * M, M)), tm + c(j) * h);
          return Mat<Scalar>(PI - HI * Jd);
        };
        const Mat<Scalar> frozen = PI - detail::kron<Scalar>(Hh, ivp.J(prev, tm));
        st = newton_solve<Scalar>(Y, residual, frozen, current, newton_tolerance<Scalar>(prev));
        if (!st.converged) throw NumericError("Newton iteration did not converge in SAT step");
      }
      traj.stages.push_back(detail::unstack<Scalar>(Y, n, M));
      traj.y.push_back(project(op.proj.chif, Y));
      traj.newton_iterations.push_back(st.iterations);
      traj.newton_refreshes.push_back(st.refreshes);
    }
    return traj;
  }

  return sat_march_coupled(op, ivp, nsteps, cfg);
}

// -------------------------------------------------------------------- dual

template <class Scalar = double>
struct DualSolution {
  Vec<Scalar> phi;
  Scalar value = Scalar(0);  ///< (phi, g)_H + phi' chi0 Y0
};

/// Discrete adjoint of one GSBP step for y' = lambda y + g:
/// (Theta' + chi0 chi0' - lambda H) phi = H k + alpha chif.
template <class Scalar>
DualSolution<Scalar> solve_dual(const GsbpOperator<Scalar>& op, Scalar lambda,
                                const Vec<Scalar>& k, Scalar alpha, const Vec<Scalar>& g,
                                Scalar y0) {
  const Eigen::Index n = op.size();
  if (k.size() != n || g.size() != n) throw InputError("dual data must be given at the nodes");
  const Mat<Scalar> Pt = op.theta.transpose() + op.proj.chi0 * op.proj.chi0.transpose() - lambda * op.H;
  Eigen::FullPivLU<Mat<Scalar>> lu(Pt);
  if (!lu.isInvertible()) throw NumericError("dual system is singular");
  DualSolution<Scalar> out;
  out.phi = lu.solve(Vec<Scalar>(op.H * k + alpha * op.proj.chif));
  out.value = out.phi.dot(op.H * g) + out.phi.dot(op.proj.chi0) * y0;
  return out;
}

/// One primal GSBP step for y' = lambda y + g with SAT data y0.
template <class Scalar>
Vec<Scalar> solve_primal(const GsbpOperator<Scalar>& op, Scalar lambda, const Vec<Scalar>& g,
                         Scalar y0) {
  const Mat<Scalar> P = op.penalized_theta() - lambda * op.H;
  Eigen::FullPivLU<Mat<Scalar>> lu(P);
  if (!lu.isInvertible()) throw NumericError("primal system is singular");
  return lu.solve(Vec<Scalar>(op.H * g + op.proj.chi0 * y0));
}

/// J_H = (k, y)_H + alpha chif' y on a single operator.
template <class Scalar>
Scalar functional(const GsbpOperator<Scalar>& op, const Vec<Scalar>& y, const Vec<Scalar>& k,
                  Scalar alpha) {
  if (y.size() != op.size() || k.size() != op.size())
    throw InputError("functional data must be given at the nodes");
  return k.dot(op.H * y) + alpha * op.proj.chif.dot(y);
}

/// Quadrature functional accumulated over a trajectory of a scalar or
/// vector problem: sum_m (k, y_m)_{H_m} + alpha' (final endpoint). H_m is
/// the operator's norm scaled to the step; k(t) returns the weight vector.
template <class Scalar>
Scalar functional(const Mat<Scalar>& H_unit, const Trajectory<Scalar>& traj,
                  const std::function<Vec<Scalar>(Scalar)>& k, const Vec<Scalar>& alpha) {
  const Eigen::Index n = H_unit.rows();
  Scalar total(0);
  for (int m = 0; m < traj.steps(); ++m) {
    const Scalar h = traj.h(m);
    const Mat<Scalar>& Y = traj.stages[m];
    if (Y.rows() != n) throw InputError("trajectory stage count differs from the norm size");
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (H_unit(i, j) != Scalar(0)) {
          const Vec<Scalar> ki = k(traj.t[m] + traj.c(i) * h);
          total += h * H_unit(i, j) * ki.dot(Vec<Scalar>(Y.row(j).transpose()));
        }
  }
  if (alpha.size() != traj.final_value().size()) throw InputError("alpha dimension mismatch");
  return total + alpha.dot(traj.final_value());
}

template <class Scalar>
Mat<Scalar> unit_norm(const GsbpOperator<Scalar>& op) {
  return op.H / op.length();
}

// ------------------------------------------------------------------- CSV

template <class Scalar>
std::string trajectory_csv(const Trajectory<Scalar>& traj) {
  std::ostringstream out;
  const Eigen::Index M = traj.y.front().size();
  out << "step,t";
  for (Eigen::Index k = 0; k < M; ++k) out << ",y" << k;
  out << ",stage_index,c_i";
  for (Eigen::Index k = 0; k < M; ++k) out << ",stage" << k;
  out << "\n";
  auto row = [&](int m, int i) {
    out << m << "," << format_double(to_double(traj.t[m]));
    for (Eigen::Index k = 0; k < M; ++k) out << "," << format_double(to_double(traj.y[m](k)));
    if (i < 0) {
      out << ",,";
      for (Eigen::Index k = 0; k < M; ++k) out << ",";
    } else {
      out << "," << i << "," << format_double(to_double(traj.c(i)));
      for (Eigen::Index k = 0; k < M; ++k)
        out << "," << format_double(to_double(traj.stages[m - 1](i, k)));
    }
    out << "\n";
  };
  row(0, -1);
  for (int m = 1; m <= traj.steps(); ++m)
    for (int i = 0; i < traj.c.size(); ++i) row(m, i);
  return out.str();
}

// ---------------------------------------------------------------- problems

template <class Scalar = double>
IvpSpec<Scalar> decay_problem(Scalar lambda = Scalar(-1), Scalar y0 = Scalar(1),
                              Scalar t0 = Scalar(0), Scalar tf = Scalar(1)) {
  IvpSpec<Scalar> p;
  p.name = "decay";
  p.kind = ProblemKind::LinearAutonomous;
  p.L = Mat<Scalar>::Constant(1, 1, lambda);
  p.y0 = Vec<Scalar>::Constant(1, y0);
  p.t0 = t0;
  p.tf = tf;
  p.exact = [=](Scalar t) {
    using std::exp;
    return Vec<Scalar>::Constant(1, y0 * exp(lambda * (t - t0)));
  };
  return p;
}

/// y' = -y^3, exact y0 / sqrt(1 + 2 y0^2 t).
template <class Scalar = double>
IvpSpec<Scalar> cubic_problem(Scalar y0 = Scalar(1), Scalar tf = Scalar(1), bool analytic_jacobian = true) {
  IvpSpec<Scalar> p;
  p.name = "cubic";
  p.kind = ProblemKind::Nonlinear;
  p.rhs = [](const Vec<Scalar>& y, Scalar) { return Vec<Scalar>(-y.array().cube()); };
  if (analytic_jacobian)
    p.jacobian = [](const Vec<Scalar>& y, Scalar) {
      return Mat<Scalar>(Vec<Scalar>(Scalar(-3) * y.array().square()).asDiagonal());
    };
  p.y0 = Vec<Scalar>::Constant(1, y0);
  p.t0 = Scalar(0);
  p.tf = tf;
  p.exact = [=](Scalar t) {
    using std::sqrt;
    return Vec<Scalar>::Constant(1, y0 / sqrt(Scalar(1) + Scalar(2) * y0 * y0 * t));
  };
  return p;
}

/// y' = lambda (y - sin t) + cos t, y(0) = 0, exact sin t.
template <class Scalar = double>
IvpSpec<Scalar> prothero_robinson(Scalar lambda = Scalar(-1e6), Scalar tf = Scalar(1)) {
  IvpSpec<Scalar> p;
  p.name = "prothero-robinson";
  p.kind = ProblemKind::LinearForced;
  p.L = Mat<Scalar>::Constant(1, 1, lambda);
  p.forcing = [=](Scalar t) {
    using std::cos;
    using std::sin;
    return Vec<Scalar>::Constant(1, -lambda * sin(t) + cos(t));
  };
  p.y0 = Vec<Scalar>::Zero(1);
  p.t0 = Scalar(0);
  p.tf = tf;
  p.exact = [](Scalar t) {
    using std::sin;
    return Vec<Scalar>::Constant(1, sin(t));
  };
  return p;
}

/// Least-squares slope of log(err) against log(h).
inline double fitted_slope(const std::vector<double>& h, const std::vector<double>& err) {
  const std::size_t n = h.size();
  if (n < 2 || err.size() != n) throw InputError("slope fit needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace gsbp

#endif  // GSBP_INTEGRATE_HPP_
