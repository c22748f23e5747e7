#ifndef GSBP_CONVECTION_HPP_
#define GSBP_CONVECTION_HPP_

// Linear convection u_t = -u_x on [0, 2] with periodic boundaries,
// discretized in space by a multiblock GSBP-SAT operator, plus the error
// measures used to compare time-marching schemes on it.

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "gsbp/integrate.hpp"
#include "gsbp/operator.hpp"
#include "gsbp/tableau.hpp"

namespace gsbp {

inline constexpr double kDomainLength = 2.0;

/// Semi-discrete system Y' = A Y.
struct SpatialDisc {
  int nblocks = 0;
  int nodes_per_block = 0;
  MatD A;   ///< system matrix, units 1/time
  MatD Hs;  ///< global spatial norm, block diagonal
  VecD x;   ///< grid coordinates

  Eigen::Index size() const { return x.size(); }
  Eigen::Index block_start(int k) const { return static_cast<Eigen::Index>(k) * nodes_per_block; }

  double norm(const VecD& v) const { return std::sqrt(std::max(0.0, v.dot(Hs * v))); }

  IvpSpec<double> ivp(const VecD& y0, double T) const {
    IvpSpec<double> p;
    p.name = "convection";
    p.kind = ProblemKind::LinearAutonomous;
    p.L = A;
    p.y0 = y0;
    p.t0 = 0.0;
    p.tf = T;
    return p;
  }
};

/// Each block carries -D plus an upwind SAT at its inflow (left) end,
/// sigma = -1, coupling to the right end of the previous block; the last
/// block feeds the first.
inline SpatialDisc assemble_advection(int nblocks, int nodes_per_block,
                                      NodeFamily family = NodeFamily::Gauss) {
  if (nblocks < 2) throw InputError("advection needs at least two blocks");
  const auto ref = build_family_operator<double>(family, nodes_per_block);
  const int n = nodes_per_block;
  const double dx = kDomainLength / nblocks;

  SpatialDisc disc;
  disc.nblocks = nblocks;
  disc.nodes_per_block = n;
  const Eigen::Index N = static_cast<Eigen::Index>(nblocks) * n;
  disc.A = MatD::Zero(N, N);
  disc.Hs = MatD::Zero(N, N);
  disc.x.resize(N);

  const auto op = rescale(ref, 0.0, dx);
  const VecD& chiL = op.proj.chi0;
  const VecD& chiR = op.proj.chif;
  const auto Hlu = op.H.fullPivLu();
  const MatD diag_block = -op.D - Hlu.solve(MatD(chiL * chiL.transpose()));
  const MatD coupling = Hlu.solve(MatD(chiL * chiR.transpose()));

  for (int k = 0; k < nblocks; ++k) {
    const Eigen::Index s = disc.block_start(k);
    const Eigen::Index prev = disc.block_start((k + nblocks - 1) % nblocks);
    disc.A.block(s, s, n, n) = diag_block;
    disc.A.block(s, prev, n, n) += coupling;
    disc.Hs.block(s, s, n, n) = op.H;
    disc.x.segment(s, n) = op.t.array() + k * dx;
  }
  return disc;
}

/// The state sin(2 pi x) sampled on the grid.
inline VecD sine_state(const SpatialDisc& disc) {
  return (2.0 * std::numbers::pi * disc.x.array()).sin().matrix();
}

/// exp(A t) y0 by scaling and squaring with a degree-13 Pade approximant.
/// Propagators are cached per time increment, so sampling a uniform grid
/// costs one exponential per distinct increment.
class ExactSolution {
 public:
  ExactSolution(const SpatialDisc& disc, VecD y0) : A_(disc.A), y0_(std::move(y0)) {
    if (y0_.size() != A_.rows()) throw InputError("initial state size differs from the system");
  }
  ExactSolution(MatD A, VecD y0) : A_(std::move(A)), y0_(std::move(y0)) {
    if (y0_.size() != A_.rows()) throw InputError("initial state size differs from the system");
  }

  const MatD& propagator(double dt) {
    auto it = cache_.find(dt);
    if (it == cache_.end()) it = cache_.emplace(dt, MatD((A_ * dt).exp())).first;
    return it->second;
  }

  VecD at(double t) {
    if (t < 0.0) throw InputError("exact solution needs t >= 0");
    if (t == 0.0) return y0_;
    return propagator(t) * y0_;
  }

  /// Exact values at the step boundaries and stage times of a trajectory.
  /// Boundary values are propagated step to step.
  struct Samples {
    std::vector<VecD> y;               ///< at traj.t
    std::vector<std::vector<VecD>> stages;  ///< [step][stage]
  };

  Samples sample(const Trajectory<double>& traj) {
    Samples s;
    s.y.push_back(y0_);
    for (int m = 0; m < traj.steps(); ++m) {
      const double h = traj.h(m);
      std::vector<VecD> st;
      for (Eigen::Index k = 0; k < traj.c.size(); ++k) {
        const double dt = traj.c(k) * h;
        st.push_back(dt == 0.0 ? s.y.back() : VecD(propagator(dt) * s.y.back()));
      }
      s.stages.push_back(std::move(st));
      s.y.push_back(propagator(h) * s.y.back());
    }
    return s;
  }

 private:
  MatD A_;
  VecD y0_;
  std::map<double, MatD> cache_;
};

inline VecD exact_solution(const SpatialDisc& disc, const VecD& y0, double t) {
  ExactSolution ex(disc, y0);
  return ex.at(t);
}

/// Temporal weight of a scheme on a unit step: the GSBP norm when the
/// scheme comes from an operator, diag(b) otherwise.
inline MatD stage_weight(const ButcherTableau<double>& tab, const GsbpOperator<double>* op) {
  if (op) return unit_norm(*op);
  return tab.b.asDiagonal();
}

struct ErrorMeasures {
  double e_stage = 0.0;  ///< NaN when the stage weight is indefinite
  double e_step = 0.0;
  bool stage_norm_indefinite = false;
};

/// e_stage = ||e||_B with e_(j,k) the H_s-norm of the stage error and B
/// block diagonal with blocks h_j W; e_step = ||y_N - Y(T)||_{H_s}.
inline ErrorMeasures error_measures(const SpatialDisc& disc, const Trajectory<double>& traj,
                                    const MatD& W, ExactSolution& exact) {
  if (traj.steps() < 1 || static_cast<int>(traj.stages.size()) != traj.steps())
    throw InputError("trajectory has no stage records");
  const Eigen::Index n = traj.c.size();
  if (W.rows() != n || W.cols() != n) throw InputError("stage weight size differs from stage count");
  for (const auto& st : traj.stages)
    if (st.rows() != n || st.cols() != disc.size())
      throw InputError("stage record has the wrong shape");

  const auto ex = exact.sample(traj);
  ErrorMeasures out;
  const MatD Wsym = 0.5 * (W + W.transpose());
  const Eigen::SelfAdjointEigenSolver<MatD> es(Wsym, Eigen::EigenvaluesOnly);
  out.stage_norm_indefinite = es.eigenvalues().minCoeff() < 0.0;

  double sum = 0.0;
  for (int m = 0; m < traj.steps(); ++m) {
    VecD e(n);
    for (Eigen::Index k = 0; k < n; ++k)
      e(k) = disc.norm(VecD(traj.stages[m].row(k).transpose() - ex.stages[m][k]));
    sum += traj.h(m) * e.dot(Wsym * e);
  }
  out.e_stage = out.stage_norm_indefinite ? std::nan("") : std::sqrt(sum);
  out.e_step = disc.norm(VecD(traj.final_value() - ex.y.back()));
  return out;
}

}  // namespace gsbp

#endif  // GSBP_CONVECTION_HPP_
