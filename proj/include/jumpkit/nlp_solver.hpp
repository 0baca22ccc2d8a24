#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <string>
#include <vector>

#include "jumpkit/spatial.hpp"

namespace jumpkit {

/// Equality-constrained problem over a projectable set:
///   min f(x)  s.t.  c(x) = 0,  x in Omega,
/// where Omega is handled by an exact projection (boxes, friction cones).
struct NLPProblem {
  int num_vars = 0;
  int num_constraints = 0;
  std::function<double(const VecX& x, VecX* grad)> objective;
  /// Sparse objective Hessian (the cost is quadratic); used by the
  /// Gauss-Newton inner step.
  std::function<void(const VecX& x, Eigen::SparseMatrix<double>& H)>
      objective_hessian;
  std::function<void(const VecX& x, VecX& c)> constraints;
  std::function<void(const VecX& x, Eigen::SparseMatrix<double>& J)> jacobian;
  std::function<void(VecX& x)> project;
  // Box bounds, used to mask pinned variables out of the Newton system.
  // project() remains authoritative (it may also enforce cones).
  VecX lower_bounds, upper_bounds;
  // Second-order cone blocks |(x0,x1)| <= mu * x2 living inside x; the
  // Newton step treats active faces and vertices explicitly.
  struct ConeBlock {
    int offset = 0;
    double mu = 0.5;
  };
  std::vector<ConeBlock> cones;
};

struct NLPOptions {
  double tol_constraint = 1e-4;
  double tol_gradient = 1e-5;
  int max_outer = 40;
  int max_inner = 80;
  double penalty_init = 10.0;
  double penalty_growth = 6.0;
  double penalty_max = 1e8;
  bool verbose = false;
};

struct NLPReport {
  bool converged = false;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double constraint_norm = 0.0;   // final ||c||_inf
  double projected_gradient = 0.0;
  double objective = 0.0;
  bool merit_monotone = true;  // accepted inner iterates never increased L
  std::string termination;
  std::vector<double> residual_history;  // ||c||_inf per outer iteration
};

/// Augmented-Lagrangian outer loop with a projected Gauss-Newton inner
/// minimizer (sparse normal equations with Levenberg damping).
/// x is both the initial guess and the returned iterate (best found when not
/// converged).
NLPReport solve_aug_lagrangian(const NLPProblem& prob, VecX& x,
                               const NLPOptions& opt = {});

}  // namespace jumpkit
