#pragma once

#include <string>

#include "jumpkit/spatial.hpp"

namespace jumpkit {

/// min 1/2 x'Hx + g'x  s.t.  Ax = b,  Cx <= d.
struct QuadraticProgram {
  MatX H;
  VecX g;
  MatX A;
  VecX b;
  MatX C;
  VecX d;

  int n() const { return static_cast<int>(g.size()); }
  int me() const { return static_cast<int>(b.size()); }
  int mi() const { return static_cast<int>(d.size()); }
};

enum class QPStatus { Optimal, MaxIter, Infeasible };

struct QPSolution {
  VecX x;
  VecX lambda_eq;  // equality duals
  VecX nu_ineq;    // inequality duals, >= 0 at optimum
  QPStatus status = QPStatus::MaxIter;
  int iterations = 0;
  bool polished = false;
  // KKT residuals at the returned point.
  double stationarity = 0.0;
  double primal_eq = 0.0;
  double primal_ineq = 0.0;
  double complementarity = 0.0;
  double objective = 0.0;
};

struct QPOptions {
  double tol = 1e-6;
  int max_iter = 4000;
  bool polish = true;
  double rho = 0.1;      // base ADMM penalty; equality rows get 1e3x
  double sigma = 1e-6;   // proximal regularization
  double alpha = 1.6;    // over-relaxation
  bool warm_start = false;
  VecX warm_x;
  VecX warm_y;  // stacked duals [eq; ineq]
};

/// Operator-splitting solver with an active-set polish step. Holds reusable
/// workspace; one instance per caller.
class QPSolver {
 public:
  QPSolution solve(const QuadraticProgram& qp, const QPOptions& opt = {});

 private:
  // Cached KKT factorization, reused while the matrix is unchanged.
  Eigen::LLT<MatX> llt_;
};

QPSolution solve_qp(const QuadraticProgram& qp, const QPOptions& opt = {});

/// Plain-text dump (sections H, g, A, b, C, d) for offline reproduction of a
/// failing tick.
void dump_qp(const QuadraticProgram& qp, const std::string& path);
QuadraticProgram load_qp(const std::string& path);

}  // namespace jumpkit
