#include "jumpkit/qp.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace jumpkit {

namespace {

void kkt_residuals(const QuadraticProgram& qp, QPSolution& s) {
  VecX stat = qp.H * s.x + qp.g;
  if (qp.me() > 0) stat += qp.A.transpose() * s.lambda_eq;
  if (qp.mi() > 0) stat += qp.C.transpose() * s.nu_ineq;
  s.stationarity = stat.lpNorm<Eigen::Infinity>();
  s.primal_eq = qp.me() > 0 ? (qp.A * s.x - qp.b).lpNorm<Eigen::Infinity>() : 0.0;
  if (qp.mi() > 0) {
    VecX slack = qp.C * s.x - qp.d;
    s.primal_ineq = std::max(0.0, slack.maxCoeff());
    s.complementarity = std::abs(s.nu_ineq.dot(slack));
  } else {
    s.primal_ineq = 0.0;
    s.complementarity = 0.0;
  }
  s.objective = 0.5 * s.x.dot(qp.H * s.x) + qp.g.dot(s.x);
}

// Equality-constrained KKT solve with the given active inequality rows;
// returns false if the system is singular or the result fails the checks.
bool try_polish(const QuadraticProgram& qp, const std::vector<int>& active,
                double tol, QPSolution& s) {
  const int n = qp.n(), me = qp.me();
  const int ma = static_cast<int>(active.size());
  const int dim = n + me + ma;
  MatX K = MatX::Zero(dim, dim);
  VecX rhs(dim);
  K.topLeftCorner(n, n) = qp.H;
  rhs.head(n) = -qp.g;
  if (me > 0) {
    K.block(n, 0, me, n) = qp.A;
    K.block(0, n, n, me) = qp.A.transpose();
    rhs.segment(n, me) = qp.b;
  }
  for (int i = 0; i < ma; ++i) {
    K.block(n + me + i, 0, 1, n) = qp.C.row(active[i]);
    K.block(0, n + me + i, n, 1) = qp.C.row(active[i]).transpose();
    rhs(n + me + i) = qp.d(active[i]);
  }
  Eigen::PartialPivLU<MatX> lu(K);
  VecX sol = lu.solve(rhs);
  if (!sol.allFinite()) return false;
  if ((K * sol - rhs).lpNorm<Eigen::Infinity>() > 1e-8 * (1.0 + rhs.lpNorm<Eigen::Infinity>()))
    return false;

  VecX x = sol.head(n);
  VecX nu = VecX::Zero(qp.mi());
  for (int i = 0; i < ma; ++i) nu(active[i]) = sol(n + me + i);
  // Dual feasibility of active rows and primal feasibility of the rest.
  for (int i = 0; i < ma; ++i)
    if (nu(active[i]) < -tol) return false;
  if (qp.mi() > 0) {
    VecX slack = qp.C * x - qp.d;
    for (int i = 0; i < qp.mi(); ++i)
      if (slack(i) > tol) return false;
  }
  for (int i = 0; i < qp.mi(); ++i) nu(i) = std::max(nu(i), 0.0);
  s.x = x;
  s.lambda_eq = sol.segment(n, me);
  s.nu_ineq = nu;
  s.polished = true;
  return true;
}

}  // namespace

QPSolution QPSolver::solve(const QuadraticProgram& qp, const QPOptions& opt) {
  const int n = qp.n();
  const int me = qp.me();
  const int mi = qp.mi();
  const int m = me + mi;
  if (qp.H.rows() != n || qp.H.cols() != n)
    throw std::invalid_argument("H dimension mismatch");
  if ((me > 0 && qp.A.cols() != n) || (mi > 0 && qp.C.cols() != n))
    throw std::invalid_argument("constraint dimension mismatch");

  MatX H = 0.5 * (qp.H + qp.H.transpose());
  {
    Eigen::LLT<MatX> chk(H + 1e-12 * MatX::Identity(n, n));
    if (chk.info() != Eigen::Success)
      throw std::invalid_argument("H must be positive definite after symmetrization");
  }

  QPSolution s;
  s.lambda_eq = VecX::Zero(me);
  s.nu_ineq = VecX::Zero(mi);

  if (m == 0) {
    s.x = H.ldlt().solve(-qp.g);
    s.status = QPStatus::Optimal;
    s.iterations = 1;
    kkt_residuals(qp, s);
    return s;
  }

  MatX M(m, n);
  if (me > 0) M.topRows(me) = qp.A;
  if (mi > 0) M.bottomRows(mi) = qp.C;
  const double kInf = std::numeric_limits<double>::infinity();
  VecX lo(m), hi(m);
  if (me > 0) {
    lo.head(me) = qp.b;
    hi.head(me) = qp.b;
  }
  if (mi > 0) {
    lo.tail(mi).setConstant(-kInf);
    hi.tail(mi) = qp.d;
  }

  VecX rho(m);
  rho.setConstant(opt.rho);
  if (me > 0) rho.head(me).setConstant(opt.rho * 1e3);

  VecX x = VecX::Zero(n), y = VecX::Zero(m);
  if (opt.warm_start && opt.warm_x.size() == n) x = opt.warm_x;
  if (opt.warm_start && opt.warm_y.size() == m) y = opt.warm_y;
  VecX z = M * x;
  z = z.cwiseMax(lo).cwiseMin(hi);

  auto factorize = [&]() {
    MatX K = H + opt.sigma * MatX::Identity(n, n) +
             M.transpose() * rho.asDiagonal() * M;
    llt_.compute(K);
  };
  factorize();

  VecX y_prev = y;
  int it = 0;
  bool converged = false;
  for (it = 1; it <= opt.max_iter; ++it) {
    VecX rhs = opt.sigma * x - qp.g + M.transpose() * (rho.asDiagonal() * z - y);
    VecX xt = llt_.solve(rhs);
    VecX zt = M * xt;
    x = opt.alpha * xt + (1.0 - opt.alpha) * x;
    VecX z_in = opt.alpha * zt + (1.0 - opt.alpha) * z;
    VecX z_new = (z_in + y.cwiseQuotient(rho)).cwiseMax(lo).cwiseMin(hi);
    y = y + rho.asDiagonal() * (z_in - z_new);
    z = z_new;

    if (it % 10 == 0 || it == opt.max_iter) {
      VecX Mx = M * x;
      double r_prim = (Mx - z).lpNorm<Eigen::Infinity>();
      VecX dual = H * x + qp.g + M.transpose() * y;
      double r_dual = dual.lpNorm<Eigen::Infinity>();
      double sp = std::max(Mx.lpNorm<Eigen::Infinity>(), z.lpNorm<Eigen::Infinity>());
      double sd = std::max({(H * x).lpNorm<Eigen::Infinity>(),
                            qp.g.lpNorm<Eigen::Infinity>(),
                            (M.transpose() * y).lpNorm<Eigen::Infinity>()});
      if (r_prim <= opt.tol * (1.0 + sp) && r_dual <= opt.tol * (1.0 + sd)) {
        converged = true;
        break;
      }
      // Primal infeasibility certificate heuristic on the dual increment.
      VecX dy = y - y_prev;
      double dyn = dy.lpNorm<Eigen::Infinity>();
      if (dyn > 1e-12) {
        VecX dyn_v = dy / dyn;
        double support = 0.0;
        for (int i = 0; i < m; ++i) {
          if (dyn_v(i) > 0)
            support += std::isfinite(hi(i)) ? hi(i) * dyn_v(i) : kInf;
          else
            support += std::isfinite(lo(i)) ? lo(i) * dyn_v(i) : -0.0;
        }
        if ((M.transpose() * dyn_v).lpNorm<Eigen::Infinity>() < 1e-7 &&
            support < -1e-7) {
          s.x = x;
          s.status = QPStatus::Infeasible;
          s.iterations = it;
          kkt_residuals(qp, s);
          return s;
        }
      }
      y_prev = y;
      // Residual-balancing penalty restart.
      if (it % 100 == 0 && r_prim > 0 && r_dual > 0) {
        double ratio = std::sqrt((r_prim / (sp + 1e-12)) / (r_dual / (sd + 1e-12)));
        ratio = std::clamp(ratio, 0.2, 5.0);
        if (ratio < 0.5 || ratio > 2.0) {
          rho *= ratio;
          factorize();
        }
      }
    }
  }

  s.x = x;
  s.lambda_eq = y.head(me);
  s.nu_ineq = mi > 0 ? y.tail(mi).cwiseMax(0.0).eval() : VecX();
  s.iterations = std::min(it, opt.max_iter);
  s.status = converged ? QPStatus::Optimal : QPStatus::MaxIter;

  if (opt.polish && mi > 0) {
    std::vector<int> active;
    VecX slack = qp.C * x - qp.d;
    for (int i = 0; i < mi; ++i)
      if (y(me + i) > opt.tol || slack(i) > -10 * opt.tol) active.push_back(i);
    QPSolution polished = s;
    if (try_polish(qp, active, opt.tol, polished)) {
      polished.status = QPStatus::Optimal;
      polished.iterations = s.iterations;
      kkt_residuals(qp, polished);
      return polished;
    }
  } else if (opt.polish && me > 0) {
    QPSolution polished = s;
    if (try_polish(qp, {}, opt.tol, polished)) {
      polished.status = QPStatus::Optimal;
      polished.iterations = s.iterations;
      kkt_residuals(qp, polished);
      return polished;
    }
  }
  kkt_residuals(qp, s);
  return s;
}

QPSolution solve_qp(const QuadraticProgram& qp, const QPOptions& opt) {
  QPSolver solver;
  return solver.solve(qp, opt);
}

namespace {

void write_matrix(std::ostream& os, const std::string& name, const MatX& M) {
  os << name << " " << M.rows() << " " << M.cols() << "\n";
  for (int i = 0; i < M.rows(); ++i) {
    for (int j = 0; j < M.cols(); ++j) {
      os << (j ? " " : "");
      char buf[32];
      snprintf(buf, sizeof(buf), "%.17g", M(i, j));
      os << buf;
    }
    os << "\n";
  }
}

MatX read_matrix(std::istream& is, const std::string& expect) {
  std::string name;
  int rows, cols;
  if (!(is >> name >> rows >> cols) || name != expect)
    throw std::runtime_error("qp dump: expected section " + expect);
  MatX M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (!(is >> M(i, j))) throw std::runtime_error("qp dump: truncated " + expect);
  return M;
}

}  // namespace

void dump_qp(const QuadraticProgram& qp, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "jumpkit_qp_v1\n";
  write_matrix(f, "H", qp.H);
  write_matrix(f, "g", qp.g);
  write_matrix(f, "A", qp.A);
  write_matrix(f, "b", qp.b);
  write_matrix(f, "C", qp.C);
  write_matrix(f, "d", qp.d);
}

QuadraticProgram load_qp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string magic;
  f >> magic;
  if (magic != "jumpkit_qp_v1") throw std::runtime_error("bad qp dump header");
  QuadraticProgram qp;
  qp.H = read_matrix(f, "H");
  qp.g = read_matrix(f, "g");
  qp.A = read_matrix(f, "A");
  qp.b = read_matrix(f, "b");
  qp.C = read_matrix(f, "C");
  qp.d = read_matrix(f, "d");
  return qp;
}

}  // namespace jumpkit
