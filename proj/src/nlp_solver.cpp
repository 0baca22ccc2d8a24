#include "jumpkit/nlp_solver.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace jumpkit {

namespace {

struct AugLag {
  const NLPProblem& prob;
  VecX lambda;
  double rho;
  mutable Eigen::SparseMatrix<double> J;
  mutable VecX c_last;

  double eval(const VecX& x, VecX* grad, bool with_jacobian) const {
    VecX c(prob.num_constraints);
    prob.constraints(x, c);
    if (!c.allFinite()) throw std::runtime_error("constraint evaluation produced NaN");
    double f;
    if (grad) {
      VecX gf(x.size());
      f = prob.objective(x, &gf);
      if (with_jacobian) prob.jacobian(x, J);
      *grad = gf + J.transpose() * (lambda + rho * c);
      c_last = c;
    } else {
      f = prob.objective(x, nullptr);
    }
    if (!std::isfinite(f)) throw std::runtime_error("objective evaluation produced NaN");
    return f + lambda.dot(c) + 0.5 * rho * c.squaredNorm();
  }

  // Full evaluation: objective gradient and AL gradient, with J and c cached.
  double eval_full(const VecX& x, VecX& gf, VecX& g) const {
    VecX c(prob.num_constraints);
    prob.constraints(x, c);
    if (!c.allFinite()) throw std::runtime_error("constraint evaluation produced NaN");
    gf.resize(x.size());
    double f = prob.objective(x, &gf);
    if (!std::isfinite(f)) throw std::runtime_error("objective evaluation produced NaN");
    prob.jacobian(x, J);
    c_last = c;
    g = gf + J.transpose() * (lambda + rho * c);
    return f + lambda.dot(c) + 0.5 * rho * c.squaredNorm();
  }
};

// Inner minimizer: projected Gauss-Newton. Each step solves the
// quasi-definite KKT system
//   [ Q + sigma I   J^T      ] [dx]   [ -grad_f        ]
//   [ J             -I / rho ] [nu] = [ -c - lambda/rho ]
// which is the normal-equations step (Q + sigma I + rho J^T J) dx = -g in a
// form that stays well conditioned for large penalties. Variables pinned by
// their bounds are dropped from the system; the projected Armijo line
// search guards the cone constraints.
int inner_minimize(const AugLag& al, const NLPProblem& prob, VecX& x,
                   double gtol, int max_iter, int* fevals, bool* monotone) {
  int dbg_newton = 0, dbg_fallback = 0, dbg_reject = 0;
  const int n = static_cast<int>(x.size());
  const int m = prob.num_constraints;
  auto proj = [&](VecX v) {
    prob.project(v);
    return v;
  };

  Eigen::SparseMatrix<double> Qobj(n, n);
  if (prob.objective_hessian) prob.objective_hessian(x, Qobj);

  VecX gf(n), g(n);
  double fx = al.eval_full(x, gf, g);
  ++*fevals;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  const bool have_bounds = prob.lower_bounds.size() == n;
  double sigma = 1e-9;

  int it = 0;
  int stalls = 0;
  double fx_prev = fx;
  for (; it < max_iter; ++it) {
    VecX pg = x - proj(x - g);
    if (pg.lpNorm<Eigen::Infinity>() <= gtol) break;
    if (it > 0) {
      if (fx_prev - fx <= 1e-12 * (1.0 + std::abs(fx))) {
        if (++stalls >= 2) break;
      } else {
        stalls = 0;
      }
      fx_prev = fx;
    }

    // Cone activity: pin vertex blocks that cannot descend into the cone,
    // and collect active faces the step must slide along.
    std::vector<bool> cone_pinned(n, false);
    struct ActiveFace {
      int offset;
      Eigen::Vector3d normal;  // gradient of |xy| - mu z at the face point
    };
    std::vector<ActiveFace> faces;
    for (const auto& cb : prob.cones) {
      Eigen::Vector3d F = x.segment<3>(cb.offset);
      Eigen::Vector3d gF = g.segment<3>(cb.offset);
      double t = std::hypot(F(0), F(1));
      if (F.norm() <= 1e-9) {
        Eigen::Vector3d trial = F - gF;
        double tt = std::hypot(trial(0), trial(1));
        bool inside = tt <= cb.mu * trial(2);
        if (!inside) {
          cone_pinned[cb.offset] = cone_pinned[cb.offset + 1] =
              cone_pinned[cb.offset + 2] = true;
        }
      } else if (t >= cb.mu * F(2) - 1e-9 * (1.0 + F(2))) {
        Eigen::Vector3d nrm(F(0) / t, F(1) / t, -cb.mu);
        if (gF.dot(nrm) < 0.0) faces.push_back({cb.offset, nrm});
      }
    }

    // Mask variables held by their bounds or pinned cone vertices.
    std::vector<int> free_of;
    std::vector<int> full_to_free(n, -1);
    for (int i = 0; i < n; ++i) {
      bool pinned = cone_pinned[i];
      if (have_bounds && !pinned) {
        bool frozen = prob.lower_bounds(i) == prob.upper_bounds(i);
        bool at_lb = x(i) <= prob.lower_bounds(i) && g(i) > 0.0;
        bool at_ub = x(i) >= prob.upper_bounds(i) && g(i) < 0.0;
        pinned = frozen || at_lb || at_ub;
      }
      if (!pinned) {
        full_to_free[i] = static_cast<int>(free_of.size());
        free_of.push_back(i);
      }
    }
    const int nf = static_cast<int>(free_of.size());
    if (nf == 0) break;

    const int nfc = static_cast<int>(faces.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(Qobj.nonZeros() + 2 * al.J.nonZeros() + nf + m + 8 * nfc);
    for (int kk = 0; kk < Qobj.outerSize(); ++kk)
      for (Eigen::SparseMatrix<double>::InnerIterator itQ(Qobj, kk); itQ; ++itQ) {
        int ri = full_to_free[itQ.row()];
        int ci = full_to_free[itQ.col()];
        if (ri >= 0 && ci >= 0) trip.emplace_back(ri, ci, itQ.value());
      }
    for (int kk = 0; kk < al.J.outerSize(); ++kk)
      for (Eigen::SparseMatrix<double>::InnerIterator itJ(al.J, kk); itJ; ++itJ) {
        int ci = full_to_free[itJ.col()];
        if (ci < 0) continue;
        trip.emplace_back(nf + itJ.row(), ci, itJ.value());
        trip.emplace_back(ci, nf + itJ.row(), itJ.value());
      }
    for (int i = 0; i < m; ++i) trip.emplace_back(nf + i, nf + i, -1.0 / al.rho);
    for (int fi = 0; fi < nfc; ++fi) {
      for (int a = 0; a < 3; ++a) {
        int ci = full_to_free[faces[fi].offset + a];
        if (ci < 0) continue;
        trip.emplace_back(nf + m + fi, ci, faces[fi].normal(a));
        trip.emplace_back(ci, nf + m + fi, faces[fi].normal(a));
      }
      trip.emplace_back(nf + m + fi, nf + m + fi, -1e-10);
    }
    Eigen::SparseMatrix<double> K(nf + m + nfc, nf + m + nfc);

    // Levenberg-damped Newton: escalate the damping and re-solve when the
    // projected line search rejects the step (strong nonlinearity or the
    // step fighting variable bounds).
    bool stepped = false;
    for (int lm = 0; lm < 5 && !stepped; ++lm) {
      std::vector<Eigen::Triplet<double>> trip_lm = trip;
      for (int i = 0; i < nf; ++i) trip_lm.emplace_back(i, i, sigma);
      K.setFromTriplets(trip_lm.begin(), trip_lm.end());
      ldlt.compute(K);
      if (ldlt.info() != Eigen::Success) {
        sigma = std::max(sigma * 30.0, 1e-6);
        continue;
      }
      VecX rhs = VecX::Zero(nf + m + nfc);
      for (int i = 0; i < nf; ++i) rhs(i) = -gf(free_of[i]);
      rhs.segment(nf, m) = -al.c_last - al.lambda / al.rho;
      VecX sol = ldlt.solve(rhs);
      VecX dx = VecX::Zero(n);
      for (int i = 0; i < nf; ++i) dx(free_of[i]) = sol(i);
      if (dx.lpNorm<Eigen::Infinity>() <= 1e-12) {
        stepped = false;
        break;
      }

      double step = 1.0;
      for (int ls = 0; ls < 25; ++ls) {
        VecX x_new = proj(x + step * dx);
        VecX d = x_new - x;
        double pred = g.dot(d);
        if (pred > -1e-16) break;
        double f_new = al.eval(x_new, nullptr, false);
        ++*fevals;
        if (f_new <= fx + 1e-4 * pred) {
          if (f_new > fx) *monotone = false;
          x = x_new;
          fx = al.eval_full(x, gf, g);
          ++*fevals;
          stepped = true;
          ++dbg_newton;
          break;
        }
        step *= 0.5;
      }
      if (stepped) {
        sigma = std::max(sigma / 10.0, 1e-9);
      } else {
        sigma = std::max(sigma * 30.0, 1e-6);
      }
    }
    if (!stepped) {
      // Projected-gradient fallback; stop when even that cannot move.
      double step = 1.0 / (1.0 + al.rho);
      bool ok = false;
      for (int ls = 0; ls < 50; ++ls) {
        VecX x_new = proj(x - step * g);
        VecX d = x_new - x;
        double pred = g.dot(d);
        if (pred > -1e-18) break;
        double f_new = al.eval(x_new, nullptr, false);
        ++*fevals;
        if (f_new <= fx + 1e-4 * pred) {
          if (f_new > fx) *monotone = false;
          x = x_new;
          fx = al.eval_full(x, gf, g);
          ++*fevals;
          ok = true;
          ++dbg_fallback;
          break;
        }
        step *= 0.5;
      }
      if (!ok) break;
    }
    if (!stepped) ++dbg_reject;
  }
  if (getenv("JK_NLP_DEBUG"))
    std::printf("    inner: %d newton, %d fallback, %d reject, %d iters\n",
                dbg_newton, dbg_fallback, dbg_reject, it);
  return it;
}

}  // namespace

NLPReport solve_aug_lagrangian(const NLPProblem& prob, VecX& x,
                               const NLPOptions& opt) {
  NLPReport rep;
  prob.project(x);

  AugLag al{prob, VecX::Zero(prob.num_constraints), opt.penalty_init, {}, {}};
  VecX c(prob.num_constraints);
  prob.constraints(x, c);
  double cnorm = c.lpNorm<Eigen::Infinity>();
  double eta = std::max(0.05, 0.25 * cnorm);
  double omega = 1e-3;
  int fevals = 0;

  VecX best_x = x;
  double best_cnorm = cnorm;
  double prev_cnorm = cnorm;

  for (int outer = 0; outer < opt.max_outer; ++outer) {
    rep.outer_iterations = outer + 1;
    double gtol = std::max(omega, opt.tol_gradient);
    rep.inner_iterations +=
        inner_minimize(al, prob, x, gtol, opt.max_inner, &fevals,
                       &rep.merit_monotone);

    prob.constraints(x, c);
    cnorm = c.lpNorm<Eigen::Infinity>();
    rep.residual_history.push_back(cnorm);
    if (cnorm < best_cnorm) {
      best_cnorm = cnorm;
      best_x = x;
    }
    if (opt.verbose) {
      std::printf("  outer %2d: |c|=%.3e rho=%.1e f=%.6g inner=%d\n", outer,
                  cnorm, al.rho, prob.objective(x, nullptr),
                  rep.inner_iterations);
      std::fflush(stdout);
    }

    if (cnorm <= opt.tol_constraint && omega <= opt.tol_gradient * 1.001) {
      rep.converged = true;
      rep.termination = "converged";
      break;
    }
    // Safeguarded multiplier update: lambda moves only when the subproblem
    // made enough feasibility progress, otherwise the penalty grows.
    if (cnorm <= std::max(eta, opt.tol_constraint)) {
      al.lambda += al.rho * c;
      al.lambda = al.lambda.cwiseMax(-1e5).cwiseMin(1e5);
      eta = std::max(0.3 * eta, 0.3 * opt.tol_constraint);
    } else {
      al.rho = std::min(al.rho * opt.penalty_growth, opt.penalty_max);
    }
    omega = std::max(0.3 * omega, opt.tol_gradient);
    prev_cnorm = cnorm;
    if (al.rho >= opt.penalty_max && rep.termination.empty())
      rep.termination = "penalty limit reached";
  }
  if (!rep.converged) {
    if (best_cnorm < cnorm) x = best_x;
    if (rep.termination.empty()) rep.termination = "outer iteration limit";
  }

  prob.constraints(x, c);
  rep.constraint_norm = c.lpNorm<Eigen::Infinity>();
  VecX g(x.size());
  rep.objective = prob.objective(x, &g);
  VecX xp = x - g;
  prob.project(xp);
  rep.projected_gradient = (x - xp).lpNorm<Eigen::Infinity>();
  return rep;
}

}  // namespace jumpkit
