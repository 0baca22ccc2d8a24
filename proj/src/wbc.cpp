#include "jumpkit/wbc.hpp"

#include <chrono>
#include <cmath>

#include "jumpkit/leg_ik.hpp"

namespace jumpkit {

Vec3 linear_momentum_task(const Vec3& p_ref, const Vec3& v_ref,
                          const Vec3& a_ref, const Vec3& p, const Vec3& v,
                          const Vec3& kp, const Vec3& kd) {
  return a_ref + kp.cwiseProduct(p_ref - p) + kd.cwiseProduct(v_ref - v);
}

Vec3 torso_orientation_task(const Mat3& R_ref, const Vec3& omega_ref,
                            const Mat3& R, const Vec3& omega, const Vec3& kp,
                            const Vec3& kd) {
  Vec3 err = so3_log(R.transpose() * R_ref);
  return kp.cwiseProduct(err) + kd.cwiseProduct(omega_ref - omega);
}

Vec3 angular_momentum_damp(const Vec3& k_ang, const Vec3& kd) {
  return -kd.cwiseProduct(k_ang);
}

WBCQPResult build_and_solve_wbc(const KinematicTree& tree,
                                const Configuration& q, const VecX& v,
                                const TaskRefs& refs,
                                const std::vector<int>& contacts,
                                const WBCGains& gains, QPSolver* solver) {
  if (contacts.empty())
    throw std::invalid_argument("stance QP requires at least one contact");
  const int nv = tree.nv();
  const int nc = static_cast<int>(contacts.size());
  const int n = nv + 3 * nc;
  const double mass = tree.total_mass();

  DynamicsTerms dyn = dynamics_terms(tree, q, v);
  MatX A = centroidal_momentum_matrix(tree, q);
  Eigen::Matrix<double, 6, 1> mom = A * v;
  Vec3 com = com_position(tree, q, false);
  Mat3 R = q.base_quat.toRotationMatrix();

  // CMM product rate Adot*v by a forward difference along the motion.
  const double delta = 1e-6;
  Configuration q2 = integrate_configuration(q, v, delta);
  Eigen::Matrix<double, 6, 1> mom2 = centroidal_momentum(tree, q2, v);
  Eigen::Matrix<double, 6, 1> adot_v = (mom2 - mom) / delta;

  // Task 1: stance contacts at zero acceleration.
  MatX J1(3 * nc, nv);
  VecX b1(3 * nc);
  std::vector<MatX> Jc(nc);
  for (int j = 0; j < nc; ++j) {
    const auto& cf = tree.contact_frames[contacts[j]];
    FrameId fid{cf.link, cf.offset};
    MatX Jfull = frame_jacobian(tree, q, fid);
    Jc[j] = Jfull.topRows<3>();
    J1.middleRows<3>(3 * j) = Jc[j];
    b1.segment<3>(3 * j) = -frame_acceleration_bias(tree, q, v, fid).head<3>();
  }

  // Task 2: linear momentum tracking through the linear CMM rows.
  MatX J2 = A.topRows<3>();
  Vec3 xdd2 = linear_momentum_task(refs.com_pos, refs.com_vel, refs.com_acc,
                                   com, mom.head<3>() / mass, gains.com_kp,
                                   gains.com_kd);
  Vec3 b2 = mass * xdd2 - adot_v.head<3>();

  // Task 3: torso orientation in the body frame; the base angular rows of
  // the velocity convention are a constant selector, so Jdot*v vanishes.
  MatX J3 = MatX::Zero(3, nv);
  J3.block<3, 3>(0, 3).setIdentity();
  Vec3 b3 = torso_orientation_task(refs.torso_rot, refs.torso_omega, R,
                                   v.segment<3>(3), gains.torso_kp,
                                   gains.torso_kd);

  // Task 4: angular momentum damping through the angular CMM rows.
  MatX J4 = A.bottomRows<3>();
  Vec3 b4 = angular_momentum_damp(mom.tail<3>(), gains.ang_damp_kd) -
            adot_v.tail<3>();

  QuadraticProgram qp;
  qp.H = MatX::Zero(n, n);
  qp.g = VecX::Zero(n);
  auto add_task = [&](const MatX& J, const VecX& b, double w) {
    qp.H.topLeftCorner(nv, nv) += w * J.transpose() * J;
    qp.g.head(nv) -= w * J.transpose() * b;
  };
  add_task(J1, b1, gains.w_contact);
  add_task(J2, b2, gains.w_lin_momentum);
  add_task(J3, b3, gains.w_torso);
  add_task(J4, b4, gains.w_ang_damp);
  qp.H.topLeftCorner(nv, nv) += gains.w_accel_reg * MatX::Identity(nv, nv);
  qp.H.bottomRightCorner(3 * nc, 3 * nc) =
      gains.w_force_reg * MatX::Identity(3 * nc, 3 * nc);

  // Floating-base dynamics rows (the equality constraint).
  qp.A = MatX::Zero(6, n);
  qp.A.leftCols(nv) = dyn.H.topRows<6>();
  for (int j = 0; j < nc; ++j)
    qp.A.block<6, 3>(0, nv + 3 * j) = -Jc[j].leftCols<6>().transpose();
  qp.b = -dyn.bias.head<6>();

  // Inscribed friction pyramid per contact.
  const double mu_lin = gains.friction / std::sqrt(2.0);
  qp.C = MatX::Zero(4 * nc, n);
  qp.d = VecX::Zero(4 * nc);
  for (int j = 0; j < nc; ++j) {
    int r = 4 * j, c = nv + 3 * j;
    qp.C(r + 0, c + 0) = 1.0;
    qp.C(r + 0, c + 2) = -mu_lin;
    qp.C(r + 1, c + 0) = -1.0;
    qp.C(r + 1, c + 2) = -mu_lin;
    qp.C(r + 2, c + 1) = 1.0;
    qp.C(r + 2, c + 2) = -mu_lin;
    qp.C(r + 3, c + 1) = -1.0;
    qp.C(r + 3, c + 2) = -mu_lin;
  }

  QPOptions opt;
  opt.tol = 1e-7;
  WBCQPResult out;
  out.qp = solver ? solver->solve(qp, opt) : solve_qp(qp, opt);
  out.qdd = out.qp.x.head(nv);
  out.forces = out.qp.x.tail(3 * nc);

  // Eq-(22)-style torque retrieval from the joint rows.
  const int nj = tree.njoints();
  out.tau_ff = dyn.H.bottomRows(nj) * out.qdd + dyn.bias.tail(nj);
  for (int j = 0; j < nc; ++j)
    out.tau_ff -= Jc[j].rightCols(nj).transpose() * out.forces.segment<3>(3 * j);

  out.contact_task_residual = (J1 * out.qdd - b1).norm();
  out.base_dynamics_residual =
      (qp.A * out.qp.x - qp.b).lpNorm<Eigen::Infinity>();
  out.task_residuals[0] = out.contact_task_residual;
  out.task_residuals[1] = (J2 * out.qdd - b2).norm();
  out.task_residuals[2] = (J3 * out.qdd - b3).norm();
  out.task_residuals[3] = (J4 * out.qdd - b4).norm();
  return out;
}

WBCController::WBCController(const KinematicTree& tree, const WBCGains& gains,
                             double dt_control)
    : tree_(tree), gains_(gains), dt_(dt_control) {
  const int nj = tree_.njoints();
  if (gains_.joint_kp.size() == 0) gains_.joint_kp = VecX::Constant(nj, 60.0);
  if (gains_.joint_kd.size() == 0) gains_.joint_kd = VecX::Constant(nj, 2.0);
  last_tau_ff_ = VecX::Zero(nj);
}

void WBCController::reset() {
  last_tau_ff_.setZero();
  hold_count_ = 0;
  have_prev_flight_ = false;
}

WBCTickResult WBCController::stance_tick(const Configuration& q, const VecX& v,
                                         const TaskRefs& refs,
                                         const std::vector<int>& contacts,
                                         const VecX& q_des,
                                         const VecX& qd_des) {
  const int nj = tree_.njoints();
  WBCTickResult out;
  auto t0 = std::chrono::steady_clock::now();
  WBCQPResult sol = build_and_solve_wbc(tree_, q, v, refs, contacts, gains_, &qp_);
  auto t1 = std::chrono::steady_clock::now();
  out.qp_seconds = std::chrono::duration<double>(t1 - t0).count();
  out.qp_status = sol.qp.status;
  out.qp_iterations = sol.qp.iterations;

  VecX tau_ff;
  if (sol.qp.status == QPStatus::Optimal) {
    tau_ff = sol.tau_ff;
    last_tau_ff_ = tau_ff;
    hold_count_ = 0;
    out.qdd = sol.qdd;
    out.forces = sol.forces;
    out.contact_task_residual = sol.contact_task_residual;
    out.base_dynamics_residual = sol.base_dynamics_residual;
    out.task_residuals = sol.task_residuals;
  } else {
    // Hold the last feasible feedforward for a few ticks, then fall back to
    // pure joint PD.
    out.fallback = true;
    ++hold_count_;
    tau_ff = (hold_count_ <= gains_.fallback_ticks) ? last_tau_ff_
                                                    : VecX::Zero(nj);
  }

  out.cmd.tau_ff = tau_ff;
  out.cmd.q_des = q_des;
  out.cmd.qd_des = qd_des;
  out.cmd.kp = gains_.joint_kp;
  out.cmd.kd = gains_.joint_kd;
  out.cmd.tau_des =
      tau_ff + gains_.joint_kp.cwiseProduct(q_des - q.joint_pos) +
      gains_.joint_kd.cwiseProduct(qd_des - v.tail(nj));
  have_prev_flight_ = false;
  return out;
}

WBCTickResult WBCController::flight_tick(
    const Configuration& q, const VecX& v,
    const std::array<FootTarget, 2>& foot_targets) {
  const int nj = tree_.njoints();
  WBCTickResult out;
  VecX q_des(nj), qd_des = VecX::Zero(nj);
  for (int s = 0; s < 2; ++s) {
    LegIKResult ik = leg_ik(tree_, s, foot_targets[s].pos);
    out.ik_clamped = out.ik_clamped || ik.clamped;
    q_des.segment<5>(5 * s) = ik.angles;
  }
  if (have_prev_flight_) qd_des = (q_des - prev_flight_qdes_) / dt_;
  prev_flight_qdes_ = q_des;
  have_prev_flight_ = true;

  out.cmd.tau_ff = VecX::Zero(nj);
  out.cmd.q_des = q_des;
  out.cmd.qd_des = qd_des;
  out.cmd.kp = gains_.joint_kp;
  out.cmd.kd = gains_.joint_kd;
  out.cmd.tau_des = gains_.joint_kp.cwiseProduct(q_des - q.joint_pos) +
                    gains_.joint_kd.cwiseProduct(qd_des - v.tail(nj));
  return out;
}

}  // namespace jumpkit
