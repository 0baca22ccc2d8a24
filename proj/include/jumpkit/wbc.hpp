#pragma once

#include <array>

#include "jumpkit/landing.hpp"
#include "jumpkit/model.hpp"
#include "jumpkit/qp.hpp"

namespace jumpkit {

/// Weighted-hierarchy whole-body QP gains and weights. Priorities are
/// enforced through the weight ordering w_contact >> w_lin_momentum >>
/// w_torso >> w_ang_damp > 0.
struct WBCGains {
  Vec3 com_kp = Vec3::Constant(120.0);
  Vec3 com_kd = Vec3::Constant(15.0);
  Vec3 torso_kp = Vec3::Constant(200.0);
  Vec3 torso_kd = Vec3::Constant(20.0);
  Vec3 ang_damp_kd = Vec3::Constant(5.0);
  double w_contact = 1e4;
  double w_lin_momentum = 1e2;
  double w_torso = 1e1;
  double w_ang_damp = 1e0;
  double w_force_reg = 1e-3;
  double w_accel_reg = 1e-3;
  VecX joint_kp;  // Eq-(20)-style joint PD, size n_j
  VecX joint_kd;
  double friction = 0.5;
  int fallback_ticks = 3;  // hold last feedforward on QP failure
};

/// References for the stance-phase tasks, taken from the planned trajectory.
struct TaskRefs {
  Vec3 com_pos = Vec3::Zero();
  Vec3 com_vel = Vec3::Zero();
  Vec3 com_acc = Vec3::Zero();
  Mat3 torso_rot = Mat3::Identity();
  Vec3 torso_omega = Vec3::Zero();  // body frame
};

struct JointCommand {
  VecX tau_ff;
  VecX q_des;
  VecX qd_des;
  VecX kp, kd;
  VecX tau_des;  // tau_ff + kp (q_des - q) + kd (qd_des - qd)
};

struct WBCTickResult {
  JointCommand cmd;
  VecX qdd;         // solved generalized acceleration (stance only)
  VecX forces;      // stacked active contact forces
  QPStatus qp_status = QPStatus::Optimal;
  int qp_iterations = 0;
  double qp_seconds = 0.0;
  bool fallback = false;
  bool ik_clamped = false;
  double contact_task_residual = 0.0;
  double base_dynamics_residual = 0.0;
  std::array<double, 4> task_residuals = {0, 0, 0, 0};
};

/// Feedback part of Eq-(23)-style linear momentum task: desired COM
/// acceleration from references and current state.
Vec3 linear_momentum_task(const Vec3& p_ref, const Vec3& v_ref,
                          const Vec3& a_ref, const Vec3& p, const Vec3& v,
                          const Vec3& kp, const Vec3& kd);

/// Desired angular acceleration from the orientation error log map, zero
/// reference angular acceleration.
Vec3 torso_orientation_task(const Mat3& R_ref, const Vec3& omega_ref,
                            const Mat3& R, const Vec3& omega, const Vec3& kp,
                            const Vec3& kd);

/// Damping of excessive centroidal angular momentum.
Vec3 angular_momentum_damp(const Vec3& k_ang, const Vec3& kd);

struct WBCQPResult {
  VecX qdd;
  VecX forces;
  VecX tau_ff;
  QPSolution qp;
  double contact_task_residual = 0.0;
  double base_dynamics_residual = 0.0;
  std::array<double, 4> task_residuals = {0, 0, 0, 0};
};

/// Assembles and solves the stance whole-body QP over (qdd, f): weighted
/// tasks 1-4 in the cost, floating-base dynamics as equality, friction
/// pyramids per contact, then retrieves joint feedforward torques from the
/// joint rows of the dynamics.
WBCQPResult build_and_solve_wbc(const KinematicTree& tree,
                                const Configuration& q, const VecX& v,
                                const TaskRefs& refs,
                                const std::vector<int>& contacts,
                                const WBCGains& gains, QPSolver* solver);

/// Per-tick sequential controller: stance/landing ticks run the QP with the
/// joint PD on top; flight ticks are pure joint PD on IK targets with zero
/// feedforward. Holds fallback state across ticks.
class WBCController {
 public:
  WBCController(const KinematicTree& tree, const WBCGains& gains,
                double dt_control);

  WBCTickResult stance_tick(const Configuration& q, const VecX& v,
                            const TaskRefs& refs,
                            const std::vector<int>& contacts,
                            const VecX& q_des, const VecX& qd_des);

  /// foot_targets are sole-center targets per leg in the base frame.
  WBCTickResult flight_tick(const Configuration& q, const VecX& v,
                            const std::array<FootTarget, 2>& foot_targets);

  void reset();

 private:
  KinematicTree tree_;
  WBCGains gains_;
  double dt_;
  QPSolver qp_;
  VecX last_tau_ff_;
  int hold_count_ = 0;
  VecX prev_flight_qdes_;
  bool have_prev_flight_ = false;
};

}  // namespace jumpkit
