#include "jumpkit/estimator.hpp"

#include <cmath>

#include "jumpkit/leg_ik.hpp"

namespace jumpkit {

StateEstimator::StateEstimator(const KinematicTree& tree,
                               const EstimatorParams& params, double dt,
                               const Configuration& q0, const VecX& v0,
                               std::function<double(double, double)> terrain)
    : tree_(tree), params_(params), dt_(dt), terrain_(std::move(terrain)) {
  if (!terrain_) terrain_ = [](double, double) { return 0.0; };
  base_.orientation = q0.base_quat;
  base_.position = q0.base_pos;
  base_.velocity = v0.head<3>();
  base_.angular_velocity = v0.segment<3>(3);
  joint_pos_ = q0.joint_pos;
  joint_vel_ = v0.tail(tree_.njoints());
}

EstimatedBase StateEstimator::update(const SensorReadings& sensors) {
  // Encoder joints and low-passed finite-difference joint rates.
  if (have_prev_) {
    VecX raw = (sensors.encoders - prev_encoders_) / dt_;
    joint_vel_ = params_.joint_vel_lp * joint_vel_ +
                 (1.0 - params_.joint_vel_lp) * raw;
  }
  prev_encoders_ = sensors.encoders;
  have_prev_ = true;
  joint_pos_ = sensors.encoders;

  // Orientation: gyro integration, tilted toward the accelerometer gravity
  // direction when the specific force is close to 1 g.
  base_.orientation = quat_integrate(base_.orientation, sensors.gyro, dt_);
  double an = sensors.accel.norm();
  if (an > 0.5 * kGravity && an < 1.5 * kGravity) {
    Mat3 R = base_.orientation.toRotationMatrix();
    Vec3 pred_up = R.transpose() * Vec3::UnitZ();
    Vec3 meas_up = sensors.accel / an;
    Vec3 corr = meas_up.cross(pred_up);
    base_.orientation =
        base_.orientation * quat_exp((1.0 - params_.alpha_orientation) * corr);
    base_.orientation.normalize();
  }
  base_.angular_velocity = sensors.gyro;

  // Inertial velocity/position propagation.
  Mat3 R = base_.orientation.toRotationMatrix();
  Vec3 acc_world = R * sensors.accel + Vec3(0, 0, -kGravity);
  base_.velocity += dt_ * acc_world;
  base_.position += dt_ * base_.velocity;

  // Leg odometry from feet whose toe and heel switches are both closed.
  int n_stance = 0;
  Vec3 vel_ref = Vec3::Zero();
  double z_ref = 0.0;
  Vec3 omega_world = R * base_.angular_velocity;
  for (int s = 0; s < 2; ++s) {
    // Switch state per foot, resolved through the toe_/heel_ frame names.
    bool toe = false, heel = false, any = false;
    for (size_t c = 0; c < tree_.contact_frames.size(); ++c) {
      const auto& name = tree_.contact_frames[c].name;
      bool left = name.find("_L") != std::string::npos;
      if ((s == 0) != left) continue;
      any = true;
      if (name.rfind("toe", 0) == 0) toe = sensors.contact_switch[c];
      if (name.rfind("heel", 0) == 0) heel = sensors.contact_switch[c];
    }
    if (!any || !(toe && heel)) continue;

    Eigen::Matrix<double, 5, 1> leg = joint_pos_.segment<5>(5 * s);
    Vec3 p_rel = leg_fk_sole(tree_, s, leg);
    // d p_rel / dt via a central difference of the leg FK.
    Vec3 pdot_rel = Vec3::Zero();
    const double eps = 1e-6;
    for (int j = 0; j < 5; ++j) {
      auto lp = leg, lm = leg;
      lp(j) += eps;
      lm(j) -= eps;
      Vec3 dp = (leg_fk_sole(tree_, s, lp) - leg_fk_sole(tree_, s, lm)) / (2 * eps);
      pdot_rel += dp * joint_vel_(5 * s + j);
    }
    Vec3 v_leg = -omega_world.cross(R * p_rel) - R * pdot_rel;
    vel_ref += v_leg;
    z_ref += terrain_(base_.position.x() + (R * p_rel).x(),
                      base_.position.y() + (R * p_rel).y()) -
             (R * p_rel).z();
    ++n_stance;
  }

  if (n_stance > 0) {
    vel_ref /= n_stance;
    z_ref /= n_stance;
    if (!have_leg_vel_) leg_vel_filt_ = vel_ref;
    leg_vel_filt_ = params_.leg_vel_lp * leg_vel_filt_ +
                    (1.0 - params_.leg_vel_lp) * vel_ref;
    have_leg_vel_ = true;
    base_.velocity = params_.alpha_velocity * base_.velocity +
                     (1.0 - params_.alpha_velocity) * leg_vel_filt_;
    base_.position.z() = params_.alpha_velocity * base_.position.z() +
                         (1.0 - params_.alpha_velocity) * z_ref;
    base_.dead_reckoning = false;
    base_.velocity_ok = true;
  } else {
    base_.dead_reckoning = true;
    base_.velocity_ok = false;
    have_leg_vel_ = false;
  }
  return base_;
}

Configuration StateEstimator::configuration() const {
  Configuration q;
  q.base_pos = base_.position;
  q.base_quat = base_.orientation;
  q.joint_pos = joint_pos_;
  return q;
}

VecX StateEstimator::velocity() const {
  VecX v(tree_.nv());
  v.head<3>() = base_.velocity;
  v.segment<3>(3) = base_.angular_velocity;
  v.tail(tree_.njoints()) = joint_vel_;
  return v;
}

}  // namespace jumpkit
