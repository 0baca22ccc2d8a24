#pragma once

#include <functional>

#include "jumpkit/model.hpp"
#include "jumpkit/sim.hpp"

namespace jumpkit {

struct EstimatorParams {
  double alpha_orientation = 0.995;  // gyro weight in the orientation blend
  double alpha_velocity = 0.98;      // inertial weight in the velocity blend
  double joint_vel_lp = 0.65;        // low-pass pole for encoder-derived rates
  double leg_vel_lp = 0.5;           // low-pass pole for leg-odometry velocity
};

struct EstimatedBase {
  Quat orientation = Quat::Identity();
  Vec3 angular_velocity = Vec3::Zero();  // body frame
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  bool dead_reckoning = false;  // flight: no kinematic reference available
  bool orientation_ok = true;
  bool velocity_ok = true;
};

/// Complementary filter fusing gyro/accelerometer integration with stance
/// leg kinematics. A foot provides a reference only when both of its
/// switches are closed. Ground height under the feet comes from the terrain
/// callback (flat zero by default).
class StateEstimator {
 public:
  StateEstimator(const KinematicTree& tree, const EstimatorParams& params,
                 double dt, const Configuration& q0, const VecX& v0,
                 std::function<double(double, double)> terrain = {});

  EstimatedBase update(const SensorReadings& sensors);

  const EstimatedBase& base() const { return base_; }
  /// Full configuration / velocity built from the base estimate plus
  /// encoder joints and filtered joint rates.
  Configuration configuration() const;
  VecX velocity() const;

 private:
  KinematicTree tree_;
  EstimatorParams params_;
  double dt_;
  std::function<double(double, double)> terrain_;
  EstimatedBase base_;
  VecX joint_pos_, joint_vel_;
  VecX prev_encoders_;
  bool have_prev_ = false;
  Vec3 leg_vel_filt_ = Vec3::Zero();
  bool have_leg_vel_ = false;
};

}  // namespace jumpkit
