#pragma once

#include "jumpkit/spatial.hpp"

namespace jumpkit {

/// Gains of the momentum-feedback landing law. Nominal foot positions and
/// the resulting commands live in a yaw-aligned body frame fixed at the
/// liftoff instant; index 0 is the left foot, 1 the right.
struct LandingGains {
  double w_lin_x = 0.0;  // m per kg m/s, forward offset from linear momentum
  double w_ang_x = 0.0;  // m per kg m^2/s, forward offset from pitch momentum
  double w_lin_y = 0.0;
  double w_ang_y = 0.0;
  double w_clear = 0.0;  // y-clearance gain, m per kg m/s
  Eigen::Vector2d p_nom_x = Eigen::Vector2d::Zero();
  Eigen::Vector2d p_nom_y = Eigen::Vector2d::Zero();
  double p_max_x = 0.12;
  double p_max_y = 0.12;
};

struct LandingCommand {
  Eigen::Vector2d p_des_x = Eigen::Vector2d::Zero();
  Eigen::Vector2d p_des_y = Eigen::Vector2d::Zero();
  bool saturated_x[2] = {false, false};
  bool saturated_y[2] = {false, false};
};

/// Momentum-feedback landing location update with y-clearance and
/// saturation. Left foot gets +clearance, right foot -clearance.
LandingCommand update_landing(const Vec3& lin_momentum,
                              const Vec3& ang_momentum,
                              const LandingGains& gains);

struct FootTarget {
  Vec3 pos = Vec3::Zero();
  Vec3 vel = Vec3::Zero();
};

/// Swing interpolation toward a landing command: x,y follow a cubic from
/// the current swing state to the desired location, arriving at touchdown
/// with zero lateral velocity; z passes through the reference unchanged.
/// Evaluated at eval_time into the remaining flight window.
FootTarget blend_swing_target(const Eigen::Vector2d& current_xy,
                              const Eigen::Vector2d& current_vel_xy,
                              const Eigen::Vector2d& desired_xy,
                              double time_to_land, double eval_time,
                              double z_ref, double z_vel_ref = 0.0);

}  // namespace jumpkit
