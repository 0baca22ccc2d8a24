#pragma once

#include "jumpkit/model.hpp"

namespace jumpkit {

struct LegIKResult {
  // hip_yaw, hip_roll, hip_pitch, knee, ankle
  Eigen::Matrix<double, 5, 1> angles = Eigen::Matrix<double, 5, 1>::Zero();
  bool clamped = false;  // target was outside the leg workspace
};

/// Closed-form IK for one 5-DoF leg. Targets the foot sole center (midpoint
/// of toe and heel contacts) expressed in the base frame. foot_yaw sets the
/// hip yaw; foot_pitch is the sole pitch in the rolled leg plane (0 keeps
/// the sole level). Unreachable targets are clamped to the workspace
/// boundary sphere of radius thigh+calf about the hip.
LegIKResult leg_ik(const KinematicTree& tree, int side, const Vec3& sole_target,
                   double foot_yaw = 0.0, double foot_pitch = 0.0);

/// Sole center position in the base frame for the given leg joint angles.
Vec3 leg_fk_sole(const KinematicTree& tree, int side,
                 const Eigen::Matrix<double, 5, 1>& angles);

}  // namespace jumpkit
