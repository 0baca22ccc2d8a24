#pragma once

#include <random>
#include <vector>

#include "jumpkit/model.hpp"

namespace jumpkit {

/// Axis-aligned raised terrain block (step-jump scenarios). The top face is
/// the contact surface; the vertical face is a half-space offset, so ground
/// height is a function of (x, y).
struct GroundBlock {
  double x_min = 0, x_max = 0, y_min = 0, y_max = 0;
  double height = 0;
};

struct SimParams {
  double dt = 5e-4;    // external step, 2 kHz
  int substeps = 4;    // internal integration substeps per external step
  double contact_stiffness = 2e4;   // N/m
  double contact_damping = 200.0;   // N s/m
  double tangent_damping = 1200.0;  // N s/m, clamped to the friction disc
  double friction = 0.6;
  double switch_threshold = 5e-4;  // m penetration closing a contact switch
  double gyro_noise = 0.02;        // rad/s
  double accel_noise = 0.2;        // m/s^2
  double gyro_bias = 0.005;
  double accel_bias = 0.05;
  double encoder_resolution = 2.0 * M_PI / 4096.0;
  double torque_limit = 0.0;  // N m per joint; 0 disables saturation
  std::vector<GroundBlock> blocks;
  unsigned seed = 1;
};

struct Disturbance {
  Vec3 force = Vec3::Zero();
  double start = 0.0;
  double duration = 0.0;
  Vec3 offset = Vec3(0, 0, 0.10);  // application point in the base frame
};

struct SensorReadings {
  Vec3 gyro = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
  VecX encoders;
  std::vector<bool> contact_switch;  // per contact frame
};

struct SimState {
  Configuration q;
  VecX v;
  double time = 0.0;
  std::vector<Vec3> contact_forces;   // per contact frame, world
  Vec3 base_lin_acc = Vec3::Zero();   // world, latest substep
  bool nonfoot_contact = false;       // latched until queried
};

/// Joint-level actuator command evaluated inside the simulation at substep
/// rate, the way a motor driver executes a PD around its feedforward.
struct ActuatorCommand {
  VecX tau_ff;
  VecX q_des;
  VecX qd_des;
  VecX kp, kd;  // empty disables the feedback terms
};

/// Penalty-contact physics harness with IMU/encoder/contact-switch models
/// and torso push injection. Deterministic under a fixed seed.
class SimWorld {
 public:
  SimWorld(const KinematicTree& tree, const SimParams& params,
           const Configuration& q0, const VecX& v0);

  /// Advances one external step and samples the sensors. The PD part of the
  /// command acts on the true joint state every substep, with the damping
  /// term handled implicitly. Throws on NaN with the simulation time in the
  /// message.
  SensorReadings step(const ActuatorCommand& cmd);
  /// Raw feedforward torques only.
  SensorReadings step(const VecX& joint_torques);

  void inject_push(const std::vector<Disturbance>& pushes);

  const SimState& state() const { return state_; }
  std::vector<bool> read_contacts() const;
  double ground_height(double x, double y) const;
  /// True if any non-foot link origin touched the ground since the last call.
  bool consume_nonfoot_contact();

  const KinematicTree& tree() const { return tree_; }
  const SimParams& params() const { return params_; }

 private:
  void substep(const ActuatorCommand& cmd, double dt);

  KinematicTree tree_;
  SimParams params_;
  SimState state_;
  std::vector<Disturbance> pushes_;
  std::mt19937 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  Vec3 gyro_bias_dir_, accel_bias_dir_;
};

}  // namespace jumpkit
