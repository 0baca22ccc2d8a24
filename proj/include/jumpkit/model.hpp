#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "jumpkit/spatial.hpp"

namespace jumpkit {

constexpr double kGravity = 9.81;

/// Mass, COM offset and rotational inertia about the link COM, all in the
/// link frame.
struct SpatialInertia {
  double mass = 0.0;
  Vec3 com_offset = Vec3::Zero();
  Mat3 rot_inertia = Mat3::Zero();

  void validate() const;
};

struct Joint {
  enum class Type { Floating, Revolute };
  Type type = Type::Revolute;
  Vec3 axis = Vec3::UnitZ();  // in the link frame, unit norm
};

struct Link {
  std::string name;
  int parent = -1;  // -1 for the floating base
  Vec3 placement_pos = Vec3::Zero();   // joint origin in the parent frame
  Mat3 placement_rot = Mat3::Identity();
  Joint joint;
  SpatialInertia inertia;
};

struct ContactFrame {
  std::string name;
  int link = -1;
  Vec3 offset = Vec3::Zero();  // in the link frame
};

/// Floating-base articulated model. links[0] is the floating base; links are
/// topologically sorted (parent index < child index).
struct KinematicTree {
  std::vector<Link> links;
  std::vector<ContactFrame> contact_frames;
  // Named segment lengths, used by the closed-form leg IK and seeds.
  double pelvis_length = 0.0;
  double thigh_length = 0.0;
  double calf_length = 0.0;
  double foot_height = 0.0;

  int njoints() const { return static_cast<int>(links.size()) - 1; }
  int nq() const { return 7 + njoints(); }
  int nv() const { return 6 + njoints(); }
  double total_mass() const;
  int link_index(const std::string& name) const;
  int contact_index(const std::string& name) const;
  void validate() const;
};

/// q = [base_pos(3), base_quat(w,x,y,z)(4), joint_pos(n_j)].
struct Configuration {
  Vec3 base_pos = Vec3::Zero();
  Quat base_quat = Quat::Identity();
  VecX joint_pos;

  static Configuration FromVector(const VecX& q);
  VecX ToVector() const;
  void validate() const;
};

/// Generalized velocity layout: [base_lin_world(3), base_ang_body(3),
/// joint_vel(n_j)]. The base angular velocity is body-fixed.
struct FramePose {
  Vec3 pos = Vec3::Zero();
  Mat3 rot = Mat3::Identity();
};

struct FKResult {
  std::vector<FramePose> link_pose;
  std::vector<FramePose> contact_pose;
};

struct FrameId {
  int link = -1;
  Vec3 offset = Vec3::Zero();
};

/// Resolves a link or contact-frame name; throws std::invalid_argument for
/// an unknown identifier.
FrameId resolve_frame(const KinematicTree& tree, const std::string& name);

/// World poses of every link and contact frame. Rejects a non-unit base
/// quaternion when validate is true; with validate=false the quaternion is
/// normalized internally (used by optimization paths that step off the
/// manifold).
FKResult forward_kinematics(const KinematicTree& tree, const Configuration& q,
                            bool validate = true);

Vec3 com_position(const KinematicTree& tree, const Configuration& q,
                  bool validate = true);

/// 6 x nv task Jacobian of the frame, rows [linear; angular], both in world
/// coordinates: [v_p; omega_world] = J v.
MatX frame_jacobian(const KinematicTree& tree, const Configuration& q,
                    const FrameId& frame);
MatX frame_jacobian(const KinematicTree& tree, const Configuration& q,
                    const std::string& frame);

/// Velocity-product term (dJ/dt) v of the frame: classical acceleration of
/// the frame point and angular acceleration when the generalized
/// acceleration is zero. Rows [linear; angular], world coordinates.
Eigen::Matrix<double, 6, 1> frame_acceleration_bias(const KinematicTree& tree,
                                                    const Configuration& q,
                                                    const VecX& v,
                                                    const FrameId& frame);

struct DynamicsTerms {
  MatX H;      // nv x nv joint-space inertia, symmetric positive definite
  VecX bias;   // C(q,v) v + G(q)
  VecX gravity;  // G(q) alone
};

/// Inertia matrix, Coriolis+gravity bias and gravity vector in the
/// [base_lin_world, base_ang_body, joints] velocity convention. Rows 0-5
/// are the floating-base (wrench) rows, the rest are joint rows.
DynamicsTerms dynamics_terms(const KinematicTree& tree, const Configuration& q,
                             const VecX& v);

/// Centroidal momentum matrix A(q), 6 x nv, rows [linear momentum l;
/// angular momentum k about the instantaneous COM], world coordinates.
MatX centroidal_momentum_matrix(const KinematicTree& tree,
                                const Configuration& q);

/// [l; k] = A(q) v evaluated by direct velocity propagation (no matrix
/// assembly).
Eigen::Matrix<double, 6, 1> centroidal_momentum(const KinematicTree& tree,
                                                const Configuration& q,
                                                const VecX& v);

/// COM position and [l; k] from a precomputed FK pass.
Vec3 com_position(const KinematicTree& tree, const FKResult& fk);
Eigen::Matrix<double, 6, 1> centroidal_momentum(const KinematicTree& tree,
                                                const FKResult& fk,
                                                const VecX& v);

/// Advances base position and joint angles additively and the base
/// quaternion by the exponential of the body angular velocity.
Configuration integrate_configuration(const Configuration& q, const VecX& v,
                                      double dt);

/// Table-parameterized default biped: 10 revolute joints (per leg: hip yaw,
/// hip roll, hip pitch, knee, ankle), toe and heel point contacts per foot.
KinematicTree build_default_model();

}  // namespace jumpkit
