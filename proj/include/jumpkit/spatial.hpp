#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace jumpkit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

/// Rotation matrix for the axis-angle vector w (angle = |w|).
Mat3 so3_exp(const Vec3& w);

/// Principal axis-angle vector of R, angle in [0, pi]. At angle pi the
/// axis sign follows the largest diagonal entry of R.
Vec3 so3_log(const Mat3& R);

/// Unit quaternion for the axis-angle vector w.
Quat quat_exp(const Vec3& w);

/// Axis-angle vector of a unit quaternion (angle in [0, pi]).
Vec3 quat_log(const Quat& q);

/// q * exp(w_body * dt), renormalized. Body-fixed angular velocity.
Quat quat_integrate(const Quat& q, const Vec3& w_body, double dt);

/// Yaw of the x-axis of R projected to the ground plane.
double yaw_of(const Mat3& R);

/// Map from unit-quaternion component perturbations (w,x,y,z order) to the
/// body-frame rotation tangent: delta_theta_body = G(q) * delta_quat.
/// Includes the chain rule through normalization, so it is the exact
/// derivative of any R(q/|q|)-based function w.r.t. raw quaternion entries.
Eigen::Matrix<double, 3, 4> quat_tangent_map(const Quat& q);

/// Cubic Hermite interpolation of (p0,v0) -> (p1,v1) over [0,T] at time t.
/// Returns position and velocity.
void cubic_hermite(double p0, double v0, double p1, double v1, double T,
                   double t, double& p, double& v);

}  // namespace jumpkit
