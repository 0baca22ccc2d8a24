#include "jumpkit/leg_ik.hpp"

#include <cmath>

namespace jumpkit {

namespace {

Vec3 hip_origin(const KinematicTree& tree, int side) {
  double ys = (side == 0) ? 1.0 : -1.0;
  return Vec3(0, ys * tree.pelvis_length / 2.0, 0);
}

}  // namespace

LegIKResult leg_ik(const KinematicTree& tree, int side, const Vec3& sole_target,
                   double foot_yaw, double foot_pitch) {
  const double lt = tree.thigh_length;
  const double lc = tree.calf_length;
  const double lf = tree.foot_height;

  LegIKResult out;
  Vec3 d = sole_target - hip_origin(tree, side);
  // Undo the hip yaw so the remaining chain is roll + planar 2R.
  Vec3 dy = Eigen::AngleAxisd(-foot_yaw, Vec3::UnitZ()) * d;

  // The sole-to-ankle offset rotates with the roll, so it drops out of the
  // in-plane condition and the roll comes straight from the sole target.
  double roll = std::atan2(dy.y(), -dy.z());
  Vec3 A = dy + Eigen::AngleAxisd(roll, Vec3::UnitX()) *
                    Eigen::AngleAxisd(foot_pitch, Vec3::UnitY()) * Vec3(0, 0, lf);

  Vec3 Ar = Eigen::AngleAxisd(-roll, Vec3::UnitX()) * A;
  double u = -Ar.x();
  double w = -Ar.z();
  double r2 = u * u + w * w;
  double r = std::sqrt(r2);
  const double r_max = lt + lc;
  const double r_min = std::abs(lt - lc) + 1e-9;
  if (r > r_max) {
    double s = r_max / r;
    u *= s;
    w *= s;
    r = r_max;
    r2 = r * r;
    out.clamped = true;
  } else if (r < r_min) {
    double s = (r > 1e-12) ? r_min / r : 0.0;
    if (s == 0.0) {
      u = 0.0;
      w = r_min;
    } else {
      u *= s;
      w *= s;
    }
    r = r_min;
    r2 = r * r;
    out.clamped = true;
  }

  double ck = (r2 - lt * lt - lc * lc) / (2.0 * lt * lc);
  ck = std::clamp(ck, -1.0, 1.0);
  double knee = std::acos(ck);
  double hip_pitch =
      std::atan2(u, w) - std::atan2(lc * std::sin(knee), lt + lc * ck);
  double ankle = foot_pitch - (hip_pitch + knee);

  out.angles << foot_yaw, roll, hip_pitch, knee, ankle;
  return out;
}

Vec3 leg_fk_sole(const KinematicTree& tree, int side,
                 const Eigen::Matrix<double, 5, 1>& a) {
  const double lt = tree.thigh_length;
  const double lc = tree.calf_length;
  const double lf = tree.foot_height;
  Mat3 Rz = Eigen::AngleAxisd(a(0), Vec3::UnitZ()).toRotationMatrix();
  Mat3 Rx = Eigen::AngleAxisd(a(1), Vec3::UnitX()).toRotationMatrix();
  Mat3 Rh = Eigen::AngleAxisd(a(2), Vec3::UnitY()).toRotationMatrix();
  Mat3 Rk = Eigen::AngleAxisd(a(3), Vec3::UnitY()).toRotationMatrix();
  Mat3 Ra = Eigen::AngleAxisd(a(4), Vec3::UnitY()).toRotationMatrix();
  Vec3 p = hip_origin(tree, side);
  Mat3 R = Rz * Rx * Rh;
  p += R * Vec3(0, 0, -lt);
  R = R * Rk;
  p += R * Vec3(0, 0, -lc);
  R = R * Ra;
  p += R * Vec3(0, 0, -lf);
  return p;
}

}  // namespace jumpkit
