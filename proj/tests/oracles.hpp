// Test-side reference implementations, kept independent of the library's
// recursive algorithms: naive homogeneous-transform products and
// Jacobian-formula velocities.
#pragma once

#include <Eigen/Geometry>
#include <random>
#include <vector>

#include "jumpkit/model.hpp"

namespace oracles {

using namespace jumpkit;

inline std::vector<Eigen::Affine3d> naive_fk(const KinematicTree& tree,
                                             const Configuration& q) {
  std::vector<Eigen::Affine3d> T(tree.links.size());
  T[0] = Eigen::Translation3d(q.base_pos) * q.base_quat.normalized();
  for (size_t i = 1; i < tree.links.size(); ++i) {
    const Link& l = tree.links[i];
    Eigen::Affine3d Ti = Eigen::Affine3d::Identity();
    Ti.translation() = T[l.parent] * l.placement_pos;
    Ti.linear() = T[l.parent].linear() * l.placement_rot *
                  Eigen::AngleAxisd(q.joint_pos(i - 1), l.joint.axis)
                      .toRotationMatrix();
    T[i] = Ti;
  }
  return T;
}

// World angular velocity of each link and world velocity of an arbitrary
// point attached to it, from the explicit axis-sum formula.
struct LinkMotion {
  Vec3 omega;
  Eigen::Affine3d pose;
};

inline std::vector<LinkMotion> naive_motion(const KinematicTree& tree,
                                            const Configuration& q,
                                            const VecX& v) {
  auto T = naive_fk(tree, q);
  std::vector<LinkMotion> out(tree.links.size());
  Mat3 Rb = q.base_quat.normalized().toRotationMatrix();
  for (size_t i = 0; i < tree.links.size(); ++i) {
    Vec3 w = Rb * v.segment<3>(3);
    int j = static_cast<int>(i);
    while (j > 0) {
      Vec3 axis_w = T[j].linear() * tree.links[j].joint.axis;
      w += axis_w * v(6 + j - 1);
      j = tree.links[j].parent;
    }
    out[i].omega = w;
    out[i].pose = T[i];
  }
  return out;
}

inline Vec3 naive_point_velocity(const KinematicTree& tree,
                                 const Configuration& q, const VecX& v,
                                 int link, const Vec3& world_point) {
  auto T = naive_fk(tree, q);
  Mat3 Rb = q.base_quat.normalized().toRotationMatrix();
  Vec3 vel = v.head<3>() + (Rb * v.segment<3>(3)).cross(world_point - q.base_pos);
  int j = link;
  while (j > 0) {
    Vec3 axis_w = T[j].linear() * tree.links[j].joint.axis;
    Vec3 oj = T[j].translation();
    vel += axis_w.cross(world_point - oj) * v(6 + j - 1);
    j = tree.links[j].parent;
  }
  return vel;
}

inline Vec3 naive_com(const KinematicTree& tree, const Configuration& q) {
  auto T = naive_fk(tree, q);
  Vec3 s = Vec3::Zero();
  double m = 0;
  for (size_t i = 0; i < tree.links.size(); ++i) {
    s += tree.links[i].inertia.mass * (T[i] * tree.links[i].inertia.com_offset);
    m += tree.links[i].inertia.mass;
  }
  return s / m;
}

// Per-link spatial momentum summed and shifted to the COM: [l; k].
inline Eigen::Matrix<double, 6, 1> naive_momentum(const KinematicTree& tree,
                                                  const Configuration& q,
                                                  const VecX& v) {
  auto motion = naive_motion(tree, q, v);
  Vec3 r = naive_com(tree, q);
  Vec3 l = Vec3::Zero(), k = Vec3::Zero();
  for (size_t i = 0; i < tree.links.size(); ++i) {
    const auto& I = tree.links[i].inertia;
    Vec3 ci = motion[i].pose * I.com_offset;
    Vec3 vci = naive_point_velocity(tree, q, v, static_cast<int>(i), ci);
    Mat3 Iw = motion[i].pose.linear() * I.rot_inertia *
              motion[i].pose.linear().transpose();
    l += I.mass * vci;
    k += Iw * motion[i].omega + (ci - r).cross(I.mass * vci);
  }
  Eigen::Matrix<double, 6, 1> h;
  h << l, k;
  return h;
}

inline double naive_kinetic_energy(const KinematicTree& tree,
                                   const Configuration& q, const VecX& v) {
  auto motion = naive_motion(tree, q, v);
  double ke = 0.0;
  for (size_t i = 0; i < tree.links.size(); ++i) {
    const auto& I = tree.links[i].inertia;
    Vec3 ci = motion[i].pose * I.com_offset;
    Vec3 vci = naive_point_velocity(tree, q, v, static_cast<int>(i), ci);
    Mat3 Iw = motion[i].pose.linear() * I.rot_inertia *
              motion[i].pose.linear().transpose();
    ke += 0.5 * I.mass * vci.squaredNorm() +
          0.5 * motion[i].omega.dot(Iw * motion[i].omega);
  }
  return ke;
}

inline double naive_potential(const KinematicTree& tree, const Configuration& q) {
  auto T = naive_fk(tree, q);
  double u = 0.0;
  for (size_t i = 0; i < tree.links.size(); ++i)
    u += tree.links[i].inertia.mass * kGravity *
         (T[i] * tree.links[i].inertia.com_offset).z();
  return u;
}

inline Configuration random_configuration(const KinematicTree& tree,
                                          std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Configuration q;
  q.base_pos = Vec3(u(rng), u(rng), 0.5 + 0.3 * u(rng));
  q.base_quat = Quat(1.0 + u(rng), u(rng), u(rng), u(rng));
  q.base_quat.normalize();
  q.joint_pos.resize(tree.njoints());
  for (int j = 0; j < tree.njoints(); ++j) q.joint_pos(j) = 1.2 * u(rng);
  return q;
}

inline VecX random_velocity(const KinematicTree& tree, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VecX v(tree.nv());
  for (int i = 0; i < v.size(); ++i) v(i) = 2.0 * u(rng);
  return v;
}

}  // namespace oracles
