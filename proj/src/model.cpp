#include "jumpkit/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace jumpkit {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

void SpatialInertia::validate() const {
  if (!(mass > 0.0)) throw std::invalid_argument("link mass must be > 0");
  if ((rot_inertia - rot_inertia.transpose()).norm() > 1e-9 * (1.0 + rot_inertia.norm()))
    throw std::invalid_argument("rotational inertia must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat3> es(rot_inertia);
  Vec3 ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-12)
    throw std::invalid_argument("rotational inertia must be positive semidefinite");
  // Triangle inequality on principal moments.
  double a = ev(0), b = ev(1), c = ev(2);
  if (a + b < c - 1e-9 * (1.0 + c))
    throw std::invalid_argument("principal moments violate the triangle inequality");
}

double KinematicTree::total_mass() const {
  double m = 0.0;
  for (const auto& l : links) m += l.inertia.mass;
  return m;
}

int KinematicTree::link_index(const std::string& name) const {
  for (size_t i = 0; i < links.size(); ++i)
    if (links[i].name == name) return static_cast<int>(i);
  return -1;
}

int KinematicTree::contact_index(const std::string& name) const {
  for (size_t i = 0; i < contact_frames.size(); ++i)
    if (contact_frames[i].name == name) return static_cast<int>(i);
  return -1;
}

void KinematicTree::validate() const {
  if (links.empty()) throw std::invalid_argument("empty tree");
  if (links[0].joint.type != Joint::Type::Floating || links[0].parent != -1)
    throw std::invalid_argument("links[0] must be the floating base");
  for (size_t i = 1; i < links.size(); ++i) {
    const auto& l = links[i];
    if (l.joint.type != Joint::Type::Revolute)
      throw std::invalid_argument("only one floating base is allowed");
    if (l.parent < 0 || l.parent >= static_cast<int>(i))
      throw std::invalid_argument("links must be topologically sorted");
    if (std::abs(l.joint.axis.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("revolute axis must have unit norm");
  }
  for (const auto& l : links) l.inertia.validate();
  for (const auto& c : contact_frames)
    if (c.link < 0 || c.link >= static_cast<int>(links.size()))
      throw std::invalid_argument("contact frame attached to unknown link");
}

Configuration Configuration::FromVector(const VecX& q) {
  Configuration c;
  c.base_pos = q.head<3>();
  c.base_quat = Quat(q(3), q(4), q(5), q(6));
  c.joint_pos = q.tail(q.size() - 7);
  return c;
}

VecX Configuration::ToVector() const {
  VecX q(7 + joint_pos.size());
  q.head<3>() = base_pos;
  q(3) = base_quat.w();
  q(4) = base_quat.x();
  q(5) = base_quat.y();
  q(6) = base_quat.z();
  q.tail(joint_pos.size()) = joint_pos;
  return q;
}

void Configuration::validate() const {
  if (std::abs(base_quat.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("base quaternion must have unit norm");
  if (!joint_pos.allFinite() || !base_pos.allFinite())
    throw std::invalid_argument("configuration entries must be finite");
}

FrameId resolve_frame(const KinematicTree& tree, const std::string& name) {
  int ci = tree.contact_index(name);
  if (ci >= 0) return {tree.contact_frames[ci].link, tree.contact_frames[ci].offset};
  int li = tree.link_index(name);
  if (li >= 0) return {li, Vec3::Zero()};
  throw std::invalid_argument("unknown frame: " + name);
}

namespace {

Mat3 joint_rotation(const Joint& j, double angle) {
  return Eigen::AngleAxisd(angle, j.axis).toRotationMatrix();
}

FKResult fk_impl(const KinematicTree& tree, const Configuration& q) {
  FKResult out;
  const int nl = static_cast<int>(tree.links.size());
  out.link_pose.resize(nl);
  Quat bq = q.base_quat.normalized();
  out.link_pose[0].pos = q.base_pos;
  out.link_pose[0].rot = bq.toRotationMatrix();
  for (int i = 1; i < nl; ++i) {
    const Link& l = tree.links[i];
    const FramePose& pp = out.link_pose[l.parent];
    out.link_pose[i].pos = pp.pos + pp.rot * l.placement_pos;
    out.link_pose[i].rot =
        pp.rot * l.placement_rot * joint_rotation(l.joint, q.joint_pos(i - 1));
  }
  out.contact_pose.resize(tree.contact_frames.size());
  for (size_t c = 0; c < tree.contact_frames.size(); ++c) {
    const auto& cf = tree.contact_frames[c];
    const FramePose& lp = out.link_pose[cf.link];
    out.contact_pose[c].pos = lp.pos + lp.rot * cf.offset;
    out.contact_pose[c].rot = lp.rot;
  }
  return out;
}

// World angular velocity and world velocity of each link-frame origin.
struct LinkVel {
  Vec3 omega;
  Vec3 v_origin;
};

std::vector<LinkVel> propagate_velocities(const KinematicTree& tree,
                                          const FKResult& fk, const VecX& v) {
  const int nl = static_cast<int>(tree.links.size());
  std::vector<LinkVel> out(nl);
  out[0].omega = fk.link_pose[0].rot * v.segment<3>(3);
  out[0].v_origin = v.head<3>();
  for (int i = 1; i < nl; ++i) {
    const Link& l = tree.links[i];
    const LinkVel& pv = out[l.parent];
    Vec3 oi = fk.link_pose[i].pos;
    Vec3 op = fk.link_pose[l.parent].pos;
    Vec3 axis_w = fk.link_pose[i].rot * l.joint.axis;
    out[i].v_origin = pv.v_origin + pv.omega.cross(oi - op);
    out[i].omega = pv.omega + axis_w * v(6 + i - 1);
  }
  return out;
}

// Fills the 6 x nv world-frame Jacobian of a point rigidly attached to a
// link: rows [linear; angular].
void fill_point_jacobian(const KinematicTree& tree, const FKResult& fk,
                         int link, const Vec3& world_point,
                         Eigen::Ref<MatX> J) {
  J.setZero();
  const Vec3 pb = fk.link_pose[0].pos;
  const Mat3& Rb = fk.link_pose[0].rot;
  J.block<3, 3>(0, 0).setIdentity();
  J.block<3, 3>(0, 3) = -skew(world_point - pb) * Rb;
  J.block<3, 3>(3, 3) = Rb;
  int i = link;
  while (i > 0) {
    const Link& l = tree.links[i];
    Vec3 axis_w = fk.link_pose[i].rot * l.joint.axis;
    Vec3 oi = fk.link_pose[i].pos;
    J.block<3, 1>(0, 6 + i - 1) = axis_w.cross(world_point - oi);
    J.block<3, 1>(3, 6 + i - 1) = axis_w;
    i = l.parent;
  }
}

// ---- body-coordinates spatial algebra for CRBA / RNEA ([angular; linear])

struct SpTransform {
  Mat3 E;  // parent-to-child rotation
  Vec3 r;  // child origin in the parent frame
};

Vec6 xform_motion(const SpTransform& X, const Vec6& m) {
  Vec6 out;
  out.head<3>() = X.E * m.head<3>();
  out.tail<3>() = X.E * (m.tail<3>() - X.r.cross(m.head<3>()));
  return out;
}

// Force vector from child coordinates back to parent coordinates.
Vec6 xform_force_to_parent(const SpTransform& X, const Vec6& f) {
  Vec6 out;
  out.head<3>() = X.E.transpose() * f.head<3>() + X.r.cross(X.E.transpose() * f.tail<3>());
  out.tail<3>() = X.E.transpose() * f.tail<3>();
  return out;
}

Mat6 xform_matrix(const SpTransform& X) {
  Mat6 M = Mat6::Zero();
  M.block<3, 3>(0, 0) = X.E;
  M.block<3, 3>(3, 0) = -X.E * skew(X.r);
  M.block<3, 3>(3, 3) = X.E;
  return M;
}

Mat6 spatial_inertia_matrix(const SpatialInertia& I) {
  Mat6 M;
  Mat3 C = skew(I.com_offset);
  M.block<3, 3>(0, 0) = I.rot_inertia + I.mass * C * C.transpose();
  M.block<3, 3>(0, 3) = I.mass * C;
  M.block<3, 3>(3, 0) = I.mass * C.transpose();
  M.block<3, 3>(3, 3) = I.mass * Mat3::Identity();
  return M;
}

Vec6 cross_motion(const Vec6& a, const Vec6& b) {
  Vec6 out;
  out.head<3>() = a.head<3>().cross(b.head<3>());
  out.tail<3>() = a.head<3>().cross(b.tail<3>()) + a.tail<3>().cross(b.head<3>());
  return out;
}

Vec6 cross_force(const Vec6& a, const Vec6& f) {
  Vec6 out;
  out.head<3>() = a.head<3>().cross(f.head<3>()) + a.tail<3>().cross(f.tail<3>());
  out.tail<3>() = a.head<3>().cross(f.tail<3>());
  return out;
}

std::vector<SpTransform> local_transforms(const KinematicTree& tree,
                                          const Configuration& q) {
  const int nl = static_cast<int>(tree.links.size());
  std::vector<SpTransform> X(nl);
  for (int i = 1; i < nl; ++i) {
    const Link& l = tree.links[i];
    Mat3 R_rel = l.placement_rot * joint_rotation(l.joint, q.joint_pos(i - 1));
    X[i].E = R_rel.transpose();
    X[i].r = l.placement_pos;
  }
  return X;
}

// Mapping from the [base_lin_world, base_ang_body, joints] convention to
// body-coordinates twists used by the recursions: v_int = B v_user.
MatX user_to_body_map(const Mat3& Rb, int nv) {
  MatX B = MatX::Zero(nv, nv);
  B.block<3, 3>(0, 3).setIdentity();
  B.block<3, 3>(3, 0) = Rb.transpose();
  for (int i = 6; i < nv; ++i) B(i, i) = 1.0;
  return B;
}

}  // namespace

FKResult forward_kinematics(const KinematicTree& tree, const Configuration& q,
                            bool validate) {
  if (validate) q.validate();
  return fk_impl(tree, q);
}

Vec3 com_position(const KinematicTree& tree, const Configuration& q,
                  bool validate) {
  if (validate) q.validate();
  FKResult fk = fk_impl(tree, q);
  Vec3 s = Vec3::Zero();
  double m = 0.0;
  for (size_t i = 0; i < tree.links.size(); ++i) {
    const auto& I = tree.links[i].inertia;
    s += I.mass * (fk.link_pose[i].pos + fk.link_pose[i].rot * I.com_offset);
    m += I.mass;
  }
  return s / m;
}

MatX frame_jacobian(const KinematicTree& tree, const Configuration& q,
                    const FrameId& frame) {
  FKResult fk = fk_impl(tree, q);
  Vec3 p = fk.link_pose[frame.link].pos + fk.link_pose[frame.link].rot * frame.offset;
  MatX J(6, tree.nv());
  fill_point_jacobian(tree, fk, frame.link, p, J);
  return J;
}

MatX frame_jacobian(const KinematicTree& tree, const Configuration& q,
                    const std::string& frame) {
  return frame_jacobian(tree, q, resolve_frame(tree, frame));
}

Vec6 frame_acceleration_bias(const KinematicTree& tree, const Configuration& q,
                             const VecX& v, const FrameId& frame) {
  FKResult fk = fk_impl(tree, q);
  std::vector<LinkVel> vel = propagate_velocities(tree, fk, v);
  const int nl = static_cast<int>(tree.links.size());
  // With zero generalized acceleration the base has zero angular and linear
  // acceleration in this convention.
  std::vector<Vec3> omega_dot(nl, Vec3::Zero());
  std::vector<Vec3> a_origin(nl, Vec3::Zero());
  for (int i = 1; i < nl; ++i) {
    const Link& l = tree.links[i];
    int p = l.parent;
    Vec3 d = fk.link_pose[i].pos - fk.link_pose[p].pos;
    a_origin[i] = a_origin[p] + omega_dot[p].cross(d) +
                  vel[p].omega.cross(vel[p].omega.cross(d));
    Vec3 axis_w = fk.link_pose[i].rot * l.joint.axis;
    omega_dot[i] = omega_dot[p] + vel[p].omega.cross(axis_w * v(6 + i - 1));
  }
  int L = frame.link;
  Vec3 d = fk.link_pose[L].rot * frame.offset;
  Vec6 out;
  out.head<3>() = a_origin[L] + omega_dot[L].cross(d) +
                  vel[L].omega.cross(vel[L].omega.cross(d));
  out.tail<3>() = omega_dot[L];
  return out;
}

DynamicsTerms dynamics_terms(const KinematicTree& tree, const Configuration& q,
                             const VecX& v) {
  const int nl = static_cast<int>(tree.links.size());
  const int nv = tree.nv();
  std::vector<SpTransform> X = local_transforms(tree, q);
  Mat3 Rb = q.base_quat.normalized().toRotationMatrix();

  // CRBA in body coordinates.
  std::vector<Mat6> Ic(nl);
  for (int i = 0; i < nl; ++i) Ic[i] = spatial_inertia_matrix(tree.links[i].inertia);
  MatX Hint = MatX::Zero(nv, nv);
  for (int i = nl - 1; i >= 1; --i) {
    Mat6 Xm = xform_matrix(X[i]);
    Ic[tree.links[i].parent] += Xm.transpose() * Ic[i] * Xm;
    Vec6 S = Vec6::Zero();
    S.head<3>() = tree.links[i].joint.axis;
    Vec6 F = Ic[i] * S;
    Hint(6 + i - 1, 6 + i - 1) = S.dot(F);
    int j = i;
    while (tree.links[j].parent > 0) {
      F = xform_force_to_parent(X[j], F);
      j = tree.links[j].parent;
      Vec6 Sj = Vec6::Zero();
      Sj.head<3>() = tree.links[j].joint.axis;
      Hint(6 + i - 1, 6 + j - 1) = F.dot(Sj);
      Hint(6 + j - 1, 6 + i - 1) = Hint(6 + i - 1, 6 + j - 1);
    }
    F = xform_force_to_parent(X[j], F);
    Hint.block<6, 1>(0, 6 + i - 1) = F;
    Hint.block<1, 6>(6 + i - 1, 0) = F.transpose();
  }
  Hint.block<6, 6>(0, 0) = Ic[0];

  // RNEA bias in body coordinates, zero generalized acceleration. Gravity
  // enters through the fictitious base acceleration.
  auto rnea = [&](const VecX& vv, bool with_gravity) {
    std::vector<Vec6> vel(nl), acc(nl), f(nl);
    vel[0].head<3>() = vv.segment<3>(3);
    vel[0].tail<3>() = Rb.transpose() * vv.head<3>();
    acc[0].setZero();
    if (with_gravity) acc[0].tail<3>() = Rb.transpose() * Vec3(0, 0, kGravity);
    for (int i = 1; i < nl; ++i) {
      Vec6 S = Vec6::Zero();
      S.head<3>() = tree.links[i].joint.axis;
      Vec6 vj = S * vv(6 + i - 1);
      vel[i] = xform_motion(X[i], vel[tree.links[i].parent]) + vj;
      acc[i] = xform_motion(X[i], acc[tree.links[i].parent]) + cross_motion(vel[i], vj);
    }
    for (int i = 0; i < nl; ++i) {
      Mat6 Ii = spatial_inertia_matrix(tree.links[i].inertia);
      f[i] = Ii * acc[i] + cross_force(vel[i], Ii * vel[i]);
    }
    VecX tau = VecX::Zero(nv);
    for (int i = nl - 1; i >= 1; --i) {
      Vec6 S = Vec6::Zero();
      S.head<3>() = tree.links[i].joint.axis;
      tau(6 + i - 1) = S.dot(f[i]);
      f[tree.links[i].parent] += xform_force_to_parent(X[i], f[i]);
    }
    tau.head<6>() = f[0];
    return tau;
  };

  MatX B = user_to_body_map(Rb, nv);
  VecX bias_int = rnea(v, true);
  VecX grav_int = rnea(VecX::Zero(nv), true);

  // v_int = B v_user, so the bias picks up an H * (dB/dt) v term.
  Vec3 wb = v.segment<3>(3);
  VecX Bdot_v = VecX::Zero(nv);
  Bdot_v.segment<3>(3) = -wb.cross(Rb.transpose() * v.head<3>());

  DynamicsTerms out;
  out.H = B.transpose() * Hint * B;
  out.bias = B.transpose() * (bias_int + Hint * Bdot_v);
  out.gravity = B.transpose() * grav_int;
  return out;
}

MatX centroidal_momentum_matrix(const KinematicTree& tree,
                                const Configuration& q) {
  const int nv = tree.nv();
  FKResult fk = fk_impl(tree, q);
  Vec3 r = Vec3::Zero();
  double m = 0.0;
  std::vector<Vec3> com_w(tree.links.size());
  for (size_t i = 0; i < tree.links.size(); ++i) {
    const auto& I = tree.links[i].inertia;
    com_w[i] = fk.link_pose[i].pos + fk.link_pose[i].rot * I.com_offset;
    r += I.mass * com_w[i];
    m += I.mass;
  }
  r /= m;

  MatX A = MatX::Zero(6, nv);
  MatX J(6, nv);
  for (size_t i = 0; i < tree.links.size(); ++i) {
    const auto& I = tree.links[i].inertia;
    fill_point_jacobian(tree, fk, static_cast<int>(i), com_w[i], J);
    Mat3 Iw = fk.link_pose[i].rot * I.rot_inertia * fk.link_pose[i].rot.transpose();
    A.topRows<3>() += I.mass * J.topRows<3>();
    A.bottomRows<3>() +=
        Iw * J.bottomRows<3>() + skew(com_w[i] - r) * I.mass * J.topRows<3>();
  }
  return A;
}

Vec3 com_position(const KinematicTree& tree, const FKResult& fk) {
  Vec3 s = Vec3::Zero();
  double m = 0.0;
  for (size_t i = 0; i < tree.links.size(); ++i) {
    const auto& I = tree.links[i].inertia;
    s += I.mass * (fk.link_pose[i].pos + fk.link_pose[i].rot * I.com_offset);
    m += I.mass;
  }
  return s / m;
}

Vec6 centroidal_momentum(const KinematicTree& tree, const Configuration& q,
                         const VecX& v) {
  return centroidal_momentum(tree, fk_impl(tree, q), v);
}

Vec6 centroidal_momentum(const KinematicTree& tree, const FKResult& fk,
                         const VecX& v) {
  std::vector<LinkVel> vel = propagate_velocities(tree, fk, v);
  Vec3 r = Vec3::Zero();
  double m = 0.0;
  std::vector<Vec3> com_w(tree.links.size());
  for (size_t i = 0; i < tree.links.size(); ++i) {
    const auto& I = tree.links[i].inertia;
    com_w[i] = fk.link_pose[i].pos + fk.link_pose[i].rot * I.com_offset;
    r += I.mass * com_w[i];
    m += I.mass;
  }
  r /= m;
  Vec3 l = Vec3::Zero(), k = Vec3::Zero();
  for (size_t i = 0; i < tree.links.size(); ++i) {
    const auto& I = tree.links[i].inertia;
    Vec3 vc = vel[i].v_origin + vel[i].omega.cross(com_w[i] - fk.link_pose[i].pos);
    Mat3 Iw = fk.link_pose[i].rot * I.rot_inertia * fk.link_pose[i].rot.transpose();
    l += I.mass * vc;
    k += Iw * vel[i].omega + (com_w[i] - r).cross(I.mass * vc);
  }
  Vec6 h;
  h.head<3>() = l;
  h.tail<3>() = k;
  return h;
}

Configuration integrate_configuration(const Configuration& q, const VecX& v,
                                      double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  Configuration out = q;
  out.base_pos += v.head<3>() * dt;
  out.base_quat = quat_integrate(q.base_quat, v.segment<3>(3), dt);
  out.joint_pos += v.tail(v.size() - 6) * dt;
  return out;
}

KinematicTree build_default_model() {
  KinematicTree t;
  t.pelvis_length = 0.150;
  t.thigh_length = 0.175;
  t.calf_length = 0.1695;
  t.foot_height = 0.024;

  auto cylinder = [](double m, double r, double L) {
    Mat3 I = Mat3::Zero();
    I(0, 0) = I(1, 1) = m * (3 * r * r + L * L) / 12.0;
    I(2, 2) = m * r * r / 2.0;
    return I;
  };
  auto box = [](double m, double x, double y, double z) {
    Mat3 I = Mat3::Zero();
    I(0, 0) = m * (y * y + z * z) / 12.0;
    I(1, 1) = m * (x * x + z * z) / 12.0;
    I(2, 2) = m * (x * x + y * y) / 12.0;
    return I;
  };

  Link base;
  base.name = "base";
  base.parent = -1;
  base.joint.type = Joint::Type::Floating;
  base.inertia = {1.687, Vec3(0, 0, 0.08), box(1.687, 0.10, 0.10, 0.24)};
  t.links.push_back(base);

  const char* side[2] = {"L", "R"};
  for (int s = 0; s < 2; ++s) {
    double ys = (s == 0) ? 1.0 : -1.0;
    int base_idx = 0;
    Link hip_yaw;
    hip_yaw.name = std::string("hip_yaw_") + side[s];
    hip_yaw.parent = base_idx;
    hip_yaw.placement_pos = Vec3(0, ys * t.pelvis_length / 2.0, 0);
    hip_yaw.joint.axis = Vec3::UnitZ();
    hip_yaw.inertia = {0.344, Vec3::Zero(), cylinder(0.344, 0.04, 0.04)};
    t.links.push_back(hip_yaw);
    int hy = static_cast<int>(t.links.size()) - 1;

    Link hip_roll;
    hip_roll.name = std::string("hip_roll_") + side[s];
    hip_roll.parent = hy;
    hip_roll.joint.axis = Vec3::UnitX();
    hip_roll.inertia = {0.345, Vec3::Zero(), cylinder(0.345, 0.04, 0.04)};
    t.links.push_back(hip_roll);
    int hr = static_cast<int>(t.links.size()) - 1;

    Link thigh;
    thigh.name = std::string("thigh_") + side[s];
    thigh.parent = hr;
    thigh.joint.axis = Vec3::UnitY();
    thigh.inertia = {0.8895, Vec3(0, 0, -t.thigh_length / 2.0),
                     cylinder(0.8895, 0.03, t.thigh_length)};
    t.links.push_back(thigh);
    int th = static_cast<int>(t.links.size()) - 1;

    Link calf;
    calf.name = std::string("calf_") + side[s];
    calf.parent = th;
    calf.placement_pos = Vec3(0, 0, -t.thigh_length);
    calf.joint.axis = Vec3::UnitY();
    calf.inertia = {0.113, Vec3(0, 0, -t.calf_length / 2.0),
                    cylinder(0.113, 0.02, t.calf_length)};
    t.links.push_back(calf);
    int ca = static_cast<int>(t.links.size()) - 1;

    Link foot;
    foot.name = std::string("foot_") + side[s];
    foot.parent = ca;
    foot.placement_pos = Vec3(0, 0, -t.calf_length);
    foot.joint.axis = Vec3::UnitY();
    foot.inertia = {0.024, Vec3(0, 0, -t.foot_height / 2.0),
                    box(0.024, 0.08, 0.03, t.foot_height)};
    t.links.push_back(foot);
    int ft = static_cast<int>(t.links.size()) - 1;

    t.contact_frames.push_back(
        {std::string("toe_") + side[s], ft, Vec3(0.04, 0, -t.foot_height)});
    t.contact_frames.push_back(
        {std::string("heel_") + side[s], ft, Vec3(-0.04, 0, -t.foot_height)});
  }
  t.validate();
  return t;
}

}  // namespace jumpkit
