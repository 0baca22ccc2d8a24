#include <doctest.h>

#include <random>

#include "jumpkit/model.hpp"
#include "jumpkit/model_io.hpp"
#include "oracles.hpp"

using namespace jumpkit;

namespace {

Configuration zero_config(const KinematicTree& tree) {
  Configuration q;
  q.joint_pos = VecX::Zero(tree.njoints());
  return q;
}

}  // namespace

TEST_CASE("default model masses match the spec sheet") {
  KinematicTree tree = build_default_model();
  CHECK(tree.total_mass() == doctest::Approx(5.118).epsilon(1e-12));
  CHECK(tree.njoints() == 10);
  CHECK(tree.contact_frames.size() == 4);
}

TEST_CASE("zero configuration: contact frames sit at the summed leg length") {
  KinematicTree tree = build_default_model();
  Configuration q = zero_config(tree);
  FKResult fk = forward_kinematics(tree, q);
  double expect = -(tree.thigh_length + tree.calf_length + tree.foot_height);
  for (int c = 0; c < 4; ++c) {
    // relative to the hip frame, which sits at base height here
    CHECK(fk.contact_pose[c].pos.z() == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("fk: rigid translation equivariance") {
  KinematicTree tree = build_default_model();
  std::mt19937 rng(2);
  Configuration q = oracles::random_configuration(tree, rng);
  Vec3 d(0.3, -0.4, 0.25);
  Configuration q2 = q;
  q2.base_pos += d;
  FKResult a = forward_kinematics(tree, q);
  FKResult b = forward_kinematics(tree, q2);
  for (size_t i = 0; i < a.link_pose.size(); ++i)
    CHECK((b.link_pose[i].pos - a.link_pose[i].pos - d).norm() < 1e-14);
}

TEST_CASE("fk matches the naive transform-product oracle") {
  KinematicTree tree = build_default_model();
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Configuration q = oracles::random_configuration(tree, rng);
    FKResult fk = forward_kinematics(tree, q);
    auto T = oracles::naive_fk(tree, q);
    for (size_t i = 0; i < tree.links.size(); ++i) {
      CHECK((fk.link_pose[i].pos - T[i].translation()).norm() < 1e-10);
      CHECK((fk.link_pose[i].rot - T[i].linear()).norm() < 1e-10);
    }
  }
}

TEST_CASE("fk rejects a non-unit quaternion") {
  KinematicTree tree = build_default_model();
  Configuration q = zero_config(tree);
  q.base_quat = Quat(1.1, 0, 0, 0);
  CHECK_THROWS_AS(forward_kinematics(tree, q), std::invalid_argument);
}

TEST_CASE("com: lateral symmetry and brute-force oracle") {
  KinematicTree tree = build_default_model();
  Configuration q = zero_config(tree);
  CHECK(com_position(tree, q).y() == doctest::Approx(0.0).epsilon(1e-14));

  std::mt19937 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    Configuration qr = oracles::random_configuration(tree, rng);
    CHECK((com_position(tree, qr) - oracles::naive_com(tree, qr)).norm() < 1e-12);
  }
}

TEST_CASE("com of a single-link tree is that link's world com") {
  KinematicTree t;
  Link base;
  base.name = "base";
  base.parent = -1;
  base.joint.type = Joint::Type::Floating;
  base.inertia = {2.0, Vec3(0.1, 0.2, 0.3), 0.01 * Mat3::Identity()};
  t.links.push_back(base);
  Configuration q;
  q.joint_pos = VecX::Zero(0);
  q.base_pos = Vec3(1, 2, 3);
  q.base_quat = Quat(Eigen::AngleAxisd(0.7, Vec3(1, 1, 0).normalized()));
  Vec3 expect = q.base_pos + q.base_quat.toRotationMatrix() * base.inertia.com_offset;
  CHECK((com_position(t, q) - expect).norm() < 1e-14);
}

TEST_CASE("frame jacobian: zero velocity and finite differences") {
  KinematicTree tree = build_default_model();
  std::mt19937 rng(13);
  Configuration q = oracles::random_configuration(tree, rng);
  MatX J = frame_jacobian(tree, q, "toe_L");
  CHECK((J * VecX::Zero(tree.nv())).norm() == 0.0);

  FrameId fid = resolve_frame(tree, "toe_L");
  const double h = 1e-6;
  for (int c = 0; c < tree.nv(); ++c) {
    VecX dir = VecX::Zero(tree.nv());
    dir(c) = 1.0;
    Configuration qp = integrate_configuration(q, dir, h);
    Configuration qm = integrate_configuration(q, -dir, h);
    FKResult fp = forward_kinematics(tree, qp, false);
    FKResult fm = forward_kinematics(tree, qm, false);
    Vec3 pp = fp.link_pose[fid.link].pos + fp.link_pose[fid.link].rot * fid.offset;
    Vec3 pm = fm.link_pose[fid.link].pos + fm.link_pose[fid.link].rot * fid.offset;
    Vec3 fd_lin = (pp - pm) / (2 * h);
    Mat3 dR = fp.link_pose[fid.link].rot * fm.link_pose[fid.link].rot.transpose();
    Vec3 fd_ang = so3_log(dR) / (2 * h);
    CHECK((J.block<3, 1>(0, c) - fd_lin).norm() < 1e-5 * (1 + fd_lin.norm()));
    CHECK((J.block<3, 1>(3, c) - fd_ang).norm() < 1e-5 * (1 + fd_ang.norm()));
  }
}

TEST_CASE("frame jacobian floating-base block at identity orientation") {
  KinematicTree tree = build_default_model();
  Configuration q = zero_config(tree);
  q.base_pos = Vec3(0.1, 0.2, 0.5);
  MatX J = frame_jacobian(tree, q, "heel_R");
  FKResult fk = forward_kinematics(tree, q);
  Vec3 p = fk.contact_pose[tree.contact_index("heel_R")].pos;
  CHECK((J.block<3, 3>(0, 0) - Mat3::Identity()).norm() < 1e-14);
  CHECK((J.block<3, 3>(0, 3) + skew(p - q.base_pos)).norm() < 1e-12);
}

TEST_CASE("frame jacobian rejects unknown frames") {
  KinematicTree tree = build_default_model();
  Configuration q = zero_config(tree);
  CHECK_THROWS_AS(frame_jacobian(tree, q, "nope"), std::invalid_argument);
}

TEST_CASE("acceleration bias matches dJ/dt v") {
  KinematicTree tree = build_default_model();
  std::mt19937 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    Configuration q = oracles::random_configuration(tree, rng);
    VecX v = oracles::random_velocity(tree, rng);
    FrameId fid = resolve_frame(tree, "toe_R");
    auto bias = frame_acceleration_bias(tree, q, v, fid);
    const double h = 1e-6;
    Configuration qp = integrate_configuration(q, v, h);
    Configuration qm = integrate_configuration(q, -v, h);
    MatX Jp = frame_jacobian(tree, qp, fid);
    MatX Jm = frame_jacobian(tree, qm, fid);
    VecX fd = ((Jp - Jm) / (2 * h)) * v;
    CHECK((bias - fd).norm() < 2e-5 * (1 + fd.norm()));
  }
}

TEST_CASE("dynamics: gravity wrench at rest") {
  KinematicTree tree = build_default_model();
  Configuration q = zero_config(tree);
  q.base_pos.z() = 0.6;
  DynamicsTerms dyn = dynamics_terms(tree, q, VecX::Zero(tree.nv()));
  // with v = 0 the bias is pure gravity; the z row carries the full weight
  CHECK(dyn.bias(2) == doctest::Approx(5.118 * kGravity).epsilon(1e-10));
  CHECK(std::abs(dyn.bias(0)) < 1e-10);
  CHECK(std::abs(dyn.bias(1)) < 1e-10);
}

TEST_CASE("dynamics: mass matrix vs kinetic-energy oracle") {
  KinematicTree tree = build_default_model();
  std::mt19937 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    Configuration q = oracles::random_configuration(tree, rng);
    VecX v = oracles::random_velocity(tree, rng);
    DynamicsTerms dyn = dynamics_terms(tree, q, v);
    double ke = oracles::naive_kinetic_energy(tree, q, v);
    CHECK(0.5 * v.dot(dyn.H * v) == doctest::Approx(ke).epsilon(1e-9));
    CHECK((dyn.H - dyn.H.transpose()).norm() < 1e-9);
    Eigen::SelfAdjointEigenSolver<MatX> es(dyn.H);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("dynamics: gravity vector vs finite-differenced potential") {
  KinematicTree tree = build_default_model();
  std::mt19937 rng(29);
  for (int trial = 0; trial < 5; ++trial) {
    Configuration q = oracles::random_configuration(tree, rng);
    DynamicsTerms dyn = dynamics_terms(tree, q, VecX::Zero(tree.nv()));
    const double h = 1e-6;
    for (int c = 0; c < tree.nv(); ++c) {
      VecX dir = VecX::Zero(tree.nv());
      dir(c) = 1.0;
      double up = oracles::naive_potential(tree, integrate_configuration(q, dir, h));
      double um = oracles::naive_potential(tree, integrate_configuration(q, -dir, h));
      double fd = (up - um) / (2 * h);
      CHECK(dyn.gravity(c) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("cmm: pure base translation carries m*u and no angular momentum") {
  KinematicTree tree = build_default_model();
  std::mt19937 rng(31);
  Configuration q = oracles::random_configuration(tree, rng);
  VecX v = VecX::Zero(tree.nv());
  Vec3 u(0.7, -0.2, 0.4);
  v.head<3>() = u;
  auto h = centroidal_momentum(tree, q, v);
  CHECK((h.head<3>() - tree.total_mass() * u).norm() < 1e-12);
  CHECK(h.tail<3>().norm() < 1e-12);
}

TEST_CASE("cmm matrix matches the per-link momentum oracle") {
  KinematicTree tree = build_default_model();
  std::mt19937 rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    Configuration q = oracles::random_configuration(tree, rng);
    VecX v = oracles::random_velocity(tree, rng);
    MatX A = centroidal_momentum_matrix(tree, q);
    auto ref = oracles::naive_momentum(tree, q, v);
    CHECK((A * v - ref).norm() <= 1e-9 * (1.0 + v.norm()));
    // fast path agrees with the matrix
    CHECK((A * v - centroidal_momentum(tree, q, v)).norm() < 1e-10);
  }
}

TEST_CASE("cmm linear rows differentiate the com") {
  KinematicTree tree = build_default_model();
  std::mt19937 rng(41);
  Configuration q = oracles::random_configuration(tree, rng);
  VecX v = oracles::random_velocity(tree, rng);
  MatX A = centroidal_momentum_matrix(tree, q);
  const double h = 1e-7;
  Vec3 cp = com_position(tree, integrate_configuration(q, v, h), false);
  Vec3 cm = com_position(tree, integrate_configuration(q, -v, h), false);
  Vec3 rdot_fd = (cp - cm) / (2 * h);
  CHECK((A.topRows<3>() * v / tree.total_mass() - rdot_fd).norm() < 1e-6);
}

TEST_CASE("integrate configuration") {
  KinematicTree tree = build_default_model();
  Configuration q = zero_config(tree);
  VecX v = VecX::Zero(tree.nv());

  SUBCASE("zero velocity is a fixed point") {
    Configuration q2 = integrate_configuration(q, v, 0.1);
    CHECK((q2.ToVector() - q.ToVector()).norm() == 0.0);
  }
  SUBCASE("yaw rate integrates on the group") {
    v(5) = M_PI;  // body yaw rate
    Configuration q2 = integrate_configuration(q, v, 0.5);
    CHECK(yaw_of(q2.base_quat.toRotationMatrix()) ==
          doctest::Approx(M_PI / 2).epsilon(1e-12));
  }
  SUBCASE("norm preserved over many random steps") {
    std::mt19937 rng(43);
    Configuration qc = q;
    for (int i = 0; i < 1000; ++i)
      qc = integrate_configuration(qc, oracles::random_velocity(tree, rng), 0.01);
    CHECK(std::abs(qc.base_quat.norm() - 1.0) < 1e-9);
  }
  SUBCASE("rejects non-positive dt") {
    CHECK_THROWS_AS(integrate_configuration(q, v, 0.0), std::invalid_argument);
  }
}

TEST_CASE("mirror symmetry: reflected configuration reflects com and feet") {
  KinematicTree tree = build_default_model();
  std::mt19937 rng(47);
  Configuration q = oracles::random_configuration(tree, rng);
  q.base_quat = Quat::Identity();  // keep the reflection simple
  q.base_pos.y() = 0.1;

  Configuration qm = q;
  qm.base_pos.y() = -q.base_pos.y();
  // swap legs; yaw and roll joints flip sign, pitch joints are preserved
  for (int j = 0; j < 5; ++j) {
    double sgn = (j == 0 || j == 1) ? -1.0 : 1.0;
    qm.joint_pos(j) = sgn * q.joint_pos(5 + j);
    qm.joint_pos(5 + j) = sgn * q.joint_pos(j);
  }
  Vec3 c = com_position(tree, q);
  Vec3 cm = com_position(tree, qm);
  CHECK(cm.x() == doctest::Approx(c.x()).epsilon(1e-10));
  CHECK(cm.y() == doctest::Approx(-c.y()).epsilon(1e-10));
  CHECK(cm.z() == doctest::Approx(c.z()).epsilon(1e-10));

  FKResult fa = forward_kinematics(tree, q);
  FKResult fb = forward_kinematics(tree, qm);
  Vec3 toeL = fa.contact_pose[tree.contact_index("toe_L")].pos;
  Vec3 toeR = fb.contact_pose[tree.contact_index("toe_R")].pos;
  CHECK(toeR.x() == doctest::Approx(toeL.x()).epsilon(1e-10));
  CHECK(toeR.y() == doctest::Approx(-toeL.y()).epsilon(1e-10));
  CHECK(toeR.z() == doctest::Approx(toeL.z()).epsilon(1e-10));
}

TEST_CASE("model file round trip reproduces the default model") {
  KinematicTree tree = build_default_model();
  std::string path = "/tmp/jumpkit_model_roundtrip.yaml";
  save_model(tree, path);
  KinematicTree back = load_model(path);
  REQUIRE(back.links.size() == tree.links.size());
  CHECK(back.total_mass() == doctest::Approx(tree.total_mass()).epsilon(1e-12));
  for (size_t i = 0; i < tree.links.size(); ++i) {
    CHECK(back.links[i].name == tree.links[i].name);
    CHECK((back.links[i].inertia.rot_inertia - tree.links[i].inertia.rot_inertia)
              .norm() < 1e-12);
    CHECK((back.links[i].placement_pos - tree.links[i].placement_pos).norm() <
          1e-12);
  }
  REQUIRE(back.contact_frames.size() == tree.contact_frames.size());
}

TEST_CASE("shipped default model file matches the built-in model") {
  KinematicTree tree = build_default_model();
  KinematicTree file =
      load_model(std::string(JUMPKIT_SOURCE_DIR) + "/models/minibiped.yaml");
  REQUIRE(file.links.size() == tree.links.size());
  CHECK(file.total_mass() == doctest::Approx(5.118).epsilon(1e-9));
  for (size_t i = 0; i < tree.links.size(); ++i) {
    CHECK(file.links[i].inertia.mass ==
          doctest::Approx(tree.links[i].inertia.mass).epsilon(1e-12));
    CHECK((file.links[i].placement_pos - tree.links[i].placement_pos).norm() <
          1e-12);
  }
}

TEST_CASE("spatial inertia invariants are enforced") {
  SpatialInertia bad;
  bad.mass = -1.0;
  bad.rot_inertia = Mat3::Identity();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  SpatialInertia tri;
  tri.mass = 1.0;
  tri.rot_inertia = Vec3(1.0, 0.1, 0.1).asDiagonal();  // 1 > 0.1 + 0.1
  CHECK_THROWS_AS(tri.validate(), std::invalid_argument);
}
