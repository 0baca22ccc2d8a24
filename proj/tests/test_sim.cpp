#include <doctest.h>

#include "jumpkit/scenario.hpp"
#include "jumpkit/sim.hpp"

using namespace jumpkit;

namespace {

SimParams quiet_params() {
  SimParams p;
  p.gyro_noise = 0.0;
  p.accel_noise = 0.0;
  p.gyro_bias = 0.0;
  p.accel_bias = 0.0;
  p.encoder_resolution = 0.0;
  return p;
}

Configuration airborne_config(const KinematicTree& tree, double z) {
  ContactSchedule sched;
  JumpTask task;
  JumpSpec spec;
  build_jump_setup(tree, spec, sched, task);
  Configuration q = task.q_init;
  q.base_pos.z() += z;
  return q;
}

}  // namespace

TEST_CASE("free fall follows the closed-form parabola") {
  KinematicTree tree = build_default_model();
  SimParams p = quiet_params();
  Configuration q0 = airborne_config(tree, 1.0);
  SimWorld sim(tree, p, q0, VecX::Zero(tree.nv()));
  Vec3 com0 = com_position(tree, q0);
  int steps = static_cast<int>(std::round(0.1 / p.dt));
  for (int i = 0; i < steps; ++i) sim.step(VecX::Zero(tree.njoints()));
  Vec3 com1 = com_position(tree, sim.state().q, false);
  double dz = com1.z() - com0.z();
  CHECK(dz == doctest::Approx(-0.5 * kGravity * 0.01).epsilon(2e-3));
  CHECK(std::abs(com1.x() - com0.x()) < 1e-9);
}

TEST_CASE("flight conserves angular momentum even with leg motion") {
  KinematicTree tree = build_default_model();
  SimParams p = quiet_params();
  Configuration q0 = airborne_config(tree, 1.0);
  VecX v0 = VecX::Zero(tree.nv());
  v0.segment<3>(3) = Vec3(0.3, 0.8, 0.5);  // tumbling
  SimWorld sim(tree, p, q0, v0);
  // swing the legs with torques; internal torques must not change k
  VecX tau = VecX::Zero(tree.njoints());
  tau(2) = 0.4;
  tau(7) = -0.3;
  Vec3 k_prev =
      centroidal_momentum(tree, sim.state().q, sim.state().v).tail<3>();
  int steps = static_cast<int>(std::round(0.1 / p.dt));
  for (int i = 0; i < steps; ++i) {
    sim.step(tau);
    Vec3 k = centroidal_momentum(tree, sim.state().q, sim.state().v).tail<3>();
    CHECK((k - k_prev).norm() <= 1e-6 * (1.0 + k_prev.norm()));
    k_prev = k;
  }
}

TEST_CASE("equilibrium hold: gravity-compensating torques keep the com still") {
  KinematicTree tree = build_default_model();
  ContactSchedule sched;
  JumpTask task;
  JumpSpec spec;
  build_jump_setup(tree, spec, sched, task);
  SimParams p = quiet_params();
  SimWorld sim(tree, p, task.q_init, VecX::Zero(tree.nv()));
  // settle into the penalty ground, then hold with a joint PD around the
  // stand pose (the torque source is not under test here)
  ActuatorCommand cmd;
  cmd.tau_ff = VecX::Zero(tree.njoints());
  cmd.q_des = task.q_init.joint_pos;
  cmd.qd_des = VecX::Zero(tree.njoints());
  cmd.kp = VecX::Constant(tree.njoints(), 80.0);
  cmd.kd = VecX::Constant(tree.njoints(), 2.0);
  Vec3 com0 = com_position(tree, task.q_init);
  for (int i = 0; i < 2000; ++i) sim.step(cmd);
  Vec3 com1 = com_position(tree, sim.state().q, false);
  CHECK((com1 - com0).head<2>().norm() < 1e-3);
  CHECK(std::abs(com1.z() - com0.z()) < 2e-3);  // small penalty settling
}

TEST_CASE("contact switches: airborne, flat stance, toe-only") {
  KinematicTree tree = build_default_model();
  SimParams p = quiet_params();

  Configuration air = airborne_config(tree, 0.5);
  SimWorld sim_air(tree, p, air, VecX::Zero(tree.nv()));
  for (bool s : sim_air.read_contacts()) CHECK_FALSE(s);

  // flat double stance pressed past the switch threshold: all four close
  {
    ContactSchedule sched;
    JumpTask task;
    JumpSpec spec;
    build_jump_setup(tree, spec, sched, task);
    Configuration qf = task.q_init;
    qf.base_pos.z() -= 2.0 * p.switch_threshold;
    SimWorld sim_flat(tree, p, qf, VecX::Zero(tree.nv()));
    for (bool s : sim_flat.read_contacts()) CHECK(s);
  }

  // pitched foot: toe penetrates, heel stays above the threshold
  ContactSchedule sched;
  JumpTask task;
  JumpSpec spec;
  build_jump_setup(tree, spec, sched, task);
  Configuration q = task.q_init;
  q.joint_pos(4) += 0.05;   // left ankle pitch
  q.joint_pos(9) += 0.05;   // right ankle pitch
  // drop slightly so the toe penetrates
  FKResult fk = forward_kinematics(tree, q);
  double toe_z = fk.contact_pose[tree.contact_index("toe_L")].pos.z();
  q.base_pos.z() -= toe_z + 1.6 * p.switch_threshold + 1e-5;
  SimWorld sim_toe(tree, p, q, VecX::Zero(tree.nv()));
  auto sw = sim_toe.read_contacts();
  CHECK(sw[tree.contact_index("toe_L")]);
  CHECK_FALSE(sw[tree.contact_index("heel_L")]);
}

TEST_CASE("push injection transfers the exact impulse to a free-floating model") {
  KinematicTree tree = build_default_model();
  SimParams p = quiet_params();
  Configuration q0 = airborne_config(tree, 2.0);
  SimWorld sim(tree, p, q0, VecX::Zero(tree.nv()));
  Disturbance d;
  d.force = Vec3(70, 0, 0);
  d.start = 0.005;
  d.duration = 0.01;
  d.offset = Vec3::Zero();  // through the base origin
  sim.inject_push({d});
  for (int i = 0; i < 60; ++i) sim.step(VecX::Zero(tree.njoints()));
  auto mom = centroidal_momentum(tree, sim.state().q, sim.state().v);
  double dvx = mom.x() / tree.total_mass();
  CHECK(dvx == doctest::Approx(0.7 / 5.118).epsilon(1e-3));
}

TEST_CASE("zero-duration disturbances are rejected") {
  KinematicTree tree = build_default_model();
  SimParams p = quiet_params();
  SimWorld sim(tree, p, airborne_config(tree, 1.0), VecX::Zero(tree.nv()));
  Disturbance d;
  d.duration = 0.0;
  CHECK_THROWS_AS(sim.inject_push({d}), std::invalid_argument);
}

TEST_CASE("lateral push raises |k_x| and |l_y|") {
  KinematicTree tree = build_default_model();
  SimParams p = quiet_params();
  Configuration q0 = airborne_config(tree, 2.0);
  SimWorld sim(tree, p, q0, VecX::Zero(tree.nv()));
  Disturbance d;
  d.force = Vec3(0, 70, 0);
  d.start = 0.005;
  d.duration = 0.01;
  d.offset = Vec3(0, 0, 0.10);  // above the com -> torque about x
  sim.inject_push({d});
  for (int i = 0; i < 60; ++i) sim.step(VecX::Zero(tree.njoints()));
  auto mom = centroidal_momentum(tree, sim.state().q, sim.state().v);
  CHECK(std::abs(mom(1)) > 0.5);      // l_y approx 0.7
  CHECK(std::abs(mom(3)) > 1e-3);     // k_x picked up the torque
}

TEST_CASE("normal forces stay nonnegative and tangentials inside the disc") {
  KinematicTree tree = build_default_model();
  ContactSchedule sched;
  JumpTask task;
  JumpSpec spec;
  build_jump_setup(tree, spec, sched, task);
  SimParams p = quiet_params();
  Configuration q = task.q_init;
  q.base_pos.z() -= 0.002;  // press into the ground
  SimWorld sim(tree, p, q, VecX::Zero(tree.nv()));
  for (int i = 0; i < 400; ++i) {
    sim.step(VecX::Zero(tree.njoints()));
    for (const auto& F : sim.state().contact_forces) {
      CHECK(F.z() >= 0.0);
      CHECK(F.head<2>().norm() <= p.friction * F.z() + 1e-9);
    }
  }
}

TEST_CASE("passive energy dissipation after touchdown") {
  // A dropped passive body (no joints, four corner contacts) must lose
  // mechanical energy monotonically once the impact transient has passed.
  KinematicTree tree;
  Link base;
  base.name = "base";
  base.parent = -1;
  base.joint.type = Joint::Type::Floating;
  base.inertia = {2.0, Vec3::Zero(), 0.01 * Mat3::Identity()};
  tree.links.push_back(base);
  tree.contact_frames.push_back({"toe_L", 0, Vec3(0.05, 0.05, -0.05)});
  tree.contact_frames.push_back({"heel_L", 0, Vec3(-0.05, 0.05, -0.05)});
  tree.contact_frames.push_back({"toe_R", 0, Vec3(0.05, -0.05, -0.05)});
  tree.contact_frames.push_back({"heel_R", 0, Vec3(-0.05, -0.05, -0.05)});
  SimParams p = quiet_params();
  Configuration q;
  q.base_pos = Vec3(0, 0, 0.08);
  q.base_quat = Quat(Eigen::AngleAxisd(0.15, Vec3(1, 1, 0).normalized()));
  q.joint_pos = VecX::Zero(0);
  VecX v0 = VecX::Zero(6);
  v0(4) = 0.5;  // some initial tumble
  SimWorld sim(tree, p, q, v0);
  auto energy = [&]() {
    const SimState& st = sim.state();
    DynamicsTerms dyn = dynamics_terms(tree, st.q, st.v);
    double ke = 0.5 * st.v.dot(dyn.H * st.v);
    double pe = tree.total_mass() * kGravity *
                com_position(tree, st.q, false).z();
    return ke + pe;
  };
  for (int i = 0; i < 800; ++i) sim.step(VecX::Zero(0));
  double prev = energy();
  for (int i = 0; i < 1200; ++i) {
    sim.step(VecX::Zero(0));
    if (i % 100 == 99) {
      double e = energy();
      CHECK(e <= prev + 1e-9);
      prev = e;
    }
  }
}

TEST_CASE("determinism under a fixed seed") {
  KinematicTree tree = build_default_model();
  SimParams p;  // default noise on
  p.seed = 42;
  ContactSchedule sched;
  JumpTask task;
  JumpSpec spec;
  build_jump_setup(tree, spec, sched, task);
  SimWorld a(tree, p, task.q_init, VecX::Zero(tree.nv()));
  SimWorld b(tree, p, task.q_init, VecX::Zero(tree.nv()));
  VecX tau = VecX::Constant(tree.njoints(), 0.1);
  for (int i = 0; i < 200; ++i) {
    SensorReadings sa = a.step(tau);
    SensorReadings sb = b.step(tau);
    CHECK((sa.gyro - sb.gyro).norm() == 0.0);
    CHECK((sa.accel - sb.accel).norm() == 0.0);
    CHECK((a.state().q.ToVector() - b.state().q.ToVector()).norm() == 0.0);
  }
}

TEST_CASE("ground blocks raise the local ground height") {
  KinematicTree tree = build_default_model();
  SimParams p = quiet_params();
  GroundBlock blk{0.05, 1.0, -0.5, 0.5, 0.05};
  p.blocks.push_back(blk);
  SimWorld sim(tree, p, airborne_config(tree, 1.0), VecX::Zero(tree.nv()));
  CHECK(sim.ground_height(0.0, 0.0) == 0.0);
  CHECK(sim.ground_height(0.2, 0.0) == 0.05);
  CHECK(sim.ground_height(0.2, 0.6) == 0.0);
}
