#include <doctest.h>

#include <random>

#include "jumpkit/kinodyn.hpp"
#include "jumpkit/scenario.hpp"

using namespace jumpkit;

namespace {

struct Setup {
  KinematicTree tree;
  ContactSchedule schedule;
  JumpTask task;
};

Setup planar_insitu(double v_lo, int stance, int landing) {
  Setup s;
  s.tree = build_default_model();
  JumpSpec spec;
  spec.planar = true;
  spec.v_liftoff = Vec3(0, 0, v_lo);
  spec.stance_knots = stance;
  spec.flight_knots = 0;  // longest feasible discrete ballistic arc
  spec.landing_knots = landing;
  build_jump_setup(s.tree, spec, s.schedule, s.task);
  return s;
}

Setup static_stand(int knots) {
  Setup s;
  s.tree = build_default_model();
  JumpSpec spec;
  spec.planar = true;
  spec.v_liftoff = Vec3::Zero();
  build_jump_setup(s.tree, spec, s.schedule, s.task);
  s.task.v_liftoff = Vec3::Zero();
  // single all-stance phase
  ContactPhase p = s.schedule.phases[0];
  p.knots = knots;
  s.schedule.phases = {p};
  return s;
}

// Static equilibrium by hand: stand configuration, forces distributing the
// weight with the center of pressure under the COM.
DecisionTrajectory static_trajectory(const Setup& s) {
  const int N = s.schedule.total_knots();
  DecisionTrajectory t;
  t.dt = s.schedule.dt;
  Vec3 r0 = s.task.r_initial;
  const double m = s.tree.total_mass();
  const auto& phase = s.schedule.phases[0];
  // per-foot toe/heel split putting the COP at the COM x
  double x_toe = 0, x_heel = 0;
  for (size_t j = 0; j < phase.contacts.size(); ++j) {
    const auto& name = s.tree.contact_frames[phase.contacts[j]].name;
    if (name.rfind("toe", 0) == 0) x_toe = phase.contact_positions[j].x();
    if (name.rfind("heel", 0) == 0) x_heel = phase.contact_positions[j].x();
  }
  double w_toe = (r0.x() - x_heel) / (x_toe - x_heel);
  for (int k = 0; k < N; ++k) {
    t.q.push_back(s.task.q_init);
    t.v.push_back(VecX::Zero(s.tree.nv()));
    t.r.push_back(r0);
    t.rd.push_back(Vec3::Zero());
    t.rdd.push_back(Vec3::Zero());
    t.h.push_back(Vec3::Zero());
    std::vector<Vec3> F;
    for (size_t j = 0; j < phase.contacts.size(); ++j) {
      const auto& name = s.tree.contact_frames[phase.contacts[j]].name;
      double wz = (name.rfind("toe", 0) == 0) ? w_toe : (1.0 - w_toe);
      F.push_back(Vec3(0, 0, 0.5 * m * kGravity * wz));
    }
    t.forces.push_back(F);
  }
  return t;
}

}  // namespace

TEST_CASE("static equilibrium satisfies every residual family to 1e-8") {
  Setup s = static_stand(6);
  DecisionTrajectory t = static_trajectory(s);
  // COM y of the stand is zero by symmetry; COP x matches r0 by construction,
  // so the momentum-rate residual vanishes.
  CostWeights w = default_weights(s.tree, t);
  TranscribedNLP nlp = build_problem(s.tree, s.schedule, s.task, w);
  ValidationReport rep = validate(t, nlp);
  for (const auto& fam : rep.equality_families) {
    INFO(fam.family);
    CHECK(fam.max_abs < 1e-8);
  }
  CHECK(rep.friction_violation == 0.0);
  CHECK(rep.bound_violation < 1e-12);
}

TEST_CASE("flight knots: ballistic acceleration zeroes the momentum residual") {
  Setup s = planar_insitu(1.0, 4, 4);
  DecisionTrajectory t = seed_guess(s.tree, s.schedule, s.task);
  CostWeights w = default_weights(s.tree, t);
  TranscribedNLP nlp = build_problem(s.tree, s.schedule, s.task, w);
  VecX x = nlp.pack(t);
  // force a flight knot to exact ballistic acceleration
  int kf = s.schedule.liftoff_knot() + 2;
  x.segment<3>(nlp.rdd_offset(kf)) = Vec3(0, 0, -kGravity);
  VecX c(nlp.num_eq());
  nlp.residuals(x, c);
  // the lin_momentum rows of that knot are exactly zero (no forces in flight)
  auto fams = nlp.residuals_by_family(x);
  (void)fams;
  DecisionTrajectory t2 = nlp.unpack(x);
  Vec3 resid = s.tree.total_mass() * t2.rdd[kf] -
               s.tree.total_mass() * Vec3(0, 0, -kGravity);
  CHECK(resid.norm() < 1e-12);
}

TEST_CASE("momentum-rate residual reproduces the hand cross product") {
  // c - r = (0.1, 0, -h), F = (0,0,50) -> torque = (0, -5, 0)
  Vec3 r(0.0, 0.0, 0.4);
  Vec3 c = r + Vec3(0.1, 0.0, -0.4);
  Vec3 F(0, 0, 50);
  Vec3 torque = (c - r).cross(F);
  CHECK((torque - Vec3(0, -5, 0)).norm() < 1e-14);
}

TEST_CASE("seed: in-situ guess holds com xy and satisfies the fk residual") {
  Setup s = planar_insitu(1.715, 12, 16);
  DecisionTrajectory t = seed_guess(s.tree, s.schedule, s.task);
  for (int k = 0; k < t.knots(); ++k) {
    CHECK(std::abs(t.r[k].x() - s.task.r_initial.x()) < 5e-3);
    CHECK(std::abs(t.r[k].y() - s.task.r_initial.y()) < 1e-9);
    // Eq-(5)-style residual by construction
    CHECK((t.r[k] - com_position(s.tree, t.q[k], false)).norm() < 1e-6);
  }
  // ballistic apex: v^2/(2g) = 0.150 for v = 1.715
  double apex = 0.0;
  for (int k = 0; k < t.knots(); ++k)
    apex = std::max(apex, t.r[k].z() - s.task.h_nom);
  CHECK(apex == doctest::Approx(0.150).epsilon(0.05));
}

TEST_CASE("seed rejects out-of-reach com splines naming the knot") {
  Setup s = planar_insitu(1.0, 6, 6);
  s.task.squat_depth = 0.30;  // deeper than the legs allow
  try {
    seed_guess(s.tree, s.schedule, s.task);
    FAIL("expected an infeasible-seed error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("knot") != std::string::npos);
  }
}

TEST_CASE("transcription jacobian matches finite differences") {
  Setup s = planar_insitu(0.8, 3, 3);
  s.task.planar = false;  // exercise every column
  DecisionTrajectory t = seed_guess(s.tree, s.schedule, s.task);
  CostWeights w = default_weights(s.tree, t);
  TranscribedNLP nlp = build_problem(s.tree, s.schedule, s.task, w);
  VecX x = nlp.pack(t);
  // move off the seed so nothing is at a special point
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < x.size(); ++i) x(i) += 0.01 * u(rng);

  Eigen::SparseMatrix<double> J;
  nlp.jacobian(x, J);
  VecX c0(nlp.num_eq());
  nlp.residuals(x, c0);
  const double h = 1e-6;
  std::uniform_int_distribution<int> pick(0, nlp.num_vars() - 1);
  for (int trial = 0; trial < 200; ++trial) {
    int col = pick(rng);
    VecX xp = x, xm = x;
    xp(col) += h;
    xm(col) -= h;
    VecX cp(nlp.num_eq()), cm(nlp.num_eq());
    nlp.residuals(xp, cp);
    nlp.residuals(xm, cm);
    VecX fd = (cp - cm) / (2 * h);
    VecX jc = J.col(col);
    CHECK((jc - fd).lpNorm<Eigen::Infinity>() < 5e-5 * (1 + fd.lpNorm<Eigen::Infinity>()));
  }
  // cost gradient
  VecX g(nlp.num_vars());
  double f0 = nlp.cost(x, &g);
  (void)f0;
  for (int trial = 0; trial < 100; ++trial) {
    int col = pick(rng);
    VecX xp = x, xm = x;
    xp(col) += h;
    xm(col) -= h;
    double fd = (nlp.cost(xp, nullptr) - nlp.cost(xm, nullptr)) / (2 * h);
    CHECK(g(col) == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
  }
}

TEST_CASE("friction-cone projection is exact and idempotent") {
  Setup s = planar_insitu(1.0, 4, 4);
  s.task.planar = false;
  DecisionTrajectory t = seed_guess(s.tree, s.schedule, s.task);
  CostWeights w = default_weights(s.tree, t);
  TranscribedNLP nlp = build_problem(s.tree, s.schedule, s.task, w);
  VecX x = nlp.pack(t);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < x.size(); ++i) x(i) += 0;
  // put absurd forces everywhere
  for (int k = 0; k < s.schedule.total_knots(); ++k)
    for (size_t j = 0; j < s.schedule.contacts_at(k).size(); ++j)
      x.segment<3>(nlp.f_offset(k, static_cast<int>(j))) =
          Vec3(u(rng), u(rng), u(rng));
  VecX xp = x;
  nlp.project(xp);
  const double mu = s.task.friction;
  for (int k = 0; k < s.schedule.total_knots(); ++k) {
    for (size_t j = 0; j < s.schedule.contacts_at(k).size(); ++j) {
      Vec3 F = xp.segment<3>(nlp.f_offset(k, static_cast<int>(j)));
      CHECK(F.head<2>().norm() <= mu * F.z() + 1e-10);
      CHECK(F.z() >= 0.0);
    }
  }
  VecX xpp = xp;
  nlp.project(xpp);
  CHECK((xpp - xp).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("static standing solves from its own feasible seed in few outer iterations") {
  Setup s = static_stand(6);
  DecisionTrajectory seed = static_trajectory(s);
  CostWeights w = default_weights(s.tree, seed);
  TranscribedNLP nlp = build_problem(s.tree, s.schedule, s.task, w);
  double seed_cost = nlp.cost(nlp.pack(seed), nullptr);
  PlannerOptions opt;
  auto [traj, rep] = solve(nlp, seed, opt);
  CHECK(rep.converged);
  CHECK(rep.outer_iterations <= 3);
  CHECK(rep.cost <= seed_cost + 1e-9);
  CHECK(rep.max_equality_residual < 1e-6);
}

TEST_CASE("planar in-situ jump: feasible, liftoff velocity enforced") {
  Setup s = planar_insitu(1.0, 10, 10);
  DecisionTrajectory seed = seed_guess(s.tree, s.schedule, s.task);
  CostWeights w = default_weights(s.tree, seed);
  TranscribedNLP nlp = build_problem(s.tree, s.schedule, s.task, w);
  PlannerOptions opt;
  auto [traj, rep] = solve(nlp, seed, opt);
  INFO("termination: ", rep.termination, " residual ", rep.max_equality_residual);
  CHECK(rep.converged);
  CHECK(rep.merit_monotone);
  ValidationReport vr = validate(traj, nlp);
  CHECK(vr.max_equality <= opt.tol_eq);
  CHECK(vr.friction_violation <= opt.tol_ineq);
  CHECK(vr.bound_violation <= opt.tol_ineq);
  int klo = s.schedule.liftoff_knot();
  CHECK(std::abs(traj.rd[klo].z() - 1.0) < 1e-3);

  // backward-Euler consistency of the returned trajectory
  for (int k = 1; k < traj.knots(); ++k) {
    CHECK((traj.r[k] - traj.r[k - 1] - traj.dt * traj.rd[k]).norm() <=
          3 * opt.tol_eq);
    CHECK((traj.rd[k] - traj.rd[k - 1] - traj.dt * traj.rdd[k]).norm() <=
          3 * opt.tol_eq);
  }
  // momentum bookkeeping at every knot
  const double m = s.tree.total_mass();
  for (int k = 0; k < traj.knots(); ++k) {
    Vec3 fsum = Vec3::Zero();
    for (const auto& F : traj.forces[k]) fsum += F;
    CHECK((m * traj.rdd[k] - fsum - m * Vec3(0, 0, -kGravity)).norm() <=
          3 * opt.tol_eq * m);
  }
  // flight: h constant, vertical velocity decreasing by g dt
  int ktd = s.schedule.touchdown_knot();
  for (int k = klo + 2; k < ktd; ++k) {
    CHECK((traj.h[k] - traj.h[k - 1]).norm() <= 3 * opt.tol_eq);
    CHECK(traj.rd[k].z() - traj.rd[k - 1].z() ==
          doctest::Approx(-kGravity * traj.dt).epsilon(0.02));
  }
  // kinematic consistency
  for (int k = 0; k < traj.knots(); ++k)
    CHECK((traj.r[k] - com_position(s.tree, traj.q[k], false)).norm() <=
          3 * opt.tol_eq);
}

TEST_CASE("validate flags injected faults at the right knot") {
  Setup s = planar_insitu(1.0, 5, 5);
  DecisionTrajectory t = seed_guess(s.tree, s.schedule, s.task);
  CostWeights w = default_weights(s.tree, t);
  TranscribedNLP nlp = build_problem(s.tree, s.schedule, s.task, w);

  SUBCASE("negative normal force trips the friction family") {
    DecisionTrajectory bad = t;
    bad.forces[2][1].z() = -5.0;
    ValidationReport rep = validate(bad, nlp);
    CHECK(rep.friction_violation >= 5.0);
    CHECK(rep.friction_knot == 2);
  }
  SUBCASE("perturbed h trips the momentum-kinematics family at that knot") {
    DecisionTrajectory bad = t;
    bad.h[3] += Vec3(0, 0.5, 0);
    ValidationReport rep = validate(bad, nlp);
    for (const auto& fam : rep.equality_families) {
      if (fam.family == "momentum_kin") {
        CHECK(fam.max_abs >= 0.5 - 1e-6);
        CHECK(fam.knot == 3);
      }
    }
  }
}

TEST_CASE("trajectory csv round trip") {
  Setup s = planar_insitu(1.0, 4, 4);
  DecisionTrajectory t = seed_guess(s.tree, s.schedule, s.task);
  save_trajectory(t, s.schedule, s.tree, "/tmp/jumpkit_plan_rt.csv");
  DecisionTrajectory back = load_trajectory("/tmp/jumpkit_plan_rt.csv", s.tree);
  REQUIRE(back.knots() == t.knots());
  CHECK(back.dt == doctest::Approx(t.dt).epsilon(1e-12));
  for (int k = 0; k < t.knots(); ++k) {
    CHECK((back.q[k].ToVector() - t.q[k].ToVector()).norm() < 1e-12);
    CHECK((back.v[k] - t.v[k]).norm() < 1e-12);
    CHECK((back.h[k] - t.h[k]).norm() < 1e-12);
    REQUIRE(back.forces[k].size() == t.forces[k].size());
    for (size_t j = 0; j < t.forces[k].size(); ++j)
      CHECK((back.forces[k][j] - t.forces[k][j]).norm() < 1e-12);
  }
}

TEST_CASE("schedule and task validation reject bad input") {
  Setup s = planar_insitu(1.0, 4, 4);
  ContactSchedule bad = s.schedule;
  bad.phases[0].knots = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  JumpTask bt = s.task;
  bt.h_max = bt.h_nom - 0.1;
  CHECK_THROWS_AS(bt.validate(), std::invalid_argument);
  JumpTask bt2 = s.task;
  bt2.planar = true;
  bt2.twist_yaw = 0.5;
  CHECK_THROWS_AS(bt2.validate(), std::invalid_argument);
}
