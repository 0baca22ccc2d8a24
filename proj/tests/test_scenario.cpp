#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "jumpkit/scenario.hpp"
#include "jumpkit/trace.hpp"

using namespace jumpkit;
namespace fs = std::filesystem;

namespace {

std::string scenario_path(const char* name) {
  return std::string(JUMPKIT_SOURCE_DIR) + "/scenarios/" + name;
}

}  // namespace

TEST_CASE("jump setup places feet on the ground under the hips") {
  KinematicTree tree = build_default_model();
  ContactSchedule sched;
  JumpTask task;
  JumpSpec spec;
  build_jump_setup(tree, spec, sched, task);
  CHECK(task.h_nom > 0.25);
  CHECK(task.h_max > task.h_nom);
  FKResult fk = forward_kinematics(tree, task.q_init);
  for (const auto& cp : fk.contact_pose) CHECK(std::abs(cp.pos.z()) < 1e-9);
  CHECK(sched.total_knots() ==
        spec.stance_knots + spec.flight_knots + spec.landing_knots);
  CHECK(sched.liftoff_knot() == spec.stance_knots - 1);
  CHECK(sched.touchdown_knot() == spec.stance_knots + spec.flight_knots);
}

TEST_CASE("twist setup rotates the landing footprint") {
  KinematicTree tree = build_default_model();
  ContactSchedule sched;
  JumpTask task;
  JumpSpec spec;
  spec.twist_yaw = M_PI / 6;
  spec.planar = false;
  build_jump_setup(tree, spec, sched, task);
  const auto& land = sched.phases.back();
  const auto& stance = sched.phases.front();
  // same distances from the pivot, rotated by 30 degrees
  for (size_t j = 0; j < land.contacts.size(); ++j) {
    Vec3 rel0 = stance.contact_positions[j] -
                Vec3(task.r_initial.x(), task.r_initial.y(), 0);
    Vec3 rel1 = land.contact_positions[j] -
                Vec3(task.r_final.x(), task.r_final.y(), 0);
    CHECK(rel0.head<2>().norm() == doctest::Approx(rel1.head<2>().norm()).epsilon(1e-9));
    double a0 = std::atan2(rel0.y(), rel0.x());
    double a1 = std::atan2(rel1.y(), rel1.x());
    double da = std::remainder(a1 - a0, 2 * M_PI);
    CHECK(da == doctest::Approx(M_PI / 6).epsilon(1e-9));
  }
}

TEST_CASE("scenario files load, save and reload identically") {
  Scenario sc = load_scenario(scenario_path("insitu.yaml"));
  CHECK(sc.jump.planar);
  CHECK(sc.jump.v_liftoff.z() == doctest::Approx(1.715));
  std::string tmp = "/tmp/jumpkit_scenario_rt.yaml";
  save_scenario(sc, tmp);
  Scenario back = load_scenario(tmp);
  CHECK(back.jump.stance_knots == sc.jump.stance_knots);
  CHECK(back.sim.seed == sc.sim.seed);
  CHECK(back.landing.w_lin_x == doctest::Approx(sc.landing.w_lin_x).epsilon(1e-15));
  CHECK(back.wbc.w_contact == doctest::Approx(sc.wbc.w_contact).epsilon(1e-15));
  // saving the reloaded scenario reproduces the file byte for byte
  std::string tmp2 = "/tmp/jumpkit_scenario_rt2.yaml";
  save_scenario(back, tmp2);
  std::ifstream a(tmp), b(tmp2);
  std::string sa((std::istreambuf_iterator<char>(a)), {});
  std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
}

TEST_CASE("shipped scenario library parses") {
  for (const char* name :
       {"insitu.yaml", "directional_x10cm.yaml", "twist_30deg.yaml",
        "step_up_5cm.yaml", "push_x_70N.yaml", "push_y_70N.yaml",
        "somersault_off_35cm.yaml"}) {
    INFO(name);
    CHECK_NOTHROW(load_scenario(scenario_path(name)));
  }
}

TEST_CASE("plan-only run emits plan, validation and convergence artifacts") {
  Scenario sc = load_scenario(scenario_path("insitu.yaml"));
  // shrink for test speed
  sc.jump.stance_knots = 8;
  sc.jump.flight_knots = 10;
  sc.jump.landing_knots = 8;
  sc.jump.v_liftoff.z() = 1.0;
  build_jump_setup(sc.tree, sc.jump, sc.schedule, sc.task);
  RunFlags flags;
  flags.plan_only = true;
  flags.out_dir = "/tmp/jumpkit_planonly";
  fs::remove_all(flags.out_dir);
  RunResult r = run_scenario(sc, flags);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(fs::path(flags.out_dir) / "plan.csv"));
  CHECK(fs::exists(fs::path(flags.out_dir) / "validation.json"));
  CHECK(fs::exists(fs::path(flags.out_dir) / "convergence.json"));
  CHECK(fs::exists(fs::path(flags.out_dir) / "scenario_used.yaml"));
  CHECK(fs::exists(fs::path(flags.out_dir) / "metrics.json"));
  CHECK_FALSE(fs::exists(fs::path(flags.out_dir) / "trace_sim.csv"));
  RunMetrics m = read_metrics((fs::path(flags.out_dir) / "metrics.json").string());
  CHECK(m.planner_converged);
}

TEST_CASE("metrics json round trip") {
  RunMetrics m;
  m.planner_converged = true;
  m.apex_com_rise = 0.1234;
  m.landing_success = true;
  m.landing_foot_offsets << 0.01, 0.02, -0.01, -0.02;
  m.qp_time_median = 1e-4;
  m.seed = 7;
  write_metrics(m, "/tmp/jumpkit_metrics_rt.json");
  RunMetrics b = read_metrics("/tmp/jumpkit_metrics_rt.json");
  CHECK(b.apex_com_rise == m.apex_com_rise);
  CHECK(b.landing_success == m.landing_success);
  CHECK((b.landing_foot_offsets - m.landing_foot_offsets).norm() == 0.0);
  CHECK(b.seed == m.seed);
}

TEST_CASE("compare: identical directories and schema mismatch") {
  // build two tiny fake run dirs
  for (const char* d : {"/tmp/jk_cmp_a", "/tmp/jk_cmp_b", "/tmp/jk_cmp_c"}) {
    fs::remove_all(d);
    fs::create_directories(d);
  }
  RunMetrics m;
  m.apex_com_rise = 0.15;
  write_metrics(m, "/tmp/jk_cmp_a/metrics.json");
  write_metrics(m, "/tmp/jk_cmp_b/metrics.json");
  {
    CsvWriter wa("/tmp/jk_cmp_a/trace_control.csv", {"t", "x"});
    CsvWriter wb("/tmp/jk_cmp_b/trace_control.csv", {"t", "x"});
    CsvWriter wc("/tmp/jk_cmp_c/trace_control.csv", {"t", "y"});
    for (int i = 0; i < 10; ++i) {
      wa.row({i * 0.1, std::sin(i * 0.1)});
      wb.row({i * 0.1, std::sin(i * 0.1)});
      wc.row({i * 0.1, 1.0});
    }
  }
  write_metrics(m, "/tmp/jk_cmp_c/metrics.json");
  CompareResult r = compare_runs("/tmp/jk_cmp_a", "/tmp/jk_cmp_b");
  CHECK(r.max_metric_delta == 0.0);
  CHECK(r.max_state_divergence == 0.0);
  CHECK_THROWS(compare_runs("/tmp/jk_cmp_a", "/tmp/jk_cmp_c"));
}
