#pragma once

#include <optional>
#include <string>

#include "jumpkit/estimator.hpp"
#include "jumpkit/kinodyn.hpp"
#include "jumpkit/landing.hpp"
#include "jumpkit/sim.hpp"
#include "jumpkit/wbc.hpp"

namespace jumpkit {

/// Push specification relative to the detected liftoff instant (the paper
/// protocol) or at an absolute time.
struct PushSpec {
  Vec3 force = Vec3::Zero();
  double duration = 0.01;
  std::optional<double> after_liftoff;
  std::optional<double> start;
  Vec3 offset = Vec3(0, 0, 0.10);
};

struct JumpSpec {
  int stance_knots = 12;
  int flight_knots = 17;
  int landing_knots = 16;
  double dt = 0.02;
  Vec3 v_liftoff = Vec3(0, 0, 1.715);
  Eigen::Vector2d final_offset = Eigen::Vector2d::Zero();
  double step_height = 0.0;     // landing surface offset (+step, -drop)
  double platform_height = 0.0; // raised start surface
  std::optional<double> twist_yaw;
  std::optional<double> liftoff_pitch_momentum;  // flip scenarios
  bool planar = false;
  double mu = 0.5;
  double squat_depth = 0.06;
  double stand_extension = 0.93;  // stand base height as a leg-reach fraction
};

struct Scenario {
  std::string name = "scenario";
  std::string model_file;
  KinematicTree tree;
  JumpSpec jump;
  ContactSchedule schedule;  // built from jump by the loader
  JumpTask task;
  PlannerOptions planner;
  double weight_q = 0.5, weight_v = 0.01, weight_hdot = 0.01, weight_f = 1e-3;
  WBCGains wbc;
  LandingGains landing;
  bool landing_enabled = true;
  bool landing_true_state = false;
  EstimatorParams estimator;
  SimParams sim;
  std::vector<PushSpec> pushes;
  double control_dt = 0.002;
  double settle_time = 1.2;
  bool allow_failure = false;
};

Scenario load_scenario(const std::string& path);
/// Writes the scenario back with every default materialized (run provenance).
void save_scenario(const Scenario& s, const std::string& path);

struct RunFlags {
  bool plan_only = false;
  bool no_landing_planner = false;
  bool true_state_feedback = false;
  std::optional<unsigned> seed;
  std::string out_dir = "out";
  std::string use_plan;  // reuse a previously written plan CSV
};

struct RunMetrics {
  int schema_version = 1;
  bool planner_converged = false;
  double planner_residual = 0.0;
  double planner_cost = 0.0;
  double planner_seconds = 0.0;
  double commanded_apex_rise = 0.0;
  double apex_com_rise = 0.0;
  bool landing_success = false;
  bool both_feet_down = false;
  bool nonfoot_contact = false;
  double com_recovery_error = 0.0;
  double max_flight_pitch = 0.0;
  double final_yaw = 0.0;
  double plan_final_yaw = 0.0;
  double liftoff_time = -1.0;
  double touchdown_time = -1.0;
  Eigen::Vector4d landing_foot_offsets = Eigen::Vector4d::Zero();  // xL yL xR yR
  double peak_contact_force = 0.0;
  double qp_time_median = 0.0;
  double qp_time_max = 0.0;
  double estimator_vel_rmse = 0.0;
  double flight_h_drift = 0.0;  // max relative drift per 0.1 s window
  Eigen::Vector4d landing_p_nom = Eigen::Vector4d::Zero();  // xL yL xR yR
  double liftoff_yaw = 0.0;
  unsigned seed = 0;
};

/// Exit codes: 0 success, 2 planner non-convergence, 3 simulation NaN,
/// 4 landing failure (unless the scenario allows it).
struct RunResult {
  int exit_code = 0;
  RunMetrics metrics;
  std::string message;
};

RunResult run_scenario(const Scenario& scenario, const RunFlags& flags);

/// Deterministic diff of two run directories: metric deltas plus the
/// time series of maximum state divergence over shared trace columns.
struct CompareResult {
  double max_metric_delta = 0.0;
  double max_state_divergence = 0.0;
  double divergence_time = 0.0;
  std::string report;  // human-readable summary
};
CompareResult compare_runs(const std::string& dir_a, const std::string& dir_b,
                           const std::string& out_csv = "");

void write_metrics(const RunMetrics& m, const std::string& path);
RunMetrics read_metrics(const std::string& path);

/// Builds the stand configuration, boundary task and contact schedule from
/// high-level jump parameters (used by the scenario loader and tests).
void build_jump_setup(const KinematicTree& tree, const JumpSpec& spec,
                      ContactSchedule& schedule, JumpTask& task);

}  // namespace jumpkit
