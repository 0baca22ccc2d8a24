#include "jumpkit/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "jumpkit/leg_ik.hpp"
#include "jumpkit/model_io.hpp"
#include "jumpkit/trace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace jumpkit {

// --- setup ----------------------------------------------------------------

void build_jump_setup(const KinematicTree& tree, const JumpSpec& spec,
                      ContactSchedule& schedule, JumpTask& task) {
  const double reach = tree.thigh_length + tree.calf_length;
  Configuration q0;
  q0.base_pos = Vec3(0, 0, spec.platform_height + tree.foot_height +
                            spec.stand_extension * reach);
  q0.base_quat = Quat::Identity();
  q0.joint_pos = VecX::Zero(tree.njoints());
  for (int s = 0; s < 2; ++s) {
    double ys = (s == 0) ? 1.0 : -1.0;
    Vec3 sole(0, ys * tree.pelvis_length / 2.0,
              spec.platform_height - q0.base_pos.z());
    LegIKResult ik = leg_ik(tree, s, sole);
    if (ik.clamped) throw std::runtime_error("stand configuration out of reach");
    q0.joint_pos.segment<5>(5 * s) = ik.angles;
  }

  task.q_init = q0;
  task.r_initial = com_position(tree, q0);
  // Stance height cap: COM height with the legs extended to the edge of
  // the comfortable workspace. Liftoff and touchdown happen just below it;
  // pushing further toward full extension makes the knee lever collapse and
  // the required joint rates diverge.
  {
    Configuration q_ext = q0;
    q_ext.base_pos.z() = spec.platform_height + tree.foot_height + 0.945 * reach;
    for (int s = 0; s < 2; ++s) {
      double ys = (s == 0) ? 1.0 : -1.0;
      Vec3 sole(0, ys * tree.pelvis_length / 2.0,
                spec.platform_height - q_ext.base_pos.z());
      q_ext.joint_pos.segment<5>(5 * s) = leg_ik(tree, s, sole).angles;
    }
    task.h_nom = com_position(tree, q_ext).z();
  }
  double apex = spec.v_liftoff.z() * spec.v_liftoff.z() / (2.0 * kGravity);
  task.h_max = task.h_nom + apex + 0.05;
  task.v_liftoff = spec.v_liftoff;
  task.r_final = task.r_initial + Vec3(spec.final_offset.x(),
                                       spec.final_offset.y(), spec.step_height);
  task.twist_yaw = spec.twist_yaw;
  task.liftoff_pitch_momentum = spec.liftoff_pitch_momentum;
  task.planar = spec.planar;
  task.friction = spec.mu;
  task.squat_depth = spec.squat_depth;
  task.landing_z_offset = spec.step_height;

  FKResult fk = forward_kinematics(tree, q0);
  std::vector<int> all;
  std::vector<Vec3> stance_pos, land_pos;
  Mat3 Rtw = Mat3::Identity();
  if (spec.twist_yaw)
    Rtw = Eigen::AngleAxisd(*spec.twist_yaw, Vec3::UnitZ()).toRotationMatrix();
  for (size_t c = 0; c < tree.contact_frames.size(); ++c) {
    all.push_back(static_cast<int>(c));
    Vec3 p = fk.contact_pose[c].pos;
    p.z() = spec.platform_height;  // feet rest exactly on the start surface
    stance_pos.push_back(p);
    Vec3 rel = p - Vec3(task.r_initial.x(), task.r_initial.y(), spec.platform_height);
    Vec3 pl = Rtw * rel + Vec3(task.r_final.x(), task.r_final.y(), 0.0);
    pl.z() = spec.platform_height + spec.step_height;
    land_pos.push_back(pl);
  }
  // Backward-Euler ballistics: after n flight knots the COM rises by
  // n dt v - g dt^2 n(n+1)/2, which is less than the continuous arc by
  // g dt^2 n / 2. The flight phase must land at or above the landing
  // surface offset under the discrete dynamics, so when no explicit count
  // is given, pick the longest flight that still gets there.
  int flight = spec.flight_knots;
  if (flight <= 0) {
    auto net_rise = [&](int n) {
      return n * spec.dt * spec.v_liftoff.z() -
             kGravity * spec.dt * spec.dt * n * (n + 1) / 2.0;
    };
    flight = 1;
    for (int n = 1; n < 200; ++n) {
      if (net_rise(n) >= spec.step_height) flight = n;
    }
  }
  schedule.dt = spec.dt;
  schedule.phases.clear();
  schedule.phases.push_back({all, stance_pos, spec.stance_knots});
  schedule.phases.push_back({{}, {}, flight});
  schedule.phases.push_back({all, land_pos, spec.landing_knots});
}

// --- scenario file ---------------------------------------------------------

namespace {

Vec3 yaml_vec3(const YAML::Node& n, const Vec3& dflt) {
  if (!n) return dflt;
  if (n.IsScalar()) return Vec3::Constant(n.as<double>());
  return Vec3(n[0].as<double>(), n[1].as<double>(), n[2].as<double>());
}

}  // namespace

Scenario load_scenario(const std::string& path) {
  YAML::Node root = YAML::LoadFile(path);
  Scenario sc;
  sc.name = root["name"].as<std::string>("scenario");
  sc.model_file = root["model"].as<std::string>("");
  fs::path model_path = sc.model_file;
  if (model_path.is_relative())
    model_path = fs::path(path).parent_path() / model_path;
  sc.tree = load_model(model_path.string());

  const auto& p = root["planner"];
  if (p) {
    sc.jump.stance_knots = p["stance_knots"].as<int>(sc.jump.stance_knots);
    sc.jump.flight_knots = p["flight_knots"].as<int>(sc.jump.flight_knots);
    sc.jump.landing_knots = p["landing_knots"].as<int>(sc.jump.landing_knots);
    sc.jump.dt = p["dt"].as<double>(sc.jump.dt);
    sc.jump.v_liftoff = yaml_vec3(p["v_liftoff"], sc.jump.v_liftoff);
    if (p["final_offset"])
      sc.jump.final_offset = Eigen::Vector2d(p["final_offset"][0].as<double>(),
                                             p["final_offset"][1].as<double>());
    sc.jump.step_height = p["step_height"].as<double>(0.0);
    sc.jump.platform_height = p["platform_height"].as<double>(0.0);
    if (p["flip_momentum"] && p["flip_momentum"].as<double>() != 0.0)
      sc.jump.liftoff_pitch_momentum = p["flip_momentum"].as<double>();
    if (p["twist_deg"] && p["twist_deg"].as<double>() != 0.0)
      sc.jump.twist_yaw = p["twist_deg"].as<double>() * M_PI / 180.0;
    sc.jump.planar = p["planar"].as<bool>(false);
    sc.jump.mu = p["mu"].as<double>(sc.jump.mu);
    sc.jump.squat_depth = p["squat_depth"].as<double>(sc.jump.squat_depth);
    sc.jump.stand_extension =
        p["stand_extension"].as<double>(sc.jump.stand_extension);
    sc.planner.tol_eq = p["tol_eq"].as<double>(sc.planner.tol_eq);
    sc.planner.tol_ineq = p["tol_ineq"].as<double>(sc.planner.tol_ineq);
    sc.planner.max_outer = p["max_outer"].as<int>(sc.planner.max_outer);
    sc.planner.max_inner = p["max_inner"].as<int>(sc.planner.max_inner);
    if (p["weights"]) {
      sc.weight_q = p["weights"]["q"].as<double>(sc.weight_q);
      sc.weight_v = p["weights"]["v"].as<double>(sc.weight_v);
      sc.weight_hdot = p["weights"]["hdot"].as<double>(sc.weight_hdot);
      sc.weight_f = p["weights"]["f"].as<double>(sc.weight_f);
    }
  }
  build_jump_setup(sc.tree, sc.jump, sc.schedule, sc.task);

  const auto& lp = root["landing_planner"];
  if (lp) {
    sc.landing_enabled = lp["enabled"].as<bool>(true);
    sc.landing_true_state = lp["use_true_state"].as<bool>(false);
    sc.landing.w_lin_x = lp["w_lin_x"].as<double>(sc.landing.w_lin_x);
    sc.landing.w_ang_x = lp["w_ang_x"].as<double>(sc.landing.w_ang_x);
    sc.landing.w_lin_y = lp["w_lin_y"].as<double>(sc.landing.w_lin_y);
    sc.landing.w_ang_y = lp["w_ang_y"].as<double>(sc.landing.w_ang_y);
    sc.landing.w_clear = lp["w_clear"].as<double>(sc.landing.w_clear);
    sc.landing.p_max_x = lp["p_max_x"].as<double>(sc.landing.p_max_x);
    sc.landing.p_max_y = lp["p_max_y"].as<double>(sc.landing.p_max_y);
  }

  const auto& w = root["wbc"];
  if (w) {
    sc.wbc.com_kp = yaml_vec3(w["com_kp"], sc.wbc.com_kp);
    sc.wbc.com_kd = yaml_vec3(w["com_kd"], sc.wbc.com_kd);
    sc.wbc.torso_kp = yaml_vec3(w["torso_kp"], sc.wbc.torso_kp);
    sc.wbc.torso_kd = yaml_vec3(w["torso_kd"], sc.wbc.torso_kd);
    sc.wbc.ang_damp_kd = yaml_vec3(w["ang_damp_kd"], sc.wbc.ang_damp_kd);
    sc.wbc.w_contact = w["w_contact"].as<double>(sc.wbc.w_contact);
    sc.wbc.w_lin_momentum = w["w_lin_momentum"].as<double>(sc.wbc.w_lin_momentum);
    sc.wbc.w_torso = w["w_torso"].as<double>(sc.wbc.w_torso);
    sc.wbc.w_ang_damp = w["w_ang_damp"].as<double>(sc.wbc.w_ang_damp);
    sc.wbc.w_force_reg = w["w_force_reg"].as<double>(sc.wbc.w_force_reg);
    sc.wbc.w_accel_reg = w["w_accel_reg"].as<double>(sc.wbc.w_accel_reg);
    if (w["joint_kp"])
      sc.wbc.joint_kp = VecX::Constant(sc.tree.njoints(), w["joint_kp"].as<double>());
    if (w["joint_kd"])
      sc.wbc.joint_kd = VecX::Constant(sc.tree.njoints(), w["joint_kd"].as<double>());
    sc.wbc.friction = w["friction"].as<double>(sc.jump.mu);
  } else {
    sc.wbc.friction = sc.jump.mu;
  }

  const auto& e = root["estimator"];
  if (e) {
    sc.estimator.alpha_orientation =
        e["alpha_orientation"].as<double>(sc.estimator.alpha_orientation);
    sc.estimator.alpha_velocity =
        e["alpha_velocity"].as<double>(sc.estimator.alpha_velocity);
    sc.estimator.joint_vel_lp = e["joint_vel_lp"].as<double>(sc.estimator.joint_vel_lp);
    sc.estimator.leg_vel_lp = e["leg_vel_lp"].as<double>(sc.estimator.leg_vel_lp);
  }

  const auto& s = root["sim"];
  if (s) {
    sc.sim.seed = s["seed"].as<unsigned>(sc.sim.seed);
    sc.sim.dt = s["dt"].as<double>(sc.sim.dt);
    sc.sim.substeps = s["substeps"].as<int>(sc.sim.substeps);
    sc.sim.contact_stiffness = s["contact_stiffness"].as<double>(sc.sim.contact_stiffness);
    sc.sim.contact_damping = s["contact_damping"].as<double>(sc.sim.contact_damping);
    sc.sim.tangent_damping = s["tangent_damping"].as<double>(sc.sim.tangent_damping);
    sc.sim.friction = s["friction"].as<double>(sc.sim.friction);
    sc.sim.gyro_noise = s["gyro_noise"].as<double>(sc.sim.gyro_noise);
    sc.sim.accel_noise = s["accel_noise"].as<double>(sc.sim.accel_noise);
    sc.sim.gyro_bias = s["gyro_bias"].as<double>(sc.sim.gyro_bias);
    sc.sim.accel_bias = s["accel_bias"].as<double>(sc.sim.accel_bias);
    sc.sim.encoder_resolution =
        s["encoder_resolution"].as<double>(sc.sim.encoder_resolution);
    sc.sim.torque_limit = s["torque_limit"].as<double>(sc.sim.torque_limit);
  }
  // Raised landing surface for step jumps: half-space with a vertical face
  // offset just behind the planned heel strike.
  if (sc.jump.step_height > 0.0) {
    GroundBlock b;
    b.x_min = sc.task.r_final.x() - 0.06;
    b.x_max = 5.0;
    b.y_min = -1.0;
    b.y_max = 1.0;
    b.height = sc.jump.step_height;
    sc.sim.blocks.push_back(b);
  }
  if (sc.jump.platform_height > 0.0) {
    GroundBlock b;
    b.x_min = -2.0;
    b.x_max = std::min(0.15, sc.task.r_final.x() - 0.10);
    b.y_min = -1.0;
    b.y_max = 1.0;
    b.height = sc.jump.platform_height;
    sc.sim.blocks.push_back(b);
  }

  for (const auto& pn : root["pushes"]) {
    PushSpec ps;
    ps.force = yaml_vec3(pn["force"], Vec3::Zero());
    ps.duration = pn["duration"].as<double>(0.01);
    if (pn["after_liftoff"]) ps.after_liftoff = pn["after_liftoff"].as<double>();
    if (pn["start"]) ps.start = pn["start"].as<double>();
    ps.offset = yaml_vec3(pn["offset"], ps.offset);
    sc.pushes.push_back(ps);
  }

  sc.control_dt = root["control_dt"].as<double>(sc.control_dt);
  sc.settle_time = root["settle_time"].as<double>(sc.settle_time);
  sc.allow_failure = root["allow_failure"].as<bool>(false);
  return sc;
}

void save_scenario(const Scenario& sc, const std::string& path) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << sc.name;
  out << YAML::Key << "model" << YAML::Value << sc.model_file;
  out << YAML::Key << "planner" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "stance_knots" << YAML::Value << sc.jump.stance_knots;
  out << YAML::Key << "flight_knots" << YAML::Value << sc.jump.flight_knots;
  out << YAML::Key << "landing_knots" << YAML::Value << sc.jump.landing_knots;
  out << YAML::Key << "dt" << YAML::Value << sc.jump.dt;
  out << YAML::Key << "v_liftoff" << YAML::Value << YAML::Flow << YAML::BeginSeq
      << sc.jump.v_liftoff.x() << sc.jump.v_liftoff.y() << sc.jump.v_liftoff.z()
      << YAML::EndSeq;
  out << YAML::Key << "final_offset" << YAML::Value << YAML::Flow
      << YAML::BeginSeq << sc.jump.final_offset.x() << sc.jump.final_offset.y()
      << YAML::EndSeq;
  out << YAML::Key << "step_height" << YAML::Value << sc.jump.step_height;
  out << YAML::Key << "platform_height" << YAML::Value << sc.jump.platform_height;
  out << YAML::Key << "flip_momentum" << YAML::Value
      << (sc.jump.liftoff_pitch_momentum ? *sc.jump.liftoff_pitch_momentum : 0.0);
  out << YAML::Key << "twist_deg" << YAML::Value
      << (sc.jump.twist_yaw ? *sc.jump.twist_yaw * 180.0 / M_PI : 0.0);
  out << YAML::Key << "planar" << YAML::Value << sc.jump.planar;
  out << YAML::Key << "mu" << YAML::Value << sc.jump.mu;
  out << YAML::Key << "squat_depth" << YAML::Value << sc.jump.squat_depth;
  out << YAML::Key << "stand_extension" << YAML::Value << sc.jump.stand_extension;
  out << YAML::Key << "tol_eq" << YAML::Value << sc.planner.tol_eq;
  out << YAML::Key << "tol_ineq" << YAML::Value << sc.planner.tol_ineq;
  out << YAML::Key << "max_outer" << YAML::Value << sc.planner.max_outer;
  out << YAML::Key << "max_inner" << YAML::Value << sc.planner.max_inner;
  out << YAML::Key << "weights" << YAML::Value << YAML::Flow << YAML::BeginMap
      << YAML::Key << "q" << YAML::Value << sc.weight_q << YAML::Key << "v"
      << YAML::Value << sc.weight_v << YAML::Key << "hdot" << YAML::Value
      << sc.weight_hdot << YAML::Key << "f" << YAML::Value << sc.weight_f
      << YAML::EndMap;
  out << YAML::EndMap;

  out << YAML::Key << "landing_planner" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "enabled" << YAML::Value << sc.landing_enabled;
  out << YAML::Key << "use_true_state" << YAML::Value << sc.landing_true_state;
  out << YAML::Key << "w_lin_x" << YAML::Value << sc.landing.w_lin_x;
  out << YAML::Key << "w_ang_x" << YAML::Value << sc.landing.w_ang_x;
  out << YAML::Key << "w_lin_y" << YAML::Value << sc.landing.w_lin_y;
  out << YAML::Key << "w_ang_y" << YAML::Value << sc.landing.w_ang_y;
  out << YAML::Key << "w_clear" << YAML::Value << sc.landing.w_clear;
  out << YAML::Key << "p_max_x" << YAML::Value << sc.landing.p_max_x;
  out << YAML::Key << "p_max_y" << YAML::Value << sc.landing.p_max_y;
  out << YAML::EndMap;

  out << YAML::Key << "wbc" << YAML::Value << YAML::BeginMap;
  auto put3 = [&](const char* key, const Vec3& v) {
    out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq
        << v.x() << v.y() << v.z() << YAML::EndSeq;
  };
  put3("com_kp", sc.wbc.com_kp);
  put3("com_kd", sc.wbc.com_kd);
  put3("torso_kp", sc.wbc.torso_kp);
  put3("torso_kd", sc.wbc.torso_kd);
  put3("ang_damp_kd", sc.wbc.ang_damp_kd);
  out << YAML::Key << "w_contact" << YAML::Value << sc.wbc.w_contact;
  out << YAML::Key << "w_lin_momentum" << YAML::Value << sc.wbc.w_lin_momentum;
  out << YAML::Key << "w_torso" << YAML::Value << sc.wbc.w_torso;
  out << YAML::Key << "w_ang_damp" << YAML::Value << sc.wbc.w_ang_damp;
  out << YAML::Key << "w_force_reg" << YAML::Value << sc.wbc.w_force_reg;
  out << YAML::Key << "w_accel_reg" << YAML::Value << sc.wbc.w_accel_reg;
  out << YAML::Key << "joint_kp" << YAML::Value
      << (sc.wbc.joint_kp.size() ? sc.wbc.joint_kp(0) : 60.0);
  out << YAML::Key << "joint_kd" << YAML::Value
      << (sc.wbc.joint_kd.size() ? sc.wbc.joint_kd(0) : 2.0);
  out << YAML::Key << "friction" << YAML::Value << sc.wbc.friction;
  out << YAML::EndMap;

  out << YAML::Key << "estimator" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "alpha_orientation" << YAML::Value
      << sc.estimator.alpha_orientation;
  out << YAML::Key << "alpha_velocity" << YAML::Value << sc.estimator.alpha_velocity;
  out << YAML::Key << "joint_vel_lp" << YAML::Value << sc.estimator.joint_vel_lp;
  out << YAML::Key << "leg_vel_lp" << YAML::Value << sc.estimator.leg_vel_lp;
  out << YAML::EndMap;

  out << YAML::Key << "sim" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << sc.sim.seed;
  out << YAML::Key << "dt" << YAML::Value << sc.sim.dt;
  out << YAML::Key << "substeps" << YAML::Value << sc.sim.substeps;
  out << YAML::Key << "contact_stiffness" << YAML::Value << sc.sim.contact_stiffness;
  out << YAML::Key << "contact_damping" << YAML::Value << sc.sim.contact_damping;
  out << YAML::Key << "tangent_damping" << YAML::Value << sc.sim.tangent_damping;
  out << YAML::Key << "friction" << YAML::Value << sc.sim.friction;
  out << YAML::Key << "gyro_noise" << YAML::Value << sc.sim.gyro_noise;
  out << YAML::Key << "accel_noise" << YAML::Value << sc.sim.accel_noise;
  out << YAML::Key << "gyro_bias" << YAML::Value << sc.sim.gyro_bias;
  out << YAML::Key << "accel_bias" << YAML::Value << sc.sim.accel_bias;
  out << YAML::Key << "encoder_resolution" << YAML::Value
      << sc.sim.encoder_resolution;
  out << YAML::Key << "torque_limit" << YAML::Value << sc.sim.torque_limit;
  out << YAML::EndMap;

  if (!sc.pushes.empty()) {
    out << YAML::Key << "pushes" << YAML::Value << YAML::BeginSeq;
    for (const auto& p : sc.pushes) {
      out << YAML::BeginMap;
      out << YAML::Key << "force" << YAML::Value << YAML::Flow << YAML::BeginSeq
          << p.force.x() << p.force.y() << p.force.z() << YAML::EndSeq;
      out << YAML::Key << "duration" << YAML::Value << p.duration;
      if (p.after_liftoff)
        out << YAML::Key << "after_liftoff" << YAML::Value << *p.after_liftoff;
      if (p.start) out << YAML::Key << "start" << YAML::Value << *p.start;
      put3("offset", p.offset);
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  out << YAML::Key << "control_dt" << YAML::Value << sc.control_dt;
  out << YAML::Key << "settle_time" << YAML::Value << sc.settle_time;
  out << YAML::Key << "allow_failure" << YAML::Value << sc.allow_failure;
  out << YAML::EndMap;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << out.c_str() << "\n";
}

// --- metrics ----------------------------------------------------------------

void write_metrics(const RunMetrics& m, const std::string& path) {
  json j;
  j["schema_version"] = m.schema_version;
  j["planner"] = {{"converged", m.planner_converged},
                  {"residual", m.planner_residual},
                  {"cost", m.planner_cost},
                  {"seconds", m.planner_seconds},
                  {"final_yaw", m.plan_final_yaw}};
  j["commanded_apex_rise"] = m.commanded_apex_rise;
  j["apex_com_rise"] = m.apex_com_rise;
  j["landing_success"] = m.landing_success;
  j["both_feet_down"] = m.both_feet_down;
  j["nonfoot_contact"] = m.nonfoot_contact;
  j["com_recovery_error"] = m.com_recovery_error;
  j["max_flight_pitch"] = m.max_flight_pitch;
  j["final_yaw"] = m.final_yaw;
  j["liftoff_time"] = m.liftoff_time;
  j["touchdown_time"] = m.touchdown_time;
  j["landing_foot_offsets"] = {m.landing_foot_offsets(0), m.landing_foot_offsets(1),
                               m.landing_foot_offsets(2), m.landing_foot_offsets(3)};
  j["landing_p_nom"] = {m.landing_p_nom(0), m.landing_p_nom(1),
                        m.landing_p_nom(2), m.landing_p_nom(3)};
  j["liftoff_yaw"] = m.liftoff_yaw;
  j["peak_contact_force"] = m.peak_contact_force;
  j["qp_time_median"] = m.qp_time_median;
  j["qp_time_max"] = m.qp_time_max;
  j["estimator_vel_rmse"] = m.estimator_vel_rmse;
  j["flight_h_drift"] = m.flight_h_drift;
  j["seed"] = m.seed;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << "\n";
}

RunMetrics read_metrics(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  json j;
  f >> j;
  RunMetrics m;
  m.schema_version = j.value("schema_version", 1);
  m.planner_converged = j["planner"]["converged"];
  m.planner_residual = j["planner"]["residual"];
  m.planner_cost = j["planner"]["cost"];
  m.planner_seconds = j["planner"]["seconds"];
  m.plan_final_yaw = j["planner"]["final_yaw"];
  m.commanded_apex_rise = j["commanded_apex_rise"];
  m.apex_com_rise = j["apex_com_rise"];
  m.landing_success = j["landing_success"];
  m.both_feet_down = j["both_feet_down"];
  m.nonfoot_contact = j["nonfoot_contact"];
  m.com_recovery_error = j["com_recovery_error"];
  m.max_flight_pitch = j["max_flight_pitch"];
  m.final_yaw = j["final_yaw"];
  m.liftoff_time = j["liftoff_time"];
  m.touchdown_time = j["touchdown_time"];
  for (int i = 0; i < 4; ++i) {
    m.landing_foot_offsets(i) = j["landing_foot_offsets"][i];
    m.landing_p_nom(i) = j["landing_p_nom"][i];
  }
  m.liftoff_yaw = j["liftoff_yaw"];
  m.peak_contact_force = j["peak_contact_force"];
  m.qp_time_median = j["qp_time_median"];
  m.qp_time_max = j["qp_time_max"];
  m.estimator_vel_rmse = j["estimator_vel_rmse"];
  m.flight_h_drift = j["flight_h_drift"];
  m.seed = j["seed"];
  return m;
}

// --- closed loop -------------------------------------------------------------

namespace {

struct PlanSampler {
  const DecisionTrajectory* plan;
  double T() const { return (plan->knots() - 1) * plan->dt; }

  void sample(double t, Vec3& r, Vec3& rd, Vec3& rdd, Quat& quat, Vec3& omega,
              VecX& qj, VecX& qdj) const {
    double tc = std::clamp(t, 0.0, T());
    int k0 = std::min(static_cast<int>(tc / plan->dt),
                      plan->knots() - 2);
    double s = std::clamp((tc - k0 * plan->dt) / plan->dt, 0.0, 1.0);
    auto lerp3 = [s](const Vec3& a, const Vec3& b) { return Vec3(a + s * (b - a)); };
    r = lerp3(plan->r[k0], plan->r[k0 + 1]);
    rd = lerp3(plan->rd[k0], plan->rd[k0 + 1]);
    rdd = lerp3(plan->rdd[k0], plan->rdd[k0 + 1]);
    quat = plan->q[k0].base_quat.slerp(s, plan->q[k0 + 1].base_quat);
    omega = lerp3(plan->v[k0].segment<3>(3), plan->v[k0 + 1].segment<3>(3));
    qj = plan->q[k0].joint_pos + s * (plan->q[k0 + 1].joint_pos - plan->q[k0].joint_pos);
    qdj = plan->v[k0].tail(qj.size()) +
          s * (plan->v[k0 + 1].tail(qj.size()) - plan->v[k0].tail(qj.size()));
  }
};

double pitch_of(const Mat3& R) {
  return std::atan2(-R(2, 0), std::hypot(R(0, 0), R(1, 0)));
}

std::vector<std::string> sim_trace_columns(const KinematicTree& tree) {
  std::vector<std::string> c = {"t"};
  c.insert(c.end(), {"base_x", "base_y", "base_z", "quat_w", "quat_x", "quat_y", "quat_z"});
  for (int j = 0; j < tree.njoints(); ++j) c.push_back("q_" + tree.links[j + 1].name);
  c.insert(c.end(), {"vel_x", "vel_y", "vel_z", "omega_x", "omega_y", "omega_z"});
  for (int j = 0; j < tree.njoints(); ++j) c.push_back("qd_" + tree.links[j + 1].name);
  c.insert(c.end(), {"com_x", "com_y", "com_z", "comv_x", "comv_y", "comv_z",
                     "k_x", "k_y", "k_z", "pitch", "mode"});
  for (const auto& cf : tree.contact_frames)
    for (const char* a : {"_x", "_y", "_z"}) c.push_back("f_" + cf.name + a);
  return c;
}

std::vector<std::string> control_trace_columns(const KinematicTree& tree) {
  std::vector<std::string> c = {"t", "mode"};
  for (const auto& cf : tree.contact_frames) c.push_back("sw_" + cf.name);
  c.insert(c.end(), {"vtrue_x", "vtrue_y", "vtrue_z", "vest_x", "vest_y", "vest_z",
                     "com_ref_x", "com_ref_y", "com_ref_z",
                     "com_est_x", "com_est_y", "com_est_z",
                     "l_x", "l_y", "l_z", "k_x", "k_y", "k_z",
                     "pdes_x_L", "pdes_y_L", "pdes_x_R", "pdes_y_R",
                     "sat_x_L", "sat_y_L", "sat_x_R", "sat_y_R",
                     "time_to_land", "qp_status", "qp_iter", "qp_seconds",
                     "fallback",
                     "res_contact", "res_linmom", "res_torso", "res_angdamp"});
  for (int j = 0; j < tree.njoints(); ++j) c.push_back("tau_" + tree.links[j + 1].name);
  return c;
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, const RunFlags& flags) {
  Scenario sc = scenario;
  if (flags.seed) sc.sim.seed = *flags.seed;
  if (flags.no_landing_planner) sc.landing_enabled = false;
  const bool true_feedback = flags.true_state_feedback;

  fs::create_directories(flags.out_dir);
  auto out = [&](const std::string& f) { return (fs::path(flags.out_dir) / f).string(); };
  save_scenario(sc, out("scenario_used.yaml"));

  RunResult res;
  RunMetrics& M = res.metrics;
  M.seed = sc.sim.seed;
  M.commanded_apex_rise =
      sc.task.v_liftoff.z() * sc.task.v_liftoff.z() / (2.0 * kGravity);

  // ---- plan
  CostWeights weights;
  DecisionTrajectory plan;
  ConvergenceReport conv;
  DecisionTrajectory seed = seed_guess(sc.tree, sc.schedule, sc.task);
  weights = default_weights(sc.tree, seed);
  weights.q_diag.tail(sc.tree.njoints()).setConstant(sc.weight_q);
  weights.v_diag.setConstant(sc.weight_v);
  weights.h_dot_diag.setConstant(sc.weight_hdot);
  weights.force_weight = sc.weight_f;
  TranscribedNLP nlp = build_problem(sc.tree, sc.schedule, sc.task, weights);

  if (!flags.use_plan.empty()) {
    plan = load_trajectory(flags.use_plan, sc.tree);
    ValidationReport vr = validate(plan, nlp);
    conv.converged = vr.ok(sc.planner.tol_eq, sc.planner.tol_ineq);
    conv.max_equality_residual = vr.max_equality;
    conv.termination = "loaded from " + flags.use_plan;
  } else {
    std::tie(plan, conv) = solve(nlp, seed, sc.planner);
  }
  M.planner_converged = conv.converged;
  M.planner_residual = conv.max_equality_residual;
  M.planner_cost = conv.cost;
  M.planner_seconds = conv.solve_seconds;
  M.plan_final_yaw = yaw_of(plan.q.back().base_quat.toRotationMatrix());

  save_trajectory(plan, sc.schedule, sc.tree, out("plan.csv"));
  {
    ValidationReport vr = validate(plan, nlp);
    json jv;
    jv["max_equality"] = vr.max_equality;
    jv["friction_violation"] = vr.friction_violation;
    jv["bound_violation"] = vr.bound_violation;
    jv["ok"] = vr.ok(sc.planner.tol_eq, sc.planner.tol_ineq);
    for (const auto& fr : vr.equality_families)
      jv["families"][fr.family] = {{"max_abs", fr.max_abs}, {"knot", fr.knot}};
    std::ofstream f(out("validation.json"));
    f << jv.dump(2) << "\n";
  }
  {
    json jc;
    jc["converged"] = conv.converged;
    jc["outer_iterations"] = conv.outer_iterations;
    jc["inner_iterations"] = conv.inner_iterations;
    jc["max_equality_residual"] = conv.max_equality_residual;
    jc["cost"] = conv.cost;
    jc["solve_seconds"] = conv.solve_seconds;
    jc["termination"] = conv.termination;
    jc["residual_history"] = conv.residual_history;
    std::ofstream f(out("convergence.json"));
    f << jc.dump(2) << "\n";
  }
  if (!conv.converged && !sc.allow_failure) {
    res.exit_code = 2;
    res.message = "planner did not converge: " + conv.termination;
    write_metrics(M, out("metrics.json"));
    return res;
  }
  if (flags.plan_only) {
    write_metrics(M, out("metrics.json"));
    res.message = "plan only";
    return res;
  }

  // ---- closed loop
  const double dtc = sc.control_dt;
  const int steps_per_tick =
      std::max(1, static_cast<int>(std::round(dtc / sc.sim.dt)));
  const int klo = sc.schedule.liftoff_knot();
  const int ktd = sc.schedule.touchdown_knot();
  const double plan_T = (plan.knots() - 1) * plan.dt;
  const double t_end = plan_T + sc.settle_time;

  SimWorld sim(sc.tree, sc.sim, plan.q[0], VecX::Zero(sc.tree.nv()));
  StateEstimator est(
      sc.tree, sc.estimator, dtc, plan.q[0], VecX::Zero(sc.tree.nv()),
      [&sim](double x, double y) { return sim.ground_height(x, y); });
  WBCController ctrl(sc.tree, sc.wbc, dtc);
  PlanSampler sampler{&plan};

  // Planned landing soles (world) and the planned base position at
  // touchdown give the nominal offsets for the landing law.
  std::array<Vec3, 2> sole_land{};
  {
    const auto& lp = sc.schedule.phases.back();
    std::array<Vec3, 2> acc = {Vec3::Zero(), Vec3::Zero()};
    std::array<int, 2> n = {0, 0};
    for (size_t j = 0; j < lp.contacts.size(); ++j) {
      const auto& cf = sc.tree.contact_frames[lp.contacts[j]];
      int side = cf.name.find("_L") != std::string::npos ? 0 : 1;
      acc[side] += lp.contact_positions[j];
      n[side]++;
    }
    for (int s2 = 0; s2 < 2; ++s2) sole_land[s2] = acc[s2] / std::max(n[s2], 1);
  }

  CsvWriter sim_trace(out("trace_sim.csv"), sim_trace_columns(sc.tree));
  CsvWriter ctl_trace(out("trace_control.csv"), control_trace_columns(sc.tree));

  enum Mode { STANCE = 0, FLIGHT = 1, LANDING = 2 };
  Mode mode = STANCE;
  double t_liftoff = -1.0, t_touchdown = -1.0;
  Mat3 R_lo = Mat3::Identity();
  LandingGains lg = sc.landing;
  LandingCommand last_cmd;
  double max_com_z = sc.task.r_initial.z();
  double sum_vel_err2 = 0.0;
  int n_vel_err = 0;
  std::vector<double> qp_times;
  std::vector<std::pair<double, Vec3>> flight_k;
  bool nonfoot = false;
  double com_recovery_error = -1.0;
  bool both_feet_eval = false;
  int exit_code = 0;
  std::string message;

  const int nj = sc.tree.njoints();
  const int nc = static_cast<int>(sc.tree.contact_frames.size());

  try {
    double t = 0.0;
    SensorReadings sensors;
    // Prime the sensor block with a zero-torque step? No: sample from rest.
    sensors.encoders = plan.q[0].joint_pos;
    sensors.contact_switch.assign(nc, true);
    sensors.gyro.setZero();
    sensors.accel = Vec3(0, 0, kGravity);

    while (t < t_end) {
      // Snapshot feedback state.
      est.update(sensors);
      Configuration q_fb = true_feedback ? sim.state().q : est.configuration();
      VecX v_fb = true_feedback ? sim.state().v : est.velocity();

      // Mode machine.
      bool any_switch = false, all_open = true;
      for (int c = 0; c < nc; ++c) {
        if (sensors.contact_switch[c]) {
          any_switch = true;
          all_open = false;
        }
      }
      if (mode == STANCE && t >= klo * plan.dt && all_open) {
        mode = FLIGHT;
        t_liftoff = t;
        M.liftoff_time = t;
        double yl = yaw_of(q_fb.base_quat.toRotationMatrix());
        M.liftoff_yaw = yl;
        R_lo = Eigen::AngleAxisd(yl, Vec3::UnitZ()).toRotationMatrix();
        // Nominal landing offsets in the liftoff yaw frame.
        Vec3 base_td = plan.q[std::min(ktd, plan.knots() - 1)].base_pos;
        for (int s2 = 0; s2 < 2; ++s2) {
          Vec3 rel = R_lo.transpose() * (sole_land[s2] - base_td);
          lg.p_nom_x(s2) = rel.x();
          lg.p_nom_y(s2) = rel.y();
        }
        M.landing_p_nom << lg.p_nom_x(0), lg.p_nom_y(0), lg.p_nom_x(1),
            lg.p_nom_y(1);
        // Pushes scheduled relative to the actual liftoff.
        std::vector<Disturbance> ds;
        for (const auto& ps : sc.pushes) {
          Disturbance d;
          d.force = ps.force;
          d.duration = ps.duration;
          d.offset = ps.offset;
          d.start = ps.after_liftoff ? t + *ps.after_liftoff
                                     : ps.start.value_or(0.0);
          ds.push_back(d);
        }
        if (!ds.empty()) sim.inject_push(ds);
      } else if (mode == FLIGHT && any_switch) {
        mode = LANDING;
        t_touchdown = t;
        M.touchdown_time = t;
        M.landing_foot_offsets << last_cmd.p_des_x(0), last_cmd.p_des_y(0),
            last_cmd.p_des_x(1), last_cmd.p_des_y(1);
        ctrl.reset();
      }
      // Pushes at absolute times even if liftoff never happens.
      // (handled above once liftoff fires; absolute-only pushes without
      // liftoff are injected at t=0)
      // References.
      Vec3 r_ref, rd_ref, rdd_ref, omega_ref;
      Quat quat_ref;
      VecX qj_ref(nj), qdj_ref(nj);
      sampler.sample(t, r_ref, rd_ref, rdd_ref, quat_ref, omega_ref, qj_ref,
                     qdj_ref);

      WBCTickResult tick;
      Vec3 l_used = Vec3::Zero(), k_used = Vec3::Zero();
      double time_to_land = 0.0;
      if (mode == FLIGHT) {
        const Configuration& q_lp =
            (sc.landing_true_state || true_feedback) ? sim.state().q : q_fb;
        const VecX& v_lp =
            (sc.landing_true_state || true_feedback) ? sim.state().v : v_fb;
        auto mom = centroidal_momentum(sc.tree, q_lp, v_lp);
        l_used = mom.head<3>();
        k_used = mom.tail<3>();
        LandingCommand cmd;
        if (sc.landing_enabled) {
          cmd = update_landing(l_used, k_used, lg);
        } else {
          cmd.p_des_x = lg.p_nom_x;
          cmd.p_des_y = lg.p_nom_y;
        }
        last_cmd = cmd;
        double t_td_expect = t_liftoff + (ktd - klo) * plan.dt;
        time_to_land = std::max(t_td_expect - t, 0.0);

        std::array<FootTarget, 2> targets;
        FKResult fk_fb = forward_kinematics(sc.tree, q_fb, false);
        for (int s2 = 0; s2 < 2; ++s2) {
          int foot_link = sc.tree.link_index(s2 == 0 ? "foot_L" : "foot_R");
          FrameId sole_id{foot_link, Vec3(0, 0, -sc.tree.foot_height)};
          Vec3 sole_w = fk_fb.link_pose[foot_link].pos +
                        fk_fb.link_pose[foot_link].rot * sole_id.offset;
          MatX Js = frame_jacobian(sc.tree, q_fb, sole_id);
          Vec3 sole_v = Js.topRows<3>() * v_fb;
          Eigen::Vector2d cur_rel =
              (R_lo.transpose() * (sole_w - q_fb.base_pos)).head<2>();
          Eigen::Vector2d cur_vel =
              (R_lo.transpose() * (sole_v - v_fb.head<3>())).head<2>();
          Eigen::Vector2d des(cmd.p_des_x(s2), cmd.p_des_y(s2));
          // Planned sole height relative to the base at this time.
          double z_rel;
          {
            double tc = std::clamp(t, 0.0, plan_T);
            int k0 = std::min(static_cast<int>(tc / plan.dt), plan.knots() - 2);
            double sfrac = std::clamp((tc - k0 * plan.dt) / plan.dt, 0.0, 1.0);
            auto sole_rel = [&](int kk) {
              FKResult fkp = forward_kinematics(sc.tree, plan.q[kk], false);
              Vec3 sw = fkp.link_pose[foot_link].pos +
                        fkp.link_pose[foot_link].rot * sole_id.offset;
              return (sw - plan.q[kk].base_pos).z();
            };
            z_rel = (1 - sfrac) * sole_rel(k0) + sfrac * sole_rel(k0 + 1);
          }
          FootTarget ft = blend_swing_target(cur_rel, cur_vel, des, time_to_land,
                                             dtc, z_rel);
          Vec3 target_base_like(ft.pos.x(), ft.pos.y(), 0);
          Vec3 target_world = q_fb.base_pos + R_lo * target_base_like;
          target_world.z() = q_fb.base_pos.z() + ft.pos.z();
          targets[s2].pos =
              q_fb.base_quat.toRotationMatrix().transpose() *
              (target_world - q_fb.base_pos);
          targets[s2].vel.setZero();
        }
        tick = ctrl.flight_tick(q_fb, v_fb, targets);
      } else {
        // Contact set from the switches; fall back to the schedule.
        std::vector<int> contacts;
        for (int c = 0; c < nc; ++c)
          if (sensors.contact_switch[c]) contacts.push_back(c);
        if (contacts.empty()) {
          int kk = std::min(static_cast<int>(t / plan.dt), plan.knots() - 1);
          contacts = sc.schedule.contacts_at(kk);
        }
        if (contacts.empty())
          for (int c = 0; c < nc; ++c) contacts.push_back(c);
        TaskRefs refs;
        refs.com_pos = r_ref;
        refs.com_vel = rd_ref;
        refs.com_acc = rdd_ref;
        refs.torso_rot = quat_ref.toRotationMatrix();
        refs.torso_omega = omega_ref;
        tick = ctrl.stance_tick(q_fb, v_fb, refs, contacts, qj_ref, qdj_ref);
        qp_times.push_back(tick.qp_seconds);
      }

      // Advance the world one control period; the actuator model runs the
      // joint PD around the feedforward at substep rate.
      ActuatorCommand act{tick.cmd.tau_ff, tick.cmd.q_des, tick.cmd.qd_des,
                          tick.cmd.kp, tick.cmd.kd};
      for (int s2 = 0; s2 < steps_per_tick; ++s2) {
        sensors = sim.step(act);
        const SimState& st = sim.state();
        auto momt = centroidal_momentum(sc.tree, st.q, st.v);
        Vec3 com_t = com_position(sc.tree, st.q, false);
        std::vector<double> row;
        row.reserve(60);
        row.push_back(st.time);
        VecX qv = st.q.ToVector();
        for (int i = 0; i < qv.size(); ++i) row.push_back(qv(i));
        for (int i = 0; i < st.v.size(); ++i) row.push_back(st.v(i));
        for (int a = 0; a < 3; ++a) row.push_back(com_t(a));
        for (int a = 0; a < 3; ++a)
          row.push_back(momt(a) / sc.tree.total_mass());
        for (int a = 0; a < 3; ++a) row.push_back(momt(3 + a));
        row.push_back(pitch_of(st.q.base_quat.toRotationMatrix()));
        row.push_back(static_cast<double>(mode));
        for (const auto& F : st.contact_forces)
          for (int a = 0; a < 3; ++a) row.push_back(F(a));
        sim_trace.row(row);

        max_com_z = std::max(max_com_z, com_t.z());
        for (const auto& F : st.contact_forces)
          M.peak_contact_force = std::max(M.peak_contact_force, F.norm());
        if (mode == FLIGHT) {
          flight_k.emplace_back(st.time, momt.tail<3>());
          M.max_flight_pitch = std::max(
              M.max_flight_pitch,
              std::abs(pitch_of(st.q.base_quat.toRotationMatrix())));
        }
      }
      if (sim.consume_nonfoot_contact()) nonfoot = true;

      // Estimator quality during ground phases.
      if (mode != FLIGHT) {
        Vec3 verr = est.base().velocity - sim.state().v.head<3>();
        sum_vel_err2 += verr.squaredNorm();
        ++n_vel_err;
      }

      // Control-rate trace.
      {
        std::vector<double> row;
        row.reserve(70);
        row.push_back(t);
        row.push_back(static_cast<double>(mode));
        for (int c = 0; c < nc; ++c)
          row.push_back(sensors.contact_switch[c] ? 1.0 : 0.0);
        for (int a = 0; a < 3; ++a) row.push_back(sim.state().v(a));
        for (int a = 0; a < 3; ++a) row.push_back(est.base().velocity(a));
        for (int a = 0; a < 3; ++a) row.push_back(r_ref(a));
        Vec3 com_est = com_position(sc.tree, est.configuration(), false);
        for (int a = 0; a < 3; ++a) row.push_back(com_est(a));
        for (int a = 0; a < 3; ++a) row.push_back(l_used(a));
        for (int a = 0; a < 3; ++a) row.push_back(k_used(a));
        row.push_back(last_cmd.p_des_x(0));
        row.push_back(last_cmd.p_des_y(0));
        row.push_back(last_cmd.p_des_x(1));
        row.push_back(last_cmd.p_des_y(1));
        row.push_back(last_cmd.saturated_x[0] ? 1.0 : 0.0);
        row.push_back(last_cmd.saturated_y[0] ? 1.0 : 0.0);
        row.push_back(last_cmd.saturated_x[1] ? 1.0 : 0.0);
        row.push_back(last_cmd.saturated_y[1] ? 1.0 : 0.0);
        row.push_back(time_to_land);
        row.push_back(static_cast<double>(tick.qp_status));
        row.push_back(static_cast<double>(tick.qp_iterations));
        row.push_back(tick.qp_seconds);
        row.push_back(tick.fallback ? 1.0 : 0.0);
        for (int a = 0; a < 4; ++a) row.push_back(tick.task_residuals[a]);
        for (int j = 0; j < nj; ++j) row.push_back(tick.cmd.tau_des(j));
        ctl_trace.row(row);
      }

      t += dtc;

      // Landing-success evaluation at one second after touchdown.
      if (t_touchdown >= 0 && !both_feet_eval &&
          t >= t_touchdown + 1.0) {
        both_feet_eval = true;
        bool left = false, right = false;
        for (int c = 0; c < nc; ++c) {
          if (!sensors.contact_switch[c]) continue;
          if (sc.tree.contact_frames[c].name.find("_L") != std::string::npos)
            left = true;
          else
            right = true;
        }
        M.both_feet_down = left && right;
        Vec3 com_now = com_position(sc.tree, sim.state().q, false);
        com_recovery_error = std::abs(com_now.z() - sc.task.r_final.z());
      }
    }
  } catch (const std::runtime_error& e) {
    write_metrics(M, out("metrics.json"));
    res.exit_code = 3;
    res.message = e.what();
    return res;
  }

  M.nonfoot_contact = nonfoot;
  M.apex_com_rise = max_com_z - sc.task.r_initial.z();
  M.final_yaw = yaw_of(sim.state().q.base_quat.toRotationMatrix());
  M.com_recovery_error = com_recovery_error < 0 ? 1e9 : com_recovery_error;
  M.estimator_vel_rmse =
      n_vel_err > 0 ? std::sqrt(sum_vel_err2 / n_vel_err) : 0.0;
  if (!qp_times.empty()) {
    std::vector<double> srt = qp_times;
    std::sort(srt.begin(), srt.end());
    M.qp_time_median = srt[srt.size() / 2];
    M.qp_time_max = srt.back();
  }
  // Angular momentum drift over 0.1 s flight windows.
  for (size_t i = 0; i < flight_k.size(); ++i) {
    for (size_t j = i + 1; j < flight_k.size(); ++j) {
      double dt_w = flight_k[j].first - flight_k[i].first;
      if (dt_w > 0.1) break;
      double drift = (flight_k[j].second - flight_k[i].second).norm() /
                     (1.0 + flight_k[i].second.norm());
      M.flight_h_drift = std::max(M.flight_h_drift, drift);
    }
  }
  M.landing_success = M.both_feet_down && !nonfoot &&
                      com_recovery_error >= 0 &&
                      com_recovery_error <= 0.1 * sc.task.r_final.z();

  write_metrics(M, out("metrics.json"));
  if (!M.landing_success && !sc.allow_failure) {
    exit_code = 1;
    message = "landing failure";
  }
  res.exit_code = exit_code;
  res.message = message.empty() ? "ok" : message;
  return res;
}

// --- compare -----------------------------------------------------------------

CompareResult compare_runs(const std::string& dir_a, const std::string& dir_b,
                           const std::string& out_csv) {
  CompareResult out;
  RunMetrics ma = read_metrics((fs::path(dir_a) / "metrics.json").string());
  RunMetrics mb = read_metrics((fs::path(dir_b) / "metrics.json").string());
  std::ostringstream rep;
  auto metric = [&](const char* name, double a, double b) {
    double d = std::abs(a - b);
    out.max_metric_delta = std::max(out.max_metric_delta, d);
    rep << name << ": a=" << a << " b=" << b << " delta=" << d << "\n";
  };
  metric("apex_com_rise", ma.apex_com_rise, mb.apex_com_rise);
  metric("landing_success", ma.landing_success, mb.landing_success);
  metric("max_flight_pitch", ma.max_flight_pitch, mb.max_flight_pitch);
  metric("peak_contact_force", ma.peak_contact_force, mb.peak_contact_force);
  metric("foot_offset_xL", ma.landing_foot_offsets(0), mb.landing_foot_offsets(0));
  metric("foot_offset_yL", ma.landing_foot_offsets(1), mb.landing_foot_offsets(1));
  metric("foot_offset_xR", ma.landing_foot_offsets(2), mb.landing_foot_offsets(2));
  metric("foot_offset_yR", ma.landing_foot_offsets(3), mb.landing_foot_offsets(3));
  metric("final_yaw", ma.final_yaw, mb.final_yaw);

  CsvTable ta = read_csv((fs::path(dir_a) / "trace_control.csv").string());
  CsvTable tb = read_csv((fs::path(dir_b) / "trace_control.csv").string());
  if (ta.columns != tb.columns)
    throw std::runtime_error("trace schema mismatch between runs");
  int nrows = std::min(ta.rows(), tb.rows());
  std::unique_ptr<CsvWriter> w;
  if (!out_csv.empty())
    w = std::make_unique<CsvWriter>(out_csv,
                                    std::vector<std::string>{"t", "max_divergence"});
  int tcol = ta.col("t");
  for (int i = 0; i < nrows; ++i) {
    double d = (ta.data.row(i) - tb.data.row(i)).lpNorm<Eigen::Infinity>();
    if (d > out.max_state_divergence) {
      out.max_state_divergence = d;
      out.divergence_time = ta.data(i, tcol);
    }
    if (w) w->row({ta.data(i, tcol), d});
  }
  rep << "max_state_divergence=" << out.max_state_divergence << " at t="
      << out.divergence_time << "\n";
  out.report = rep.str();
  return out;
}

}  // namespace jumpkit
