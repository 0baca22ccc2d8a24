#include "jumpkit/sim.hpp"

#include <cmath>

namespace jumpkit {

SimWorld::SimWorld(const KinematicTree& tree, const SimParams& params,
                   const Configuration& q0, const VecX& v0)
    : tree_(tree), params_(params), rng_(params.seed) {
  if (!(params_.dt > 0)) throw std::invalid_argument("sim dt must be > 0");
  if (params_.substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  q0.validate();
  state_.q = q0;
  state_.v = v0;
  state_.contact_forces.assign(tree_.contact_frames.size(), Vec3::Zero());
  // Fixed bias directions drawn once so runs are reproducible per seed.
  gyro_bias_dir_ = Vec3(gauss_(rng_), gauss_(rng_), gauss_(rng_)).normalized();
  accel_bias_dir_ = Vec3(gauss_(rng_), gauss_(rng_), gauss_(rng_)).normalized();
}

void SimWorld::inject_push(const std::vector<Disturbance>& pushes) {
  for (const auto& p : pushes) {
    if (!(p.duration > 0.0))
      throw std::invalid_argument("disturbance duration must be > 0");
    pushes_.push_back(p);
  }
}

double SimWorld::ground_height(double x, double y) const {
  double h = 0.0;
  for (const auto& b : params_.blocks) {
    if (x >= b.x_min && x <= b.x_max && y >= b.y_min && y <= b.y_max)
      h = std::max(h, b.height);
  }
  return h;
}

void SimWorld::substep(const ActuatorCommand& cmd, double dt) {
  const int nv = tree_.nv();
  const int nj = tree_.njoints();

  DynamicsTerms dyn = dynamics_terms(tree_, state_.q, state_.v);
  VecX tau = VecX::Zero(nv);
  // The PD feedback acts on the true joint state at substep rate; the
  // damping term is applied to the post-step velocity below (implicit).
  VecX jt = cmd.tau_ff.size() ? cmd.tau_ff : VecX::Zero(nj);
  bool has_pd = cmd.kp.size() == nj && cmd.kd.size() == nj;
  if (has_pd) {
    jt += cmd.kp.cwiseProduct(cmd.q_des - state_.q.joint_pos) +
          cmd.kd.cwiseProduct(cmd.qd_des);
  }
  if (params_.torque_limit > 0.0)
    jt = jt.cwiseMax(-params_.torque_limit).cwiseMin(params_.torque_limit);
  tau.tail(nj) = jt;

  // Penalty contacts at every contact frame. The damping part acts on the
  // post-step velocity (folded into the left-hand side), which keeps the
  // stiff foot-point dynamics stable at the working substep size.
  FKResult fk = forward_kinematics(tree_, state_.q, false);
  MatX D_impl = MatX::Zero(nv, nv);
  struct ActiveContact {
    size_t index;
    MatX Jlin;
    double fn_spring;
    bool sticking;
  };
  std::vector<ActiveContact> active;
  for (size_t c = 0; c < tree_.contact_frames.size(); ++c) {
    const auto& cf = tree_.contact_frames[c];
    Vec3 p = fk.contact_pose[c].pos;
    double zg = ground_height(p.x(), p.y());
    double pen = zg - p.z();
    state_.contact_forces[c].setZero();
    if (pen <= 0.0) continue;
    FrameId fid{cf.link, cf.offset};
    MatX J = frame_jacobian(tree_, state_.q, fid);
    MatX Jlin = J.topRows<3>();
    Vec3 pdot = Jlin * state_.v;
    double fn_spring = params_.contact_stiffness * pen;
    double fn_pred = fn_spring - params_.contact_damping * pdot.z();
    if (fn_pred <= 0.0) continue;  // separating faster than the spring pushes
    Vec3 ft_pred = -params_.tangent_damping * Vec3(pdot.x(), pdot.y(), 0.0);
    bool sticking = ft_pred.norm() <= params_.friction * fn_pred;

    Vec3 d_diag(sticking ? params_.tangent_damping : 0.0,
                sticking ? params_.tangent_damping : 0.0,
                params_.contact_damping);
    D_impl += Jlin.transpose() * d_diag.asDiagonal() * Jlin;
    tau += Jlin.transpose() * Vec3(0, 0, fn_spring);
    if (!sticking) {
      Vec3 ft = ft_pred * (params_.friction * fn_pred / ft_pred.norm());
      tau += Jlin.transpose() * ft;
    }
    active.push_back({c, Jlin, fn_spring, sticking});
  }

  // Torso pushes active in their window.
  for (const auto& push : pushes_) {
    if (state_.time >= push.start && state_.time < push.start + push.duration) {
      FrameId fid{0, push.offset};
      MatX J = frame_jacobian(tree_, state_.q, fid);
      tau += J.topRows<3>().transpose() * push.force;
    }
  }

  if (has_pd) {
    // -kd qdot on the new velocity enters the implicit damping block.
    for (int j = 0; j < nj; ++j) D_impl(6 + j, 6 + j) += cmd.kd(j);
  }
  MatX Heff = dyn.H + dt * D_impl;
  VecX acc = Heff.ldlt().solve(tau - dyn.bias - D_impl * state_.v);
  if (!acc.allFinite())
    throw std::runtime_error("simulation produced NaN at t=" +
                             std::to_string(state_.time));
  state_.base_lin_acc = acc.head<3>();
  state_.v += dt * acc;

  // Realized contact forces from the post-step velocity, for traces.
  for (const auto& ac : active) {
    Vec3 pdot = ac.Jlin * state_.v;
    double fn = std::max(0.0, ac.fn_spring - params_.contact_damping * pdot.z());
    Vec3 ft;
    if (ac.sticking) {
      ft = -params_.tangent_damping * Vec3(pdot.x(), pdot.y(), 0.0);
      double cap = params_.friction * fn;
      if (ft.norm() > cap && ft.norm() > 1e-12) ft *= cap / ft.norm();
    } else {
      Vec3 vt(pdot.x(), pdot.y(), 0.0);
      double vn = vt.norm();
      ft = vn > 1e-12 ? Vec3(-params_.friction * fn * vt / vn) : Vec3::Zero();
    }
    state_.contact_forces[ac.index] = ft + Vec3(0, 0, fn);
  }
  state_.q = integrate_configuration(state_.q, state_.v, dt);
  state_.time += dt;

  // Non-foot ground contact check on link origins (base, hips, knees).
  for (size_t i = 0; i < tree_.links.size(); ++i) {
    if (tree_.links[i].name.rfind("foot", 0) == 0) continue;
    Vec3 p = fk.link_pose[i].pos;
    if (p.z() < ground_height(p.x(), p.y()) + 0.005) state_.nonfoot_contact = true;
  }
}

SensorReadings SimWorld::step(const ActuatorCommand& cmd) {
  const double dt = params_.dt / params_.substeps;
  for (int s = 0; s < params_.substeps; ++s) substep(cmd, dt);

  SensorReadings out;
  const int nj = tree_.njoints();
  Mat3 R = state_.q.base_quat.toRotationMatrix();
  Vec3 gyro_noise(gauss_(rng_), gauss_(rng_), gauss_(rng_));
  Vec3 accel_noise(gauss_(rng_), gauss_(rng_), gauss_(rng_));
  out.gyro = state_.v.segment<3>(3) + params_.gyro_bias * gyro_bias_dir_ +
             params_.gyro_noise * gyro_noise;
  // Specific force at the base origin.
  Vec3 g_world(0, 0, -kGravity);
  out.accel = R.transpose() * (state_.base_lin_acc - g_world) +
              params_.accel_bias * accel_bias_dir_ +
              params_.accel_noise * accel_noise;
  out.encoders.resize(nj);
  for (int j = 0; j < nj; ++j) {
    double res = params_.encoder_resolution;
    out.encoders(j) = res > 0 ? std::round(state_.q.joint_pos(j) / res) * res
                              : state_.q.joint_pos(j);
  }
  out.contact_switch = read_contacts();
  return out;
}

SensorReadings SimWorld::step(const VecX& joint_torques) {
  ActuatorCommand cmd;
  cmd.tau_ff = joint_torques;
  return step(cmd);
}

std::vector<bool> SimWorld::read_contacts() const {
  FKResult fk = forward_kinematics(tree_, state_.q, false);
  std::vector<bool> out(tree_.contact_frames.size(), false);
  for (size_t c = 0; c < tree_.contact_frames.size(); ++c) {
    Vec3 p = fk.contact_pose[c].pos;
    out[c] = (ground_height(p.x(), p.y()) - p.z()) > params_.switch_threshold;
  }
  return out;
}

bool SimWorld::consume_nonfoot_contact() {
  bool v = state_.nonfoot_contact;
  state_.nonfoot_contact = false;
  return v;
}

}  // namespace jumpkit
