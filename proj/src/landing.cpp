#include "jumpkit/landing.hpp"

#include <cmath>

namespace jumpkit {

namespace {

double sgn(double v) { return v >= 0.0 ? 1.0 : -1.0; }

}  // namespace

LandingCommand update_landing(const Vec3& l, const Vec3& k,
                              const LandingGains& g) {
  LandingCommand cmd;
  double dy = g.w_clear * std::abs(l.y());
  for (int i = 0; i < 2; ++i) {
    double px = g.p_nom_x(i) + g.w_lin_x * l.x() + g.w_ang_x * k.y();
    double py = g.p_nom_y(i) + g.w_lin_y * l.y() + g.w_ang_y * k.x();
    double py_hat = py + (i == 0 ? dy : -dy);
    if (std::abs(px) <= g.p_max_x) {
      cmd.p_des_x(i) = px;
    } else {
      cmd.p_des_x(i) = g.p_max_x * sgn(px);
      cmd.saturated_x[i] = true;
    }
    if (std::abs(py_hat) <= g.p_max_y) {
      cmd.p_des_y(i) = py_hat;
    } else {
      cmd.p_des_y(i) = g.p_max_y * sgn(py_hat);
      cmd.saturated_y[i] = true;
    }
  }
  return cmd;
}

FootTarget blend_swing_target(const Eigen::Vector2d& current_xy,
                              const Eigen::Vector2d& current_vel_xy,
                              const Eigen::Vector2d& desired_xy,
                              double time_to_land, double eval_time,
                              double z_ref, double z_vel_ref) {
  FootTarget t;
  for (int a = 0; a < 2; ++a) {
    double p, v;
    cubic_hermite(current_xy(a), current_vel_xy(a), desired_xy(a), 0.0,
                  time_to_land, eval_time, p, v);
    t.pos(a) = p;
    t.vel(a) = v;
  }
  t.pos.z() = z_ref;
  t.vel.z() = z_vel_ref;
  return t;
}

}  // namespace jumpkit
