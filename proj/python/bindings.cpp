#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "jumpkit/kinodyn.hpp"
#include "jumpkit/landing.hpp"
#include "jumpkit/leg_ik.hpp"
#include "jumpkit/model.hpp"
#include "jumpkit/model_io.hpp"
#include "jumpkit/qp.hpp"
#include "jumpkit/scenario.hpp"

namespace py = pybind11;
using namespace jumpkit;

namespace {

Configuration config_from_vec(const VecX& q) {
  if (q.size() < 7) throw std::invalid_argument("q must have 7+n entries");
  return Configuration::FromVector(q);
}

}  // namespace

PYBIND11_MODULE(_jumpkit, m) {
  m.doc() = "Bipedal jumping toolkit: model, planner, landing law, QP";

  py::class_<KinematicTree>(m, "KinematicTree")
      .def_property_readonly("njoints", &KinematicTree::njoints)
      .def_property_readonly("nq", &KinematicTree::nq)
      .def_property_readonly("nv", &KinematicTree::nv)
      .def("total_mass", &KinematicTree::total_mass)
      .def("link_names", [](const KinematicTree& t) {
        std::vector<std::string> names;
        for (const auto& l : t.links) names.push_back(l.name);
        return names;
      })
      .def("contact_names", [](const KinematicTree& t) {
        std::vector<std::string> names;
        for (const auto& c : t.contact_frames) names.push_back(c.name);
        return names;
      });

  m.def("default_model", &build_default_model);
  m.def("load_model", &load_model, py::arg("path"));

  m.def(
      "forward_kinematics",
      [](const KinematicTree& t, const VecX& q) {
        FKResult fk = forward_kinematics(t, config_from_vec(q));
        py::dict out;
        for (size_t i = 0; i < t.links.size(); ++i)
          out[t.links[i].name.c_str()] =
              py::make_tuple(fk.link_pose[i].pos, fk.link_pose[i].rot);
        for (size_t c = 0; c < t.contact_frames.size(); ++c)
          out[t.contact_frames[c].name.c_str()] = py::make_tuple(
              fk.contact_pose[c].pos, fk.contact_pose[c].rot);
        return out;
      },
      py::arg("tree"), py::arg("q"));

  m.def(
      "com_position",
      [](const KinematicTree& t, const VecX& q) {
        return com_position(t, config_from_vec(q));
      },
      py::arg("tree"), py::arg("q"));

  m.def(
      "frame_jacobian",
      [](const KinematicTree& t, const VecX& q, const std::string& frame) {
        return frame_jacobian(t, config_from_vec(q), frame);
      },
      py::arg("tree"), py::arg("q"), py::arg("frame"));

  m.def(
      "centroidal_momentum_matrix",
      [](const KinematicTree& t, const VecX& q) {
        return centroidal_momentum_matrix(t, config_from_vec(q));
      },
      py::arg("tree"), py::arg("q"));

  m.def(
      "centroidal_momentum",
      [](const KinematicTree& t, const VecX& q, const VecX& v) {
        return Eigen::Matrix<double, 6, 1>(
            centroidal_momentum(t, config_from_vec(q), v));
      },
      py::arg("tree"), py::arg("q"), py::arg("v"));

  m.def(
      "mass_matrix",
      [](const KinematicTree& t, const VecX& q, const VecX& v) {
        return dynamics_terms(t, config_from_vec(q), v).H;
      },
      py::arg("tree"), py::arg("q"), py::arg("v"));

  m.def(
      "bias_forces",
      [](const KinematicTree& t, const VecX& q, const VecX& v) {
        return dynamics_terms(t, config_from_vec(q), v).bias;
      },
      py::arg("tree"), py::arg("q"), py::arg("v"));

  m.def(
      "integrate_configuration",
      [](const KinematicTree& t, const VecX& q, const VecX& v, double dt) {
        (void)t;
        return integrate_configuration(config_from_vec(q), v, dt).ToVector();
      },
      py::arg("tree"), py::arg("q"), py::arg("v"), py::arg("dt"));

  m.def(
      "leg_ik",
      [](const KinematicTree& t, int side, const Vec3& sole_target,
         double foot_yaw, double foot_pitch) {
        LegIKResult r = leg_ik(t, side, sole_target, foot_yaw, foot_pitch);
        return py::make_tuple(VecX(r.angles), r.clamped);
      },
      py::arg("tree"), py::arg("side"), py::arg("sole_target"),
      py::arg("foot_yaw") = 0.0, py::arg("foot_pitch") = 0.0);

  py::class_<LandingGains>(m, "LandingGains")
      .def(py::init<>())
      .def_readwrite("w_lin_x", &LandingGains::w_lin_x)
      .def_readwrite("w_ang_x", &LandingGains::w_ang_x)
      .def_readwrite("w_lin_y", &LandingGains::w_lin_y)
      .def_readwrite("w_ang_y", &LandingGains::w_ang_y)
      .def_readwrite("w_clear", &LandingGains::w_clear)
      .def_readwrite("p_nom_x", &LandingGains::p_nom_x)
      .def_readwrite("p_nom_y", &LandingGains::p_nom_y)
      .def_readwrite("p_max_x", &LandingGains::p_max_x)
      .def_readwrite("p_max_y", &LandingGains::p_max_y);

  m.def(
      "update_landing",
      [](const Vec3& l, const Vec3& k, const LandingGains& g) {
        LandingCommand c = update_landing(l, k, g);
        py::dict out;
        out["p_des_x"] = Eigen::Vector2d(c.p_des_x);
        out["p_des_y"] = Eigen::Vector2d(c.p_des_y);
        out["saturated_x"] = py::make_tuple(c.saturated_x[0], c.saturated_x[1]);
        out["saturated_y"] = py::make_tuple(c.saturated_y[0], c.saturated_y[1]);
        return out;
      },
      py::arg("lin_momentum"), py::arg("ang_momentum"), py::arg("gains"));

  m.def(
      "blend_swing_target",
      [](const Eigen::Vector2d& cur, const Eigen::Vector2d& cur_vel,
         const Eigen::Vector2d& des, double time_to_land, double eval_time,
         double z_ref) {
        FootTarget t =
            blend_swing_target(cur, cur_vel, des, time_to_land, eval_time, z_ref);
        return py::make_tuple(t.pos, t.vel);
      },
      py::arg("current_xy"), py::arg("current_vel_xy"), py::arg("desired_xy"),
      py::arg("time_to_land"), py::arg("eval_time"), py::arg("z_ref"));

  m.def(
      "solve_qp",
      [](const MatX& H, const VecX& g, const MatX& A, const VecX& b,
         const MatX& C, const VecX& d, double tol) {
        QuadraticProgram qp{H, g, A, b, C, d};
        QPOptions opt;
        opt.tol = tol;
        QPSolution s = solve_qp(qp, opt);
        py::dict out;
        out["x"] = s.x;
        out["status"] = s.status == QPStatus::Optimal     ? "optimal"
                        : s.status == QPStatus::Infeasible ? "infeasible"
                                                           : "max_iter";
        out["iterations"] = s.iterations;
        out["objective"] = s.objective;
        return out;
      },
      py::arg("H"), py::arg("g"), py::arg("A") = MatX(0, 0),
      py::arg("b") = VecX(0), py::arg("C") = MatX(0, 0), py::arg("d") = VecX(0),
      py::arg("tol") = 1e-6);

  m.def(
      "run_scenario",
      [](const std::string& scenario_file, const std::string& out_dir,
         bool plan_only, bool no_landing_planner, bool true_state_feedback) {
        Scenario sc = load_scenario(scenario_file);
        RunFlags flags;
        flags.out_dir = out_dir;
        flags.plan_only = plan_only;
        flags.no_landing_planner = no_landing_planner;
        flags.true_state_feedback = true_state_feedback;
        RunResult r = run_scenario(sc, flags);
        py::dict out;
        out["exit_code"] = r.exit_code;
        out["message"] = r.message;
        out["landing_success"] = r.metrics.landing_success;
        out["apex_com_rise"] = r.metrics.apex_com_rise;
        out["planner_converged"] = r.metrics.planner_converged;
        return out;
      },
      py::arg("scenario_file"), py::arg("out_dir"), py::arg("plan_only") = false,
      py::arg("no_landing_planner") = false,
      py::arg("true_state_feedback") = false);
}
