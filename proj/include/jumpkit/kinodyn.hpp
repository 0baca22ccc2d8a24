#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jumpkit/model.hpp"
#include "jumpkit/nlp_solver.hpp"

namespace jumpkit {

/// One segment of the fixed contact schedule. contacts holds indices into
/// tree.contact_frames; contact_positions are the pre-specified world
/// locations the active points are pinned to during the phase.
struct ContactPhase {
  std::vector<int> contacts;
  std::vector<Vec3> contact_positions;
  int knots = 0;
};

struct ContactSchedule {
  std::vector<ContactPhase> phases;
  double dt = 0.02;

  int total_knots() const;
  int phase_of(int knot) const;
  const std::vector<int>& contacts_at(int knot) const;
  const std::vector<Vec3>& contact_positions_at(int knot) const;
  /// Last knot with active contacts before the first flight phase; -1 if
  /// there is no flight.
  int liftoff_knot() const;
  /// First contact knot after the flight phase; -1 if none.
  int touchdown_knot() const;
  void validate() const;
};

/// Boundary set of the jump: initial stand, liftoff velocity, height band,
/// final COM target and optional twist.
struct JumpTask {
  Configuration q_init;
  Vec3 r_initial = Vec3::Zero();
  Vec3 r_final = Vec3::Zero();
  double h_nom = 0.0;
  double h_max = 0.0;
  Vec3 v_liftoff = Vec3::Zero();
  std::optional<double> twist_yaw;
  // Pins h_y at the liftoff knot (somersault-style flips).
  std::optional<double> liftoff_pitch_momentum;
  bool planar = false;
  double friction = 0.5;
  double landing_z_offset = 0.0;  // landing surface offset (+step, -drop)
  double squat_depth = 0.06;   // seed shaping only
  double swing_retract = 0.02; // seed shaping only
  // Box half-widths applied to every knot (centered on the seed terms they
  // bound); generous defaults are filled by normalize().
  double joint_limit = 2.6;
  double max_joint_vel = 30.0;
  double max_base_vel = 8.0;
  double max_com_accel = 120.0;
  double max_ang_momentum = 8.0;

  void validate() const;
};

struct CostWeights {
  VecX q_diag;      // nq, >= 0
  VecX v_diag;      // nv
  Vec3 h_dot_diag = Vec3::Constant(1e-2);
  double force_weight = 1e-3;  // strictly positive, resolves unloaded-knot
                               // force degeneracy
  MatX q_nom;       // nq x N nominal joint trajectory (typically the seed)
};

struct DecisionTrajectory {
  double dt = 0.02;
  std::vector<Configuration> q;
  std::vector<VecX> v;
  std::vector<Vec3> r, rd, rdd, h;
  std::vector<std::vector<Vec3>> forces;  // per knot, schedule order

  int knots() const { return static_cast<int>(q.size()); }
};

struct FamilyResidual {
  std::string family;
  double max_abs = 0.0;
  int knot = -1;
};

struct ValidationReport {
  std::vector<FamilyResidual> equality_families;
  double friction_violation = 0.0;  // max over knots of cone violation
  int friction_knot = -1;
  double bound_violation = 0.0;
  int bound_knot = -1;
  double max_equality = 0.0;
  bool ok(double tol_eq, double tol_ineq) const;
};

struct PlannerOptions {
  double tol_eq = 1e-4;
  double tol_ineq = 1e-6;
  int max_outer = 40;
  int max_inner = 600;
  bool verbose = false;
};

struct ConvergenceReport {
  bool converged = false;
  bool merit_monotone = true;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double max_equality_residual = 0.0;
  double cost = 0.0;
  double solve_seconds = 0.0;
  std::string termination;
  std::vector<double> residual_history;
};

/// Direct transcription of the whole-jump NLP: decision variables
/// {q, v, r, rd, rdd, F_j, h} per knot, centroidal dynamics and full-body
/// kinematic consistency as equality residuals, friction cones and variable
/// boxes handled by projection.
class TranscribedNLP {
 public:
  TranscribedNLP(const KinematicTree& tree, const ContactSchedule& schedule,
                 const JumpTask& task, const CostWeights& weights);

  int num_vars() const { return n_; }
  int num_eq() const { return m_; }
  const ContactSchedule& schedule() const { return schedule_; }
  const JumpTask& task() const { return task_; }
  const KinematicTree& tree() const { return tree_; }

  VecX pack(const DecisionTrajectory& traj) const;
  DecisionTrajectory unpack(const VecX& x) const;

  double cost(const VecX& x, VecX* grad) const;
  /// Constant sparse cost Hessian.
  void cost_hessian(Eigen::SparseMatrix<double>& H) const;
  void residuals(const VecX& x, VecX& c) const;
  void jacobian(const VecX& x, Eigen::SparseMatrix<double>& J) const;
  void project(VecX& x) const;

  std::vector<FamilyResidual> residuals_by_family(const VecX& x) const;
  ValidationReport validate_point(const VecX& x) const;

  // Variable offsets, exposed for tests.
  const VecX& lower_bounds() const { return lb_; }
  const VecX& upper_bounds() const { return ub_; }
  int q_offset(int k) const;
  int v_offset(int k) const;
  int r_offset(int k) const;
  int rd_offset(int k) const;
  int rdd_offset(int k) const;
  int h_offset(int k) const;
  int f_offset(int k, int local_contact) const;

 private:
  void build_layout();
  void build_bounds();

  KinematicTree tree_;
  ContactSchedule schedule_;
  JumpTask task_;
  CostWeights weights_;
  int N_ = 0;
  int n_ = 0;
  int m_ = 0;
  std::vector<int> knot_offset_;
  std::vector<int> nf_;  // active contacts per knot
  VecX lb_, ub_;
  struct FamilyRows {
    std::string name;
    int row = 0;
    int size = 0;
    int knot = -1;
  };
  std::vector<FamilyRows> rows_;
};

TranscribedNLP build_problem(const KinematicTree& tree,
                             const ContactSchedule& schedule,
                             const JumpTask& task, const CostWeights& weights);

/// Kinematically consistent initial guess: COM squat-thrust-ballistic-absorb
/// spline, closed-form leg IK, static force distribution. Throws when the
/// COM spline leaves the leg workspace, naming the violating knot.
DecisionTrajectory seed_guess(const KinematicTree& tree,
                              const ContactSchedule& schedule,
                              const JumpTask& task);

std::pair<DecisionTrajectory, ConvergenceReport> solve(
    const TranscribedNLP& nlp, const DecisionTrajectory& guess,
    const PlannerOptions& options = {});

ValidationReport validate(const DecisionTrajectory& traj,
                          const TranscribedNLP& nlp);

/// Default cost weights, q_nom taken from the seed trajectory.
CostWeights default_weights(const KinematicTree& tree,
                            const DecisionTrajectory& seed);

void save_trajectory(const DecisionTrajectory& traj,
                     const ContactSchedule& schedule,
                     const KinematicTree& tree, const std::string& path);
DecisionTrajectory load_trajectory(const std::string& path,
                                   const KinematicTree& tree);

}  // namespace jumpkit
