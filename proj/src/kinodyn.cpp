#include "jumpkit/kinodyn.hpp"

#include <array>
#include <cstdlib>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "jumpkit/leg_ik.hpp"

namespace jumpkit {

namespace {
constexpr int kPerKnotBase = 17 + 16 + 3 + 3 + 3 + 3;  // q v r rd rdd h
constexpr double kInf = std::numeric_limits<double>::infinity();

Configuration config_at(const KinematicTree& tree, const VecX& x, int off) {
  Configuration q;
  q.base_pos = x.segment<3>(off);
  q.base_quat = Quat(x(off + 3), x(off + 4), x(off + 5), x(off + 6));
  q.joint_pos = x.segment(off + 7, tree.njoints());
  return q;
}

// Maps a 3 x nv velocity-space Jacobian block to raw configuration
// coordinates (3 x nq): identity on base position, quaternion tangent map
// on the 4 quaternion entries, identity on joints.
MatX to_raw_coords(const MatX& Jv, const Quat& quat) {
  const int nj = static_cast<int>(Jv.cols()) - 6;
  MatX out(3, 7 + nj);
  out.leftCols<3>() = Jv.leftCols<3>();
  out.block(0, 3, 3, 4) = Jv.block(0, 3, 3, 3) * quat_tangent_map(quat);
  out.rightCols(nj) = Jv.rightCols(nj);
  return out;
}

}  // namespace

// --- ContactSchedule --------------------------------------------------

int ContactSchedule::total_knots() const {
  int n = 0;
  for (const auto& p : phases) n += p.knots;
  return n;
}

int ContactSchedule::phase_of(int knot) const {
  int acc = 0;
  for (size_t i = 0; i < phases.size(); ++i) {
    acc += phases[i].knots;
    if (knot < acc) return static_cast<int>(i);
  }
  throw std::out_of_range("knot outside schedule");
}

const std::vector<int>& ContactSchedule::contacts_at(int knot) const {
  return phases[phase_of(knot)].contacts;
}

const std::vector<Vec3>& ContactSchedule::contact_positions_at(int knot) const {
  return phases[phase_of(knot)].contact_positions;
}

int ContactSchedule::liftoff_knot() const {
  int acc = 0;
  for (size_t i = 0; i < phases.size(); ++i) {
    if (phases[i].contacts.empty()) return acc - 1;
    acc += phases[i].knots;
  }
  return -1;
}

int ContactSchedule::touchdown_knot() const {
  int acc = 0;
  bool seen_flight = false;
  for (size_t i = 0; i < phases.size(); ++i) {
    if (phases[i].contacts.empty()) {
      seen_flight = true;
    } else if (seen_flight) {
      return acc;
    }
    acc += phases[i].knots;
  }
  return -1;
}

void ContactSchedule::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("schedule dt must be > 0");
  if (phases.empty()) throw std::invalid_argument("schedule has no phases");
  for (const auto& p : phases) {
    if (p.knots < 1) throw std::invalid_argument("phase knot count must be >= 1");
    if (p.contact_positions.size() != p.contacts.size())
      throw std::invalid_argument("contact position count mismatch");
  }
}

void JumpTask::validate() const {
  if (!(h_nom < h_max)) throw std::invalid_argument("h_nom must be < h_max");
  if (planar && twist_yaw)
    throw std::invalid_argument("twist tasks require full 3D mode");
  q_init.validate();
}

// --- TranscribedNLP ----------------------------------------------------

TranscribedNLP::TranscribedNLP(const KinematicTree& tree,
                               const ContactSchedule& schedule,
                               const JumpTask& task, const CostWeights& weights)
    : tree_(tree), schedule_(schedule), task_(task), weights_(weights) {
  tree_.validate();
  schedule_.validate();
  task_.validate();
  N_ = schedule_.total_knots();
  for (const auto& p : schedule_.phases) {
    for (int c : p.contacts)
      if (c < 0 || c >= static_cast<int>(tree_.contact_frames.size()))
        throw std::invalid_argument("schedule refers to unknown contact frame");
  }
  if (weights_.q_diag.size() == 0) weights_.q_diag = VecX::Zero(tree_.nq());
  if (weights_.v_diag.size() == 0) weights_.v_diag = VecX::Zero(tree_.nv());
  if (weights_.q_diag.size() != tree_.nq() || weights_.v_diag.size() != tree_.nv())
    throw std::invalid_argument("cost weight dimension mismatch");
  if (weights_.q_nom.rows() != tree_.nq() || weights_.q_nom.cols() != N_)
    throw std::invalid_argument("q_nom must be nq x N");
  build_layout();
  build_bounds();
}

void TranscribedNLP::build_layout() {
  knot_offset_.resize(N_ + 1);
  nf_.resize(N_);
  int off = 0;
  for (int k = 0; k < N_; ++k) {
    knot_offset_[k] = off;
    nf_[k] = static_cast<int>(schedule_.contacts_at(k).size());
    off += kPerKnotBase + 3 * nf_[k];
  }
  knot_offset_[N_] = off;
  n_ = off;

  const int nj = tree_.njoints();
  int row = 0;
  auto add = [&](const std::string& name, int size, int knot) {
    rows_.push_back({name, row, size, knot});
    row += size;
  };
  for (int k = 0; k < N_; ++k) {
    add("com_fk", 3, k);
    add("momentum_kin", 3, k);
    add("quat_norm", 1, k);
    if (nf_[k] > 0) add("contact_fk", 3 * nf_[k], k);
    add("lin_momentum", 3, k);
    if (k >= 1) {
      add("integrate_q_pos", 3, k);
      add("integrate_q_quat", 3, k);
      add("integrate_q_joint", nj, k);
      add("ang_momentum_rate", 3, k);
      add("integrate_r", 3, k);
      add("integrate_rd", 3, k);
    }
    if (task_.planar) add("mirror", 3, k);
  }
  if (task_.twist_yaw) add("final_twist", 3, N_ - 1);
  m_ = row;
}

int TranscribedNLP::q_offset(int k) const { return knot_offset_[k]; }
int TranscribedNLP::v_offset(int k) const { return knot_offset_[k] + 17; }
int TranscribedNLP::r_offset(int k) const { return knot_offset_[k] + 33; }
int TranscribedNLP::rd_offset(int k) const { return knot_offset_[k] + 36; }
int TranscribedNLP::rdd_offset(int k) const { return knot_offset_[k] + 39; }
int TranscribedNLP::h_offset(int k) const { return knot_offset_[k] + 42; }
int TranscribedNLP::f_offset(int k, int j) const {
  return knot_offset_[k] + kPerKnotBase + 3 * j;
}

void TranscribedNLP::build_bounds() {
  lb_ = VecX::Constant(n_, -kInf);
  ub_ = VecX::Constant(n_, kInf);
  const int nj = tree_.njoints();
  const Vec3 r0 = task_.r_initial;

  auto freeze = [&](int off, const VecX& val) {
    lb_.segment(off, val.size()) = val;
    ub_.segment(off, val.size()) = val;
  };

  for (int k = 0; k < N_; ++k) {
    int q0 = q_offset(k);
    // Base position box.
    for (int a = 0; a < 2; ++a) {
      lb_(q0 + a) = r0(a) - 3.0;
      ub_(q0 + a) = r0(a) + 3.0;
    }
    lb_(q0 + 2) = 0.03;
    ub_(q0 + 2) = 2.0;
    for (int a = 3; a < 7; ++a) {
      lb_(q0 + a) = -1.02;
      ub_(q0 + a) = 1.02;
    }
    for (int j = 0; j < nj; ++j) {
      lb_(q0 + 7 + j) = -task_.joint_limit;
      ub_(q0 + 7 + j) = task_.joint_limit;
    }
    int v0 = v_offset(k);
    for (int a = 0; a < 6; ++a) {
      lb_(v0 + a) = -task_.max_base_vel * (a < 3 ? 1.0 : 3.0);
      ub_(v0 + a) = task_.max_base_vel * (a < 3 ? 1.0 : 3.0);
    }
    for (int j = 0; j < nj; ++j) {
      lb_(v0 + 6 + j) = -task_.max_joint_vel;
      ub_(v0 + 6 + j) = task_.max_joint_vel;
    }
    int rr = r_offset(k);
    for (int a = 0; a < 2; ++a) {
      lb_(rr + a) = r0(a) - 3.0;
      ub_(rr + a) = r0(a) + 3.0;
    }
    bool stance = nf_[k] > 0;
    int ktd = schedule_.touchdown_knot();
    double lz = (ktd >= 0 && k >= ktd) ? task_.landing_z_offset : 0.0;
    if (stance) {
      lb_(rr + 2) = 0.02 + lz;
      ub_(rr + 2) = task_.h_nom + lz;
    } else {
      lb_(rr + 2) = task_.h_nom + std::min(0.0, task_.landing_z_offset);
      ub_(rr + 2) = task_.h_max;
    }
    int rd0 = rd_offset(k);
    double vmax = std::max(10.0, 2.0 * task_.v_liftoff.norm());
    lb_.segment<3>(rd0).setConstant(-vmax);
    ub_.segment<3>(rd0).setConstant(vmax);
    int rdd0 = rdd_offset(k);
    lb_.segment<3>(rdd0).setConstant(-task_.max_com_accel);
    ub_.segment<3>(rdd0).setConstant(task_.max_com_accel);
    int h0 = h_offset(k);
    lb_.segment<3>(h0).setConstant(-task_.max_ang_momentum);
    ub_.segment<3>(h0).setConstant(task_.max_ang_momentum);
  }

  // Initial knot: stand still at the given configuration.
  freeze(q_offset(0), task_.q_init.ToVector());
  freeze(v_offset(0), VecX::Zero(tree_.nv()));
  freeze(r_offset(0), task_.r_initial);
  freeze(rd_offset(0), Vec3::Zero());
  freeze(h_offset(0), Vec3::Zero());

  // Liftoff velocity boundary.
  int klo = schedule_.liftoff_knot();
  if (klo >= 0) freeze(rd_offset(klo), task_.v_liftoff);
  if (klo >= 0 && task_.liftoff_pitch_momentum)
    freeze(h_offset(klo) + 1, VecX::Constant(1, *task_.liftoff_pitch_momentum));

  // Final knot: COM at the target, at rest.
  freeze(r_offset(N_ - 1), task_.r_final);
  freeze(rd_offset(N_ - 1), Vec3::Zero());
  freeze(v_offset(N_ - 1), VecX::Zero(tree_.nv()));

  if (task_.planar) {
    // Sagittal-plane restriction: base y / roll / yaw, lateral COM motion,
    // out-of-plane momentum and hip yaw/roll joints are all pinned.
    VecX zero1 = VecX::Zero(1);
    for (int k = 0; k < N_; ++k) {
      int q0 = q_offset(k);
      freeze(q0 + 1, VecX::Constant(1, task_.q_init.base_pos.y()));
      freeze(q0 + 4, zero1);  // quat x
      freeze(q0 + 6, zero1);  // quat z
      int v0 = v_offset(k);
      freeze(v0 + 1, zero1);  // base lateral velocity
      freeze(v0 + 3, zero1);  // roll rate
      freeze(v0 + 5, zero1);  // yaw rate
      for (int side = 0; side < 2; ++side) {
        freeze(q0 + 7 + 5 * side + 0, zero1);  // hip yaw
        freeze(q0 + 7 + 5 * side + 1, zero1);  // hip roll
        freeze(v0 + 6 + 5 * side + 0, zero1);
        freeze(v0 + 6 + 5 * side + 1, zero1);
      }
      freeze(r_offset(k) + 1, VecX::Constant(1, r0.y()));
      freeze(rd_offset(k) + 1, zero1);
      freeze(rdd_offset(k) + 1, zero1);
      freeze(h_offset(k) + 0, zero1);
      freeze(h_offset(k) + 2, zero1);
      for (int j = 0; j < nf_[k]; ++j) freeze(f_offset(k, j) + 1, zero1);
    }
  }
}

VecX TranscribedNLP::pack(const DecisionTrajectory& traj) const {
  if (traj.knots() != N_) throw std::invalid_argument("trajectory knot count mismatch");
  VecX x = VecX::Zero(n_);
  for (int k = 0; k < N_; ++k) {
    x.segment(q_offset(k), 17) = traj.q[k].ToVector();
    x.segment(v_offset(k), 16) = traj.v[k];
    x.segment<3>(r_offset(k)) = traj.r[k];
    x.segment<3>(rd_offset(k)) = traj.rd[k];
    x.segment<3>(rdd_offset(k)) = traj.rdd[k];
    x.segment<3>(h_offset(k)) = traj.h[k];
    if (static_cast<int>(traj.forces[k].size()) != nf_[k])
      throw std::invalid_argument("force count mismatch at knot " + std::to_string(k));
    for (int j = 0; j < nf_[k]; ++j)
      x.segment<3>(f_offset(k, j)) = traj.forces[k][j];
  }
  return x;
}

DecisionTrajectory TranscribedNLP::unpack(const VecX& x) const {
  DecisionTrajectory t;
  t.dt = schedule_.dt;
  t.q.resize(N_);
  t.v.resize(N_);
  t.r.resize(N_);
  t.rd.resize(N_);
  t.rdd.resize(N_);
  t.h.resize(N_);
  t.forces.resize(N_);
  for (int k = 0; k < N_; ++k) {
    t.q[k] = config_at(tree_, x, q_offset(k));
    t.q[k].base_quat.normalize();
    t.v[k] = x.segment(v_offset(k), 16);
    t.r[k] = x.segment<3>(r_offset(k));
    t.rd[k] = x.segment<3>(rd_offset(k));
    t.rdd[k] = x.segment<3>(rdd_offset(k));
    t.h[k] = x.segment<3>(h_offset(k));
    t.forces[k].resize(nf_[k]);
    for (int j = 0; j < nf_[k]; ++j) t.forces[k][j] = x.segment<3>(f_offset(k, j));
  }
  return t;
}

double TranscribedNLP::cost(const VecX& x, VecX* grad) const {
  const double dt = schedule_.dt;
  double total = 0.0;
  if (grad) grad->setZero(n_);
  for (int k = 0; k < N_; ++k) {
    VecX dq = x.segment(q_offset(k), 17) - weights_.q_nom.col(k);
    VecX vk = x.segment(v_offset(k), 16);
    Vec3 rdd = x.segment<3>(rdd_offset(k));
    Vec3 hdot = Vec3::Zero();
    if (k >= 1)
      hdot = (x.segment<3>(h_offset(k)) - x.segment<3>(h_offset(k - 1))) / dt;
    total += dt * dq.cwiseProduct(weights_.q_diag).dot(dq);
    total += dt * vk.cwiseProduct(weights_.v_diag).dot(vk);
    total += dt * rdd.squaredNorm();
    total += dt * hdot.cwiseProduct(weights_.h_dot_diag).dot(hdot);
    for (int j = 0; j < nf_[k]; ++j)
      total += dt * weights_.force_weight * x.segment<3>(f_offset(k, j)).squaredNorm();
    if (grad) {
      grad->segment(q_offset(k), 17) += 2.0 * dt * weights_.q_diag.cwiseProduct(dq);
      grad->segment(v_offset(k), 16) += 2.0 * dt * weights_.v_diag.cwiseProduct(vk);
      grad->segment<3>(rdd_offset(k)) += 2.0 * dt * rdd;
      for (int j = 0; j < nf_[k]; ++j)
        grad->segment<3>(f_offset(k, j)) +=
            2.0 * dt * weights_.force_weight * x.segment<3>(f_offset(k, j));
    }
  }
  if (grad) {
    for (int k = 1; k < N_; ++k) {
      Vec3 hdot =
          (x.segment<3>(h_offset(k)) - x.segment<3>(h_offset(k - 1))) / dt;
      Vec3 g = 2.0 * dt * weights_.h_dot_diag.cwiseProduct(hdot) / dt;
      grad->segment<3>(h_offset(k)) += g;
      grad->segment<3>(h_offset(k - 1)) -= g;
    }
  }
  return total;
}

void TranscribedNLP::cost_hessian(Eigen::SparseMatrix<double>& H) const {
  const double dt = schedule_.dt;
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < N_; ++k) {
    for (int i = 0; i < 17; ++i)
      trip.emplace_back(q_offset(k) + i, q_offset(k) + i,
                        2.0 * dt * weights_.q_diag(i));
    for (int i = 0; i < 16; ++i)
      trip.emplace_back(v_offset(k) + i, v_offset(k) + i,
                        2.0 * dt * weights_.v_diag(i));
    for (int i = 0; i < 3; ++i)
      trip.emplace_back(rdd_offset(k) + i, rdd_offset(k) + i, 2.0 * dt);
    for (int j = 0; j < nf_[k]; ++j)
      for (int i = 0; i < 3; ++i)
        trip.emplace_back(f_offset(k, j) + i, f_offset(k, j) + i,
                          2.0 * dt * weights_.force_weight);
    if (k >= 1) {
      for (int i = 0; i < 3; ++i) {
        double w = 2.0 * weights_.h_dot_diag(i) / dt;
        trip.emplace_back(h_offset(k) + i, h_offset(k) + i, w);
        trip.emplace_back(h_offset(k - 1) + i, h_offset(k - 1) + i, w);
        trip.emplace_back(h_offset(k) + i, h_offset(k - 1) + i, -w);
        trip.emplace_back(h_offset(k - 1) + i, h_offset(k) + i, -w);
      }
    }
  }
  H.resize(n_, n_);
  H.setFromTriplets(trip.begin(), trip.end());
}

void TranscribedNLP::residuals(const VecX& x, VecX& c) const {
  c.setZero(m_);
  const double dt = schedule_.dt;
  const double mass = tree_.total_mass();
  const Vec3 grav(0, 0, -kGravity);
  const int nj = tree_.njoints();

  size_t fam = 0;
  auto block = [&](const std::string& name, int knot) -> Eigen::Ref<VecX> {
    const FamilyRows& fr = rows_[fam];
    if (fr.name != name || fr.knot != knot)
      throw std::logic_error("family order mismatch: " + name);
    ++fam;
    return c.segment(fr.row, fr.size);
  };

  for (int k = 0; k < N_; ++k) {
    Configuration qk = config_at(tree_, x, q_offset(k));
    FKResult fk = forward_kinematics(tree_, qk, /*validate=*/false);
    Vec3 com = com_position(tree_, fk);
    VecX vk = x.segment(v_offset(k), 16);
    Eigen::Matrix<double, 6, 1> mom = centroidal_momentum(tree_, fk, vk);

    block("com_fk", k) = x.segment<3>(r_offset(k)) - com;
    block("momentum_kin", k) = x.segment<3>(h_offset(k)) - mom.tail<3>();
    double nq2 = x.segment<4>(q_offset(k) + 3).squaredNorm();
    block("quat_norm", k)(0) = nq2 - 1.0;

    const auto& contacts = schedule_.contacts_at(k);
    const auto& cpos = schedule_.contact_positions_at(k);
    if (!contacts.empty()) {
      auto blk = block("contact_fk", k);
      for (size_t j = 0; j < contacts.size(); ++j)
        blk.segment<3>(3 * j) = fk.contact_pose[contacts[j]].pos - cpos[j];
    }

    Vec3 fsum = Vec3::Zero();
    for (int j = 0; j < nf_[k]; ++j) fsum += x.segment<3>(f_offset(k, j));
    // acceleration form keeps this family on the same scale as the others
    block("lin_momentum", k) =
        x.segment<3>(rdd_offset(k)) - fsum / mass - grav;

    if (k >= 1) {
      block("integrate_q_pos", k) = x.segment<3>(q_offset(k)) -
                                    x.segment<3>(q_offset(k - 1)) -
                                    dt * x.segment<3>(v_offset(k));
      Quat qa(x(q_offset(k - 1) + 3), x(q_offset(k - 1) + 4),
              x(q_offset(k - 1) + 5), x(q_offset(k - 1) + 6));
      Quat qb(x(q_offset(k) + 3), x(q_offset(k) + 4), x(q_offset(k) + 5),
              x(q_offset(k) + 6));
      qa.normalize();
      qb.normalize();
      block("integrate_q_quat", k) =
          quat_log(qa.conjugate() * qb) - dt * x.segment<3>(v_offset(k) + 3);
      block("integrate_q_joint", k) = x.segment(q_offset(k) + 7, nj) -
                                      x.segment(q_offset(k - 1) + 7, nj) -
                                      dt * x.segment(v_offset(k) + 6, nj);
      Vec3 torque = Vec3::Zero();
      Vec3 rk = x.segment<3>(r_offset(k));
      for (int j = 0; j < nf_[k]; ++j)
        torque += (cpos[j] - rk).cross(Vec3(x.segment<3>(f_offset(k, j))));
      block("ang_momentum_rate", k) = x.segment<3>(h_offset(k)) -
                                      x.segment<3>(h_offset(k - 1)) -
                                      dt * torque;
      block("integrate_r", k) = x.segment<3>(r_offset(k)) -
                                x.segment<3>(r_offset(k - 1)) -
                                dt * x.segment<3>(rd_offset(k));
      block("integrate_rd", k) = x.segment<3>(rd_offset(k)) -
                                 x.segment<3>(rd_offset(k - 1)) -
                                 dt * x.segment<3>(rdd_offset(k));
    }
    if (task_.planar) {
      auto blk = block("mirror", k);
      for (int j = 0; j < 3; ++j)
        blk(j) = x(q_offset(k) + 7 + 2 + j) - x(q_offset(k) + 7 + 5 + 2 + j);
    }
  }
  if (task_.twist_yaw) {
    Quat target(Eigen::AngleAxisd(*task_.twist_yaw, Vec3::UnitZ()));
    Quat qn(x(q_offset(N_ - 1) + 3), x(q_offset(N_ - 1) + 4),
            x(q_offset(N_ - 1) + 5), x(q_offset(N_ - 1) + 6));
    qn.normalize();
    size_t idx = rows_.size() - 1;
    c.segment(rows_[idx].row, 3) = quat_log(target.conjugate() * qn);
  }

  if (!c.allFinite()) {
    for (const auto& fr : rows_) {
      if (!c.segment(fr.row, fr.size).allFinite())
        throw std::runtime_error("NaN in constraint family " + fr.name +
                                 " at knot " + std::to_string(fr.knot));
    }
  }
}

void TranscribedNLP::jacobian(const VecX& x,
                              Eigen::SparseMatrix<double>& J) const {
  const double dt = schedule_.dt;
  const double mass = tree_.total_mass();
  const int nj = tree_.njoints();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(m_) * 12);

  auto add_block = [&](int row, int col, const MatX& B) {
    for (int i = 0; i < B.rows(); ++i)
      for (int j = 0; j < B.cols(); ++j)
        if (B(i, j) != 0.0) trip.emplace_back(row + i, col + j, B(i, j));
  };
  auto add_ident = [&](int row, int col, int nn, double s) {
    for (int i = 0; i < nn; ++i) trip.emplace_back(row + i, col + i, s);
  };

  size_t fam = 0;
  auto next_row = [&](const std::string& name, int knot) -> int {
    const FamilyRows& fr = rows_[fam];
    if (fr.name != name || fr.knot != knot)
      throw std::logic_error("family order mismatch in jacobian: " + name);
    ++fam;
    return fr.row;
  };

  const double eps = 1e-6;
  for (int k = 0; k < N_; ++k) {
    Configuration qk = config_at(tree_, x, q_offset(k));
    VecX vk = x.segment(v_offset(k), 16);
    FKResult fk = forward_kinematics(tree_, qk, false);
    MatX A = centroidal_momentum_matrix(tree_, qk);
    Quat quat = qk.base_quat;

    // com_fk: r - f_com(q)
    int row = next_row("com_fk", k);
    add_ident(row, r_offset(k), 3, 1.0);
    add_block(row, q_offset(k), -to_raw_coords(A.topRows<3>() / mass, quat));

    // momentum_kin: h - k_ang(q, v). v-columns are the angular CMM rows;
    // q-columns by central differences.
    row = next_row("momentum_kin", k);
    add_ident(row, h_offset(k), 3, 1.0);
    add_block(row, v_offset(k), -MatX(A.bottomRows<3>()));
    {
      MatX dKdq(3, 17);
      VecX xq = x.segment(q_offset(k), 17);
      for (int cidx = 0; cidx < 17; ++cidx) {
        VecX qp = xq, qm = xq;
        qp(cidx) += eps;
        qm(cidx) -= eps;
        Configuration cp, cm;
        cp.base_pos = qp.head<3>();
        cp.base_quat = Quat(qp(3), qp(4), qp(5), qp(6));
        cp.joint_pos = qp.tail(nj);
        cm.base_pos = qm.head<3>();
        cm.base_quat = Quat(qm(3), qm(4), qm(5), qm(6));
        cm.joint_pos = qm.tail(nj);
        Vec3 kp = centroidal_momentum(tree_, cp, vk).tail<3>();
        Vec3 km = centroidal_momentum(tree_, cm, vk).tail<3>();
        dKdq.col(cidx) = (kp - km) / (2 * eps);
      }
      add_block(row, q_offset(k), -dKdq);
    }

    row = next_row("quat_norm", k);
    for (int a = 0; a < 4; ++a)
      trip.emplace_back(row, q_offset(k) + 3 + a, 2.0 * x(q_offset(k) + 3 + a));

    const auto& contacts = schedule_.contacts_at(k);
    if (!contacts.empty()) {
      row = next_row("contact_fk", k);
      for (size_t j = 0; j < contacts.size(); ++j) {
        const auto& cf = tree_.contact_frames[contacts[j]];
        MatX Jc = frame_jacobian(tree_, qk, FrameId{cf.link, cf.offset});
        add_block(row + 3 * static_cast<int>(j), q_offset(k),
                  to_raw_coords(Jc.topRows<3>(), quat));
      }
    }

    row = next_row("lin_momentum", k);
    add_ident(row, rdd_offset(k), 3, 1.0);
    for (int j = 0; j < nf_[k]; ++j) add_ident(row, f_offset(k, j), 3, -1.0 / mass);

    if (k >= 1) {
      row = next_row("integrate_q_pos", k);
      add_ident(row, q_offset(k), 3, 1.0);
      add_ident(row, q_offset(k - 1), 3, -1.0);
      add_ident(row, v_offset(k), 3, -dt);

      row = next_row("integrate_q_quat", k);
      // FD over the eight quaternion entries of both knots.
      add_ident(row, v_offset(k) + 3, 3, -dt);
      auto quat_res = [&](const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
        Quat qa(a(0), a(1), a(2), a(3)), qb(b(0), b(1), b(2), b(3));
        qa.normalize();
        qb.normalize();
        return quat_log(qa.conjugate() * qb);
      };
      Eigen::Vector4d qa = x.segment<4>(q_offset(k - 1) + 3);
      Eigen::Vector4d qb = x.segment<4>(q_offset(k) + 3);
      MatX dA(3, 4), dB(3, 4);
      for (int cidx = 0; cidx < 4; ++cidx) {
        Eigen::Vector4d ap = qa, am = qa;
        ap(cidx) += eps;
        am(cidx) -= eps;
        dA.col(cidx) = (quat_res(ap, qb) - quat_res(am, qb)) / (2 * eps);
        Eigen::Vector4d bp = qb, bm = qb;
        bp(cidx) += eps;
        bm(cidx) -= eps;
        dB.col(cidx) = (quat_res(qa, bp) - quat_res(qa, bm)) / (2 * eps);
      }
      add_block(row, q_offset(k - 1) + 3, dA);
      add_block(row, q_offset(k) + 3, dB);

      row = next_row("integrate_q_joint", k);
      add_ident(row, q_offset(k) + 7, nj, 1.0);
      add_ident(row, q_offset(k - 1) + 7, nj, -1.0);
      add_ident(row, v_offset(k) + 6, nj, -dt);

      row = next_row("ang_momentum_rate", k);
      add_ident(row, h_offset(k), 3, 1.0);
      add_ident(row, h_offset(k - 1), 3, -1.0);
      const auto& cpos = schedule_.contact_positions_at(k);
      Vec3 rk = x.segment<3>(r_offset(k));
      Mat3 dr = Mat3::Zero();
      for (int j = 0; j < nf_[k]; ++j) {
        Vec3 fj = x.segment<3>(f_offset(k, j));
        add_block(row, f_offset(k, j), MatX(-dt * skew(cpos[j] - rk)));
        dr += skew(fj);
      }
      add_block(row, r_offset(k), MatX(-dt * dr));

      row = next_row("integrate_r", k);
      add_ident(row, r_offset(k), 3, 1.0);
      add_ident(row, r_offset(k - 1), 3, -1.0);
      add_ident(row, rd_offset(k), 3, -dt);

      row = next_row("integrate_rd", k);
      add_ident(row, rd_offset(k), 3, 1.0);
      add_ident(row, rd_offset(k - 1), 3, -1.0);
      add_ident(row, rdd_offset(k), 3, -dt);
    }
    if (task_.planar) {
      row = next_row("mirror", k);
      for (int j = 0; j < 3; ++j) {
        trip.emplace_back(row + j, q_offset(k) + 7 + 2 + j, 1.0);
        trip.emplace_back(row + j, q_offset(k) + 7 + 5 + 2 + j, -1.0);
      }
    }
  }
  if (task_.twist_yaw) {
    int row = rows_.back().row;
    Quat target(Eigen::AngleAxisd(*task_.twist_yaw, Vec3::UnitZ()));
    Eigen::Vector4d qn = x.segment<4>(q_offset(N_ - 1) + 3);
    MatX D(3, 4);
    for (int cidx = 0; cidx < 4; ++cidx) {
      Eigen::Vector4d qp = qn, qm = qn;
      qp(cidx) += eps;
      qm(cidx) -= eps;
      Quat a(qp(0), qp(1), qp(2), qp(3)), b(qm(0), qm(1), qm(2), qm(3));
      a.normalize();
      b.normalize();
      D.col(cidx) = (quat_log(target.conjugate() * a) -
                     quat_log(target.conjugate() * b)) /
                    (2 * eps);
    }
    add_block(row, q_offset(N_ - 1) + 3, D);
  }

  J.resize(m_, n_);
  J.setFromTriplets(trip.begin(), trip.end());
}

void TranscribedNLP::project(VecX& x) const {
  x = x.cwiseMax(lb_).cwiseMin(ub_);
  // Second-order friction cone projection per force block.
  const double mu = task_.friction;
  for (int k = 0; k < N_; ++k) {
    for (int j = 0; j < nf_[k]; ++j) {
      auto F = x.segment<3>(f_offset(k, j));
      double t = std::hypot(F(0), F(1));
      if (t <= mu * F(2)) continue;
      if (mu * t <= -F(2)) {
        F.setZero();
        continue;
      }
      double zn = (mu * t + F(2)) / (mu * mu + 1.0);
      double scale = (t > 1e-16) ? mu * zn / t : 0.0;
      F(0) *= scale;
      F(1) *= scale;
      F(2) = zn;
    }
  }
}

std::vector<FamilyResidual> TranscribedNLP::residuals_by_family(
    const VecX& x) const {
  VecX c(m_);
  residuals(x, c);
  std::map<std::string, FamilyResidual> agg;
  for (const auto& fr : rows_) {
    double v = c.segment(fr.row, fr.size).lpNorm<Eigen::Infinity>();
    auto& slot = agg[fr.name];
    slot.family = fr.name;
    if (v >= slot.max_abs) {
      slot.max_abs = v;
      slot.knot = fr.knot;
    }
  }
  std::vector<FamilyResidual> out;
  for (auto& [_, v] : agg) out.push_back(v);
  return out;
}

ValidationReport TranscribedNLP::validate_point(const VecX& x) const {
  ValidationReport rep;
  rep.equality_families = residuals_by_family(x);
  for (const auto& f : rep.equality_families)
    rep.max_equality = std::max(rep.max_equality, f.max_abs);
  const double mu = task_.friction;
  for (int k = 0; k < N_; ++k) {
    for (int j = 0; j < nf_[k]; ++j) {
      Vec3 F = x.segment<3>(f_offset(k, j));
      double viol = std::max(std::hypot(F(0), F(1)) - mu * F(2), -F(2));
      if (viol > rep.friction_violation) {
        rep.friction_violation = std::max(0.0, viol);
        rep.friction_knot = k;
      }
    }
    // Box-bound violation at this knot.
    int lo = knot_offset_[k], hi = knot_offset_[k + 1];
    for (int i = lo; i < hi; ++i) {
      double v = std::max(lb_(i) - x(i), x(i) - ub_(i));
      if (v > rep.bound_violation) {
        rep.bound_violation = v;
        rep.bound_knot = k;
      }
    }
  }
  rep.bound_violation = std::max(0.0, rep.bound_violation);
  return rep;
}

bool ValidationReport::ok(double tol_eq, double tol_ineq) const {
  return max_equality <= tol_eq && friction_violation <= tol_ineq &&
         bound_violation <= tol_ineq;
}

TranscribedNLP build_problem(const KinematicTree& tree,
                             const ContactSchedule& schedule,
                             const JumpTask& task, const CostWeights& weights) {
  return TranscribedNLP(tree, schedule, task, weights);
}

// --- seed ---------------------------------------------------------------

namespace {

// 0 for the left leg (+y hip), 1 for the right.
int side_of_link(const KinematicTree& tree, int link) {
  int i = link;
  while (tree.links[i].parent > 0) i = tree.links[i].parent;
  return tree.links[i].placement_pos.y() > 0 ? 0 : 1;
}

// Mean world position of the scheduled contact points of each foot.
std::array<Vec3, 2> sole_targets_from_phase(const KinematicTree& tree,
                                            const ContactPhase& phase) {
  std::array<Vec3, 2> sum = {Vec3::Zero(), Vec3::Zero()};
  std::array<int, 2> cnt = {0, 0};
  for (size_t j = 0; j < phase.contacts.size(); ++j) {
    int side = side_of_link(tree, tree.contact_frames[phase.contacts[j]].link);
    sum[side] += phase.contact_positions[j];
    cnt[side]++;
  }
  std::array<Vec3, 2> out;
  for (int s = 0; s < 2; ++s) out[s] = cnt[s] > 0 ? Vec3(sum[s] / cnt[s]) : Vec3::Zero();
  return out;
}

}  // namespace

DecisionTrajectory seed_guess(const KinematicTree& tree,
                              const ContactSchedule& schedule,
                              const JumpTask& task) {
  schedule.validate();
  task.validate();
  const int N = schedule.total_knots();
  const double dt = schedule.dt;
  const int nj = tree.njoints();
  const int klo = schedule.liftoff_knot();
  const int ktd = schedule.touchdown_knot();
  const Vec3 r0 = task.r_initial;

  DecisionTrajectory t;
  t.dt = dt;
  t.q.resize(N);
  t.v.resize(N);
  t.r.resize(N);
  t.rd.resize(N);
  t.rdd.resize(N);
  t.h.resize(N);
  t.forces.resize(N);

  // COM spline: squat-thrust during stance, ballistic flight, cubic absorb.
  std::vector<Vec3> com(N);
  std::vector<double> yaw(N, 0.0);
  std::vector<double> pitch(N, 0.0);
  Vec3 com_td = Vec3::Zero(), vel_td = Vec3::Zero();
  for (int k = 0; k < N; ++k) {
    if (klo < 0 || k <= klo) {
      if (klo < 0) {
        com[k] = r0;
        continue;
      }
      double T1 = (klo + 1) * dt;
      double Tsq = 0.55 * T1;
      double Tth = T1 - Tsq;
      double tt = (k + 1) * dt;
      double z_sq = r0.z() - task.squat_depth;
      // thrust ends just under the stance height cap, staying safely
      // inside the leg workspace
      double reach = tree.thigh_length + tree.calf_length;
      double z_reach = r0.z() + tree.foot_height + 0.975 * reach -
                       task.q_init.base_pos.z();
      double z_lo = std::min(task.h_nom - 0.004, z_reach);
      double p, v;
      Vec3 c = r0;
      if (tt <= Tsq) {
        cubic_hermite(r0.z(), 0, z_sq, 0, Tsq, tt, p, v);
        c.z() = p;
      } else {
        cubic_hermite(z_sq, 0, z_lo, task.v_liftoff.z(), Tth, tt - Tsq, p, v);
        c.z() = p;
        for (int a = 0; a < 2; ++a) {
          double pa, va;
          cubic_hermite(r0(a), 0, r0(a) + 0.5 * task.v_liftoff(a) * Tth,
                        task.v_liftoff(a), Tth, tt - Tsq, pa, va);
          c(a) = pa;
        }
      }
      com[k] = c;
    } else if (ktd < 0 || k < ktd) {
      double tau = (k - klo) * dt;
      Vec3 c = com[klo] + task.v_liftoff * tau;
      c.z() -= 0.5 * kGravity * tau * tau;
      com[k] = c;
      double T2 = (ktd - klo) * dt;
      double s = std::clamp(tau / T2, 0.0, 1.0);
      if (task.twist_yaw) yaw[k] = *task.twist_yaw * (3 * s * s - 2 * s * s * s);
      if (task.liftoff_pitch_momentum)
        pitch[k] = (*task.liftoff_pitch_momentum < 0 ? -1.0 : 1.0) * 2.0 * M_PI * s;
    } else {
      if (k == ktd) {
        double tau = (ktd - klo) * dt;
        com_td = com[klo] + task.v_liftoff * tau;
        com_td.z() -= 0.5 * kGravity * tau * tau;
        vel_td = task.v_liftoff;
        vel_td.z() -= kGravity * tau;
      }
      double T3 = (N - ktd) * dt;
      double tau = (k - ktd + 1) * dt;
      Vec3 c;
      for (int a = 0; a < 3; ++a) {
        double p, v;
        cubic_hermite(com_td(a), vel_td(a), task.r_final(a), 0, T3, tau, p, v);
        c(a) = p;
      }
      com[k] = c;
      if (task.twist_yaw) yaw[k] = *task.twist_yaw;
      if (task.liftoff_pitch_momentum)
        pitch[k] = (*task.liftoff_pitch_momentum < 0 ? -1.0 : 1.0) * 2.0 * M_PI;
    }
  }

  // Foot sole targets in the base frame per knot.
  const Vec3 off0 = r0 - task.q_init.base_pos;
  std::array<Vec3, 2> sole_lo_base{}, sole_td_base{};
  if (klo >= 0) {
    auto stance_phase = schedule.phases[schedule.phase_of(klo)];
    Mat3 Rlo = Eigen::AngleAxisd(yaw[klo], Vec3::UnitZ()).toRotationMatrix();
    Vec3 bp_lo = com[klo] - Rlo * off0;
    auto soles = sole_targets_from_phase(tree, stance_phase);
    for (int s = 0; s < 2; ++s) sole_lo_base[s] = Rlo.transpose() * (soles[s] - bp_lo);
    if (ktd >= 0) {
      auto land_phase = schedule.phases[schedule.phase_of(ktd)];
      Mat3 Rtd = Eigen::AngleAxisd(yaw[ktd], Vec3::UnitZ()).toRotationMatrix();
      Vec3 bp_td = com[ktd] - Rtd * off0;
      auto soles_td = sole_targets_from_phase(tree, land_phase);
      for (int s = 0; s < 2; ++s)
        sole_td_base[s] = Rtd.transpose() * (soles_td[s] - bp_td);
    }
  }

  const double mass = tree.total_mass();
  for (int k = 0; k < N; ++k) {
    Mat3 Ry = (Eigen::AngleAxisd(yaw[k], Vec3::UnitZ()) *
               Eigen::AngleAxisd(pitch[k], Vec3::UnitY()))
                  .toRotationMatrix();
    Configuration q;
    q.base_quat = Quat(Ry);
    q.base_pos = com[k] - Ry * off0;
    q.joint_pos = VecX::Zero(nj);

    const auto& contacts = schedule.contacts_at(k);
    bool tucked = task.liftoff_pitch_momentum && contacts.empty();

    // Place the base so the resulting COM matches the spline; stance feet
    // stay pinned in the world, so a few corrections are needed.
    for (int refine = 0; refine < 6; ++refine) {
      std::array<Vec3, 2> sole_base{};
      if (!contacts.empty()) {
        auto soles =
            sole_targets_from_phase(tree, schedule.phases[schedule.phase_of(k)]);
        for (int s = 0; s < 2; ++s)
          sole_base[s] = Ry.transpose() * (soles[s] - q.base_pos);
      } else {
        double T2 = (ktd - klo) * dt;
        double s01 = std::clamp((k - klo) * dt / T2, 0.0, 1.0);
        for (int s = 0; s < 2; ++s) {
          sole_base[s] = (1 - s01) * sole_lo_base[s] + s01 * sole_td_base[s];
          sole_base[s].z() += task.swing_retract * std::sin(M_PI * s01);
        }
      }
      bool clamped = false;
      if (tucked) {
        for (int s = 0; s < 2; ++s) {
          Eigen::Matrix<double, 5, 1> tuck;
          tuck << 0, 0, -0.9, 1.8, -0.9;
          q.joint_pos.segment<5>(5 * s) = tuck;
        }
      } else {
        for (int s = 0; s < 2; ++s) {
          LegIKResult ik = leg_ik(tree, s, sole_base[s]);
          clamped = clamped || ik.clamped;
          q.joint_pos.segment<5>(5 * s) = ik.angles;
        }
      }
      Vec3 err = com[k] - com_position(tree, q, false);
      if (err.norm() < 1e-10 || refine == 5) {
        if (clamped) {
          if (getenv("JK_SEED_DEBUG"))
            fprintf(stderr,
                    "seed knot %d: com target (%.4f %.4f %.4f) base (%.4f %.4f %.4f) "
                    "sole_L (%.4f %.4f %.4f) |d|=%.4f reach=%.4f\n",
                    k, com[k].x(), com[k].y(), com[k].z(), q.base_pos.x(),
                    q.base_pos.y(), q.base_pos.z(), sole_base[0].x(),
                    sole_base[0].y(), sole_base[0].z(),
                    (sole_base[0] - Vec3(0, tree.pelvis_length / 2, 0)).norm(),
                    tree.thigh_length + tree.calf_length);
          throw std::runtime_error(
              "infeasible seed: foot target outside leg workspace at knot " +
              std::to_string(k));
        }
        break;
      }
      q.base_pos += err;
    }
    t.q[k] = q;
  }

  for (int k = 0; k < N; ++k) {
    VecX v = VecX::Zero(tree.nv());
    if (k >= 1) {
      v.head<3>() = (t.q[k].base_pos - t.q[k - 1].base_pos) / dt;
      v.segment<3>(3) =
          quat_log(t.q[k - 1].base_quat.conjugate() * t.q[k].base_quat) / dt;
      v.tail(nj) = (t.q[k].joint_pos - t.q[k - 1].joint_pos) / dt;
    }
    t.v[k] = v;
    t.r[k] = com_position(tree, t.q[k]);
    t.h[k] = centroidal_momentum(tree, t.q[k], v).tail<3>();
  }
  for (int k = 0; k < N; ++k) {
    t.rd[k] = (k >= 1) ? Vec3(((t.r[k] - t.r[k - 1]) / dt)) : Vec3::Zero();
  }
  for (int k = 0; k < N; ++k) {
    t.rdd[k] = (k >= 1) ? Vec3(((t.rd[k] - t.rd[k - 1]) / dt)) : Vec3::Zero();
    const auto& contacts = schedule.contacts_at(k);
    t.forces[k].resize(contacts.size());
    if (!contacts.empty()) {
      double C = static_cast<double>(contacts.size());
      Vec3 F = mass * (t.rdd[k] + Vec3(0, 0, kGravity)) / C;
      F.z() = std::max(F.z(), 0.0);
      for (auto& f : t.forces[k]) f = F;
    }
  }
  return t;
}

// --- solve / validate ----------------------------------------------------

std::pair<DecisionTrajectory, ConvergenceReport> solve(
    const TranscribedNLP& nlp, const DecisionTrajectory& guess,
    const PlannerOptions& options) {
  NLPProblem prob;
  prob.num_vars = nlp.num_vars();
  prob.num_constraints = nlp.num_eq();
  prob.objective = [&nlp](const VecX& x, VecX* g) { return nlp.cost(x, g); };
  prob.objective_hessian = [&nlp](const VecX&, Eigen::SparseMatrix<double>& H) {
    nlp.cost_hessian(H);
  };
  prob.constraints = [&nlp](const VecX& x, VecX& c) { nlp.residuals(x, c); };
  prob.jacobian = [&nlp](const VecX& x, Eigen::SparseMatrix<double>& J) {
    nlp.jacobian(x, J);
  };
  prob.project = [&nlp](VecX& x) { nlp.project(x); };
  prob.lower_bounds = nlp.lower_bounds();
  prob.upper_bounds = nlp.upper_bounds();
  for (int k = 0; k < nlp.schedule().total_knots(); ++k)
    for (size_t j = 0; j < nlp.schedule().contacts_at(k).size(); ++j)
      prob.cones.push_back(
          {nlp.f_offset(k, static_cast<int>(j)), nlp.task().friction});

  VecX x = nlp.pack(guess);
  NLPOptions no;
  no.tol_constraint = options.tol_eq;
  no.max_outer = options.max_outer;
  no.max_inner = options.max_inner;
  no.verbose = options.verbose;

  auto t0 = std::chrono::steady_clock::now();
  NLPReport nrep = solve_aug_lagrangian(prob, x, no);
  auto t1 = std::chrono::steady_clock::now();

  ConvergenceReport rep;
  rep.converged = nrep.converged;
  rep.merit_monotone = nrep.merit_monotone;
  rep.outer_iterations = nrep.outer_iterations;
  rep.inner_iterations = nrep.inner_iterations;
  rep.max_equality_residual = nrep.constraint_norm;
  rep.cost = nrep.objective;
  rep.termination = nrep.termination;
  rep.residual_history = nrep.residual_history;
  rep.solve_seconds = std::chrono::duration<double>(t1 - t0).count();
  return {nlp.unpack(x), rep};
}

ValidationReport validate(const DecisionTrajectory& traj,
                          const TranscribedNLP& nlp) {
  return nlp.validate_point(nlp.pack(traj));
}

CostWeights default_weights(const KinematicTree& tree,
                            const DecisionTrajectory& seed) {
  CostWeights w;
  w.q_diag = VecX::Zero(tree.nq());
  w.q_diag.tail(tree.njoints()).setConstant(0.5);
  w.v_diag = VecX::Constant(tree.nv(), 0.01);
  w.h_dot_diag = Vec3::Constant(1e-2);
  w.force_weight = 1e-3;
  w.q_nom.resize(tree.nq(), seed.knots());
  for (int k = 0; k < seed.knots(); ++k) w.q_nom.col(k) = seed.q[k].ToVector();
  return w;
}

// --- trajectory CSV -------------------------------------------------------

void save_trajectory(const DecisionTrajectory& traj,
                     const ContactSchedule& schedule,
                     const KinematicTree& tree, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  const int nj = tree.njoints();
  f << "k,t,phase,active_mask";
  f << ",base_x,base_y,base_z,quat_w,quat_x,quat_y,quat_z";
  for (int j = 0; j < nj; ++j) f << ",q_" << tree.links[j + 1].name;
  f << ",vel_x,vel_y,vel_z,omega_x,omega_y,omega_z";
  for (int j = 0; j < nj; ++j) f << ",qd_" << tree.links[j + 1].name;
  f << ",r_x,r_y,r_z,rd_x,rd_y,rd_z,rdd_x,rdd_y,rdd_z,h_x,h_y,h_z";
  for (const auto& c : tree.contact_frames)
    f << ",f_" << c.name << "_x,f_" << c.name << "_y,f_" << c.name << "_z";
  f << "\n";
  char buf[32];
  auto put = [&](double v) {
    snprintf(buf, sizeof(buf), "%.17g", v);
    f << "," << buf;
  };
  for (int k = 0; k < traj.knots(); ++k) {
    const auto& contacts = schedule.contacts_at(k);
    unsigned mask = 0;
    for (int c : contacts) mask |= 1u << c;
    f << k;
    put(k * traj.dt);
    f << "," << schedule.phase_of(k) << "," << mask;
    VecX q = traj.q[k].ToVector();
    for (int i = 0; i < q.size(); ++i) put(q(i));
    for (int i = 0; i < traj.v[k].size(); ++i) put(traj.v[k](i));
    for (int a = 0; a < 3; ++a) put(traj.r[k](a));
    for (int a = 0; a < 3; ++a) put(traj.rd[k](a));
    for (int a = 0; a < 3; ++a) put(traj.rdd[k](a));
    for (int a = 0; a < 3; ++a) put(traj.h[k](a));
    std::vector<Vec3> full(tree.contact_frames.size(), Vec3::Zero());
    for (size_t j = 0; j < contacts.size(); ++j) full[contacts[j]] = traj.forces[k][j];
    for (const auto& F : full)
      for (int a = 0; a < 3; ++a) put(F(a));
    f << "\n";
  }
}

DecisionTrajectory load_trajectory(const std::string& path,
                                   const KinematicTree& tree) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string header;
  std::getline(f, header);
  const int nj = tree.njoints();
  const int nc = static_cast<int>(tree.contact_frames.size());
  DecisionTrajectory t;
  std::string line;
  double prev_t = 0.0, cur_t = 0.0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    size_t expect = 4 + 7 + nj + 6 + nj + 12 + 3 * nc;
    if (vals.size() != expect)
      throw std::runtime_error("bad trajectory row in " + path);
    size_t i = 1;
    prev_t = cur_t;
    cur_t = vals[i++];
    i++;  // phase
    unsigned mask = static_cast<unsigned>(vals[i++]);
    Configuration q;
    q.base_pos = Vec3(vals[i], vals[i + 1], vals[i + 2]);
    i += 3;
    q.base_quat = Quat(vals[i], vals[i + 1], vals[i + 2], vals[i + 3]);
    i += 4;
    q.joint_pos.resize(nj);
    for (int j = 0; j < nj; ++j) q.joint_pos(j) = vals[i++];
    VecX v(6 + nj);
    for (int j = 0; j < 6 + nj; ++j) v(j) = vals[i++];
    Vec3 r(vals[i], vals[i + 1], vals[i + 2]);
    i += 3;
    Vec3 rd(vals[i], vals[i + 1], vals[i + 2]);
    i += 3;
    Vec3 rdd(vals[i], vals[i + 1], vals[i + 2]);
    i += 3;
    Vec3 h(vals[i], vals[i + 1], vals[i + 2]);
    i += 3;
    std::vector<Vec3> forces;
    for (int c = 0; c < nc; ++c) {
      Vec3 F(vals[i], vals[i + 1], vals[i + 2]);
      i += 3;
      if (mask & (1u << c)) forces.push_back(F);
    }
    t.q.push_back(q);
    t.v.push_back(v);
    t.r.push_back(r);
    t.rd.push_back(rd);
    t.rdd.push_back(rdd);
    t.h.push_back(h);
    t.forces.push_back(forces);
  }
  if (t.knots() >= 2) t.dt = cur_t - prev_t;
  return t;
}

}  // namespace jumpkit
