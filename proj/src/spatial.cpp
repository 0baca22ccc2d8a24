#include "jumpkit/spatial.hpp"

#include <cmath>

namespace jumpkit {

Mat3 so3_exp(const Vec3& w) {
  double th = w.norm();
  if (th < 1e-12) {
    return Mat3::Identity() + skew(w);
  }
  Vec3 a = w / th;
  Mat3 K = skew(a);
  return Mat3::Identity() + std::sin(th) * K + (1.0 - std::cos(th)) * K * K;
}

Vec3 so3_log(const Mat3& R) {
  double c = 0.5 * (R.trace() - 1.0);
  c = std::clamp(c, -1.0, 1.0);
  double th = std::acos(c);
  if (th < 1e-10) {
    // First-order: vee of the skew part.
    return 0.5 * Vec3(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  }
  if (th > M_PI - 1e-6) {
    // Near pi the skew part vanishes; recover the axis from R + I.
    Mat3 B = 0.5 * (R + Mat3::Identity());
    int k = 0;
    B.diagonal().maxCoeff(&k);
    Vec3 a = B.col(k) / std::sqrt(std::max(B(k, k), 1e-16));
    a.normalize();
    // Fix sign using the skew part where it is nonzero.
    Vec3 s(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
    if (s.dot(a) < 0.0) a = -a;
    return th * a;
  }
  Vec3 s(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  return (th / (2.0 * std::sin(th))) * s;
}

Quat quat_exp(const Vec3& w) {
  double th = w.norm();
  if (th < 1e-12) {
    Quat q(1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z());
    q.normalize();
    return q;
  }
  Vec3 a = w / th;
  double h = 0.5 * th;
  double s = std::sin(h);
  return Quat(std::cos(h), s * a.x(), s * a.y(), s * a.z());
}

Vec3 quat_log(const Quat& q_in) {
  Quat q = q_in;
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  double vn = q.vec().norm();
  if (vn < 1e-12) {
    return 2.0 * q.vec();
  }
  double th = 2.0 * std::atan2(vn, q.w());
  return (th / vn) * q.vec();
}

Quat quat_integrate(const Quat& q, const Vec3& w_body, double dt) {
  Quat out = q * quat_exp(w_body * dt);
  out.normalize();
  return out;
}

double yaw_of(const Mat3& R) {
  return std::atan2(R(1, 0), R(0, 0));
}

Eigen::Matrix<double, 3, 4> quat_tangent_map(const Quat& q_raw) {
  // theta_body = 2 * Q(u) * du with u = q/|q| and Q from w_b = 2 (u^-1 ⊗ u̇).
  double n = q_raw.coeffs().norm();
  Quat u(q_raw.w() / n, q_raw.x() / n, q_raw.y() / n, q_raw.z() / n);
  Eigen::Matrix<double, 3, 4> Qm;
  // Columns ordered (w, x, y, z).
  Qm << -u.x(), u.w(), u.z(), -u.y(),
        -u.y(), -u.z(), u.w(), u.x(),
        -u.z(), u.y(), -u.x(), u.w();
  Eigen::Vector4d uv(u.w(), u.x(), u.y(), u.z());
  Eigen::Matrix4d P = (Eigen::Matrix4d::Identity() - uv * uv.transpose()) / n;
  return 2.0 * Qm * P;
}

void cubic_hermite(double p0, double v0, double p1, double v1, double T,
                   double t, double& p, double& v) {
  if (T <= 0.0) {
    p = p1;
    v = 0.0;
    return;
  }
  double s = std::clamp(t / T, 0.0, 1.0);
  double s2 = s * s, s3 = s2 * s;
  double h00 = 2 * s3 - 3 * s2 + 1;
  double h10 = s3 - 2 * s2 + s;
  double h01 = -2 * s3 + 3 * s2;
  double h11 = s3 - s2;
  p = h00 * p0 + h10 * T * v0 + h01 * p1 + h11 * T * v1;
  double d00 = 6 * s2 - 6 * s;
  double d10 = 3 * s2 - 4 * s + 1;
  double d01 = -6 * s2 + 6 * s;
  double d11 = 3 * s2 - 2 * s;
  v = (d00 * p0 + d10 * T * v0 + d01 * p1 + d11 * T * v1) / T;
}

}  // namespace jumpkit
