#include <doctest.h>

#include <random>

#include "jumpkit/spatial.hpp"

using namespace jumpkit;

TEST_CASE("so3 exp/log round trip") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    Vec3 a(u(rng), u(rng), u(rng));
    a.normalize();
    double angle = (M_PI - 1e-3) * std::abs(u(rng));
    Vec3 w = angle * a;
    Vec3 back = so3_log(so3_exp(w));
    CHECK((back - w).norm() < 1e-10);
  }
}

TEST_CASE("so3 log near pi") {
  Vec3 w(0, 0, M_PI - 1e-9);
  Vec3 back = so3_log(so3_exp(w));
  CHECK((back - w).norm() < 1e-6);
}

TEST_CASE("quat exp matches rotation exp") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 50; ++i) {
    Vec3 w(u(rng), u(rng), u(rng));
    Mat3 R1 = quat_exp(w).toRotationMatrix();
    Mat3 R2 = so3_exp(w);
    CHECK((R1 - R2).norm() < 1e-12);
  }
}

TEST_CASE("quat integrate: body-frame yaw rate") {
  Quat q = Quat::Identity();
  Quat q2 = quat_integrate(q, Vec3(0, 0, M_PI), 0.5);
  CHECK(yaw_of(q2.toRotationMatrix()) == doctest::Approx(M_PI / 2).epsilon(1e-12));
}

TEST_CASE("quat tangent map matches finite differences") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector4d s(1 + u(rng), u(rng), u(rng), u(rng));
    Quat q(s(0), s(1), s(2), s(3));
    auto G = quat_tangent_map(q);
    // Compare d(R(s/|s|) p)/ds against the map through the body tangent.
    Vec3 p(0.3, -0.2, 0.7);
    const double h = 1e-7;
    for (int c = 0; c < 4; ++c) {
      Eigen::Vector4d sp = s, sm = s;
      sp(c) += h;
      sm(c) -= h;
      Quat qp(sp(0), sp(1), sp(2), sp(3)), qm(sm(0), sm(1), sm(2), sm(3));
      qp.normalize();
      qm.normalize();
      Vec3 fd = (qp.toRotationMatrix() * p - qm.toRotationMatrix() * p) / (2 * h);
      // delta p = R * (theta x p_local)? For body tangent: dR = R*skew(theta)
      Quat qn = q.normalized();
      Vec3 analytic = qn.toRotationMatrix() * (Vec3(G.col(c)).cross(p));
      CHECK((fd - analytic).norm() < 1e-5);
    }
  }
}

TEST_CASE("cubic hermite endpoints and midpoint") {
  double p, v;
  cubic_hermite(1.0, 0.0, 3.0, 0.0, 2.0, 0.0, p, v);
  CHECK(p == doctest::Approx(1.0));
  cubic_hermite(1.0, 0.0, 3.0, 0.0, 2.0, 2.0, p, v);
  CHECK(p == doctest::Approx(3.0));
  CHECK(v == doctest::Approx(0.0));
  cubic_hermite(1.0, 0.0, 3.0, 0.0, 2.0, 1.0, p, v);
  CHECK(p == doctest::Approx(2.0));  // midpoint with zero boundary rates
  // zero-duration: returns the target directly
  cubic_hermite(1.0, 0.5, 3.0, 0.0, 0.0, 0.0, p, v);
  CHECK(p == doctest::Approx(3.0));
}
