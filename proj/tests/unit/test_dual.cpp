#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "trussnet/dual.hpp"
#include "trussnet/geom.hpp"
#include "trussnet/rng.hpp"

using namespace tn;

namespace {

// Smooth scalar test function exercising every Dual operation.
template <class T>
T scalar_fn(const std::array<T, 4>& x) {
  T a = x[0] * x[1] + 2.0 * x[2] - x[3] / (1.0 + x[0] * x[0]);
  T b = sqrt(x[2] * x[2] + 1.0) * sin(x[0]) + cos(x[1] * x[3]);
  T c = log(2.0 + exp(-x[2])) + atan2(x[1] + 2.0, x[3] + 3.0);
  return a * b + c * c - 0.5 * a;
}

double eval_plain(const Eigen::Vector4d& x) {
  std::array<double, 4> in{x[0], x[1], x[2], x[3]};
  return scalar_fn(in);
}

}  // namespace

TEST_CASE("dual gradient and hessian match finite differences") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::Vector4d x;
    for (int i = 0; i < 4; ++i) x[i] = rng.uniform(-1.0, 1.0);

    std::array<D2<4>, 4> in;
    for (int i = 0; i < 4; ++i) in[i] = D2<4>::variable(x[i], i);
    D2<4> y = scalar_fn(in);

    CHECK(y.v == doctest::Approx(eval_plain(x)).epsilon(1e-14));

    const double h = 1e-5;
    for (int i = 0; i < 4; ++i) {
      Eigen::Vector4d xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      double fd = (eval_plain(xp) - eval_plain(xm)) / (2 * h);
      CHECK(y.g[i] == doctest::Approx(fd).epsilon(1e-6));
    }
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        Eigen::Vector4d xpp = x, xpm = x, xmp = x, xmm = x;
        xpp[i] += h; xpp[j] += h;
        xpm[i] += h; xpm[j] -= h;
        xmp[i] -= h; xmp[j] += h;
        xmm[i] -= h; xmm[j] -= h;
        double fd = (eval_plain(xpp) - eval_plain(xpm) - eval_plain(xmp) + eval_plain(xmm)) / (4 * h * h);
        CHECK(y.h(i, j) == doctest::Approx(fd).epsilon(5e-4));
        CHECK(y.h(i, j) == doctest::Approx(y.h(j, i)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("first-order dual agrees with second-order gradient") {
  Rng rng(5);
  Eigen::Vector4d x;
  for (int i = 0; i < 4; ++i) x[i] = rng.uniform(-1.0, 1.0);
  std::array<D1<4>, 4> in1;
  std::array<D2<4>, 4> in2;
  for (int i = 0; i < 4; ++i) {
    in1[i] = D1<4>::variable(x[i], i);
    in2[i] = D2<4>::variable(x[i], i);
  }
  auto y1 = scalar_fn(in1);
  auto y2 = scalar_fn(in2);
  CHECK(y1.v == y2.v);
  CHECK((y1.g - y2.g).norm() == 0.0);
}

namespace {

template <class T>
V3<T> make_v3(const Eigen::Vector3d& v, int base = -1) {
  if constexpr (std::is_same_v<T, double>) {
    return {v[0], v[1], v[2]};
  } else {
    return {T::variable(v[0], base), T::variable(v[1], base + 1), T::variable(v[2], base + 2)};
  }
}

Eigen::Matrix3d to_eigen(const M3<double>& m) {
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = m.a[i][j];
  return r;
}

}  // namespace

TEST_CASE("rodrigues produces a rotation and inverts rotvec") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector3d w;
    for (int i = 0; i < 3; ++i) w[i] = rng.uniform(-1.0, 1.0);
    if (trial < 5) w *= 1e-4;  // exercise the series branch
    V3<double> wv{w[0], w[1], w[2]};
    M3<double> r = rodrigues(wv);
    Eigen::Matrix3d re = to_eigen(r);
    CHECK((re * re.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-13);
    CHECK(re.determinant() == doctest::Approx(1.0).epsilon(1e-13));
    V3<double> back = rotvec(r);
    CHECK(back.x == doctest::Approx(w[0]).epsilon(1e-12));
    CHECK(back.y == doctest::Approx(w[1]).epsilon(1e-12));
    CHECK(back.z == doctest::Approx(w[2]).epsilon(1e-12));
  }
}

TEST_CASE("rotvec derivatives are finite at exactly zero rotation") {
  // f(w) = |rotvec(rodrigues(w))|^2 evaluated through duals at w = 0.
  std::array<D2<3>, 3> w{D2<3>::variable(0.0, 0), D2<3>::variable(0.0, 1), D2<3>::variable(0.0, 2)};
  V3<D2<3>> wv{w[0], w[1], w[2]};
  V3<D2<3>> back = rotvec(rodrigues(wv));
  D2<3> n2 = dot(back, back);
  CHECK(n2.v == 0.0);
  CHECK(n2.g.allFinite());
  CHECK(n2.h.allFinite());
  // |w|^2 has hessian 2 I at the origin.
  CHECK((n2.h - 2.0 * Eigen::Matrix3d::Identity()).norm() < 1e-12);
}

TEST_CASE("smallest rotation maps first vector to second") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Vector3d p, q;
    for (int i = 0; i < 3; ++i) {
      p[i] = rng.uniform(-1.0, 1.0);
      q[i] = rng.uniform(-1.0, 1.0);
    }
    p.normalize();
    q.normalize();
    if (p.dot(q) < -0.4) q = -q;
    V3<double> pv{p[0], p[1], p[2]}, qv{q[0], q[1], q[2]};
    M3<double> r = smallest_rotation(pv, qv);
    Eigen::Matrix3d re = to_eigen(r);
    CHECK((re * re.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-13);
    CHECK((re * p - q).norm() < 1e-13);
  }
}

TEST_CASE("rodrigues hessian matches finite differences through composite map") {
  // g(w) = sum_ij R(w)_ij * c_ij, a smooth scalar of the rotation vector.
  Eigen::Matrix3d c;
  c << 0.3, -1.2, 0.4, 0.9, 0.1, -0.7, 0.2, 0.5, -0.3;
  auto plain = [&](const Eigen::Vector3d& w) {
    M3<double> r = rodrigues(V3<double>{w[0], w[1], w[2]});
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s += r.a[i][j] * c(i, j);
    return s;
  };
  Eigen::Vector3d w(0.4, -0.2, 0.7);
  V3<D2<3>> wv = make_v3<D2<3>>(w, 0);
  M3<D2<3>> r = rodrigues(wv);
  D2<3> s;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s = s + r.a[i][j] * c(i, j);
  const double h = 1e-5;
  for (int i = 0; i < 3; ++i) {
    Eigen::Vector3d wp = w, wm = w;
    wp[i] += h;
    wm[i] -= h;
    CHECK(s.g[i] == doctest::Approx((plain(wp) - plain(wm)) / (2 * h)).epsilon(1e-7));
    for (int j = 0; j < 3; ++j) {
      Eigen::Vector3d a = w, b = w, d = w, e = w;
      a[i] += h; a[j] += h;
      b[i] += h; b[j] -= h;
      d[i] -= h; d[j] += h;
      e[i] -= h; e[j] -= h;
      double fd = (plain(a) - plain(b) - plain(d) + plain(e)) / (4 * h * h);
      CHECK(s.h(i, j) == doctest::Approx(fd).epsilon(5e-4));
    }
  }
}

TEST_CASE("hessians are bitwise symmetric") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    std::array<D2<4>, 4> x;
    for (int i = 0; i < 4; ++i) x[i] = D2<4>::variable(rng.uniform(-1.0, 1.0), i);
    D2<4> y = scalar_fn(x);
    CHECK((y.h - y.h.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}
