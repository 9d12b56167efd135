#pragma once

#include "trussnet/dual.hpp"
#include "trussnet/errors.hpp"

namespace tn {

// Minimal fixed-size vector/matrix templates usable with double or Dual
// scalars. Only the operations needed by the rotation kinematics below.
template <class T>
struct V3 {
  T x{}, y{}, z{};
};

template <class T>
struct M3 {
  // Row-major entries.
  T a[3][3]{};
};

template <class T>
inline V3<T> operator+(const V3<T>& u, const V3<T>& v) {
  return {u.x + v.x, u.y + v.y, u.z + v.z};
}
template <class T>
inline V3<T> operator-(const V3<T>& u, const V3<T>& v) {
  return {u.x - v.x, u.y - v.y, u.z - v.z};
}
template <class T, class S>
inline V3<T> operator*(const S& s, const V3<T>& v) {
  return {s * v.x, s * v.y, s * v.z};
}
template <class T>
inline T dot(const V3<T>& u, const V3<T>& v) {
  return u.x * v.x + u.y * v.y + u.z * v.z;
}
template <class T>
inline V3<T> cross(const V3<T>& u, const V3<T>& v) {
  return {u.y * v.z - u.z * v.y, u.z * v.x - u.x * v.z, u.x * v.y - u.y * v.x};
}

template <class T>
inline M3<T> identity3() {
  M3<T> m;
  m.a[0][0] = T(1.0);
  m.a[1][1] = T(1.0);
  m.a[2][2] = T(1.0);
  return m;
}

template <class T>
inline M3<T> from_cols(const V3<T>& c0, const V3<T>& c1, const V3<T>& c2) {
  M3<T> m;
  m.a[0][0] = c0.x; m.a[0][1] = c1.x; m.a[0][2] = c2.x;
  m.a[1][0] = c0.y; m.a[1][1] = c1.y; m.a[1][2] = c2.y;
  m.a[2][0] = c0.z; m.a[2][1] = c1.z; m.a[2][2] = c2.z;
  return m;
}

template <class T>
inline V3<T> col(const M3<T>& m, int j) {
  return {m.a[0][j], m.a[1][j], m.a[2][j]};
}

template <class T>
inline M3<T> matmul(const M3<T>& p, const M3<T>& q) {
  M3<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.a[i][j] = p.a[i][0] * q.a[0][j] + p.a[i][1] * q.a[1][j] + p.a[i][2] * q.a[2][j];
  return r;
}

template <class T>
inline M3<T> transpose(const M3<T>& m) {
  M3<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.a[i][j] = m.a[j][i];
  return r;
}

template <class T>
inline V3<T> apply(const M3<T>& m, const V3<T>& v) {
  return {m.a[0][0] * v.x + m.a[0][1] * v.y + m.a[0][2] * v.z,
          m.a[1][0] * v.x + m.a[1][1] * v.y + m.a[1][2] * v.z,
          m.a[2][0] * v.x + m.a[2][1] * v.y + m.a[2][2] * v.z};
}

// m^T v without forming the transpose.
template <class T>
inline V3<T> apply_t(const M3<T>& m, const V3<T>& v) {
  return {m.a[0][0] * v.x + m.a[1][0] * v.y + m.a[2][0] * v.z,
          m.a[0][1] * v.x + m.a[1][1] * v.y + m.a[2][1] * v.z,
          m.a[0][2] * v.x + m.a[1][2] * v.y + m.a[2][2] * v.z};
}

template <class T>
inline M3<T> skew(const V3<T>& w) {
  M3<T> m;
  m.a[0][1] = -w.z; m.a[0][2] = w.y;
  m.a[1][0] = w.z;  m.a[1][2] = -w.x;
  m.a[2][0] = -w.y; m.a[2][1] = w.x;
  return m;
}

// exp(skew(w)). The small-angle branch is a truncated series in |w|^2, which
// is a smooth function of the dofs, so dual derivatives stay exact across
// the branch (mismatch at the threshold ~1e-21).
template <class T>
inline M3<T> rodrigues(const V3<T>& w) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  T x = dot(w, w);
  T a, b;
  if (value_of(x) < 1e-4) {
    a = 1.0 - x * (1.0 / 6.0) + x * x * (1.0 / 120.0) - x * x * x * (1.0 / 5040.0);
    b = 0.5 - x * (1.0 / 24.0) + x * x * (1.0 / 720.0) - x * x * x * (1.0 / 40320.0);
  } else {
    T th = sqrt(x);
    a = sin(th) / th;
    b = (1.0 - cos(th)) / x;
  }
  M3<T> k = skew(w);
  M3<T> k2 = matmul(k, k);
  M3<T> r = identity3<T>();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.a[i][j] = r.a[i][j] + a * k.a[i][j] + b * k2.a[i][j];
  return r;
}

// log of a rotation matrix as a rotation vector. Valid for angles below ~pi/2
// with full accuracy; the small-angle branch expands asin(s)/s in s^2 (a
// polynomial of the dofs), so it is differentiable at exactly zero rotation.
template <class T>
inline V3<T> rotvec(const M3<T>& r) {
  using std::atan2;
  using std::sqrt;
  V3<T> s = {0.5 * (r.a[2][1] - r.a[1][2]), 0.5 * (r.a[0][2] - r.a[2][0]),
             0.5 * (r.a[1][0] - r.a[0][1])};
  T c = 0.5 * (r.a[0][0] + r.a[1][1] + r.a[2][2] - 1.0);
  T u = dot(s, s);
  T f;
  if (value_of(u) < 1e-4) {
    if (value_of(c) < 0.0) throw SolverError("rotation angle near pi in rotvec extraction");
    f = 1.0 + u * (1.0 / 6.0) + u * u * (3.0 / 40.0) + u * u * u * (15.0 / 336.0) +
        u * u * u * u * (35.0 / 1152.0);
  } else {
    T sn = sqrt(u);
    f = atan2(sn, c) / sn;
  }
  return f * s;
}

// Smallest rotation taking unit vector p to unit vector q.
template <class T>
inline M3<T> smallest_rotation(const V3<T>& p, const V3<T>& q) {
  V3<T> c = cross(p, q);
  T d = dot(p, q);
  if (value_of(d) < -0.5) throw SolverError("smallest-rotation map degenerate (vectors opposed)");
  M3<T> k = skew(c);
  M3<T> k2 = matmul(k, k);
  T w = 1.0 / (1.0 + d);
  M3<T> r = identity3<T>();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.a[i][j] = r.a[i][j] + k.a[i][j] + w * k2.a[i][j];
  return r;
}

}  // namespace tn
