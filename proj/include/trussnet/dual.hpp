#pragma once

#include <Eigen/Core>
#include <cmath>

namespace tn {

// Forward-mode dual number carrying value, gradient and (optionally) the
// dense Hessian with respect to N independent variables. Element energies
// are written once as scalar functions; differentiating them with Dual
// yields internal forces and a consistent tangent that is symmetric by
// construction and exactly the derivative of the implemented energy.
template <int N, bool WithHessian>
struct Dual {
  using Grad = Eigen::Matrix<double, N, 1>;
  using Hess = Eigen::Matrix<double, N, N>;

  double v = 0.0;
  Grad g = Grad::Zero();
  Hess h;  // left uninitialized unless WithHessian

  Dual() {
    if constexpr (WithHessian) h.setZero();
  }
  Dual(double value) : Dual() { v = value; }  // NOLINT: implicit by design

  static Dual variable(double value, int index) {
    Dual d(value);
    d.g[index] = 1.0;
    return d;
  }
};

namespace detail {

// Rank-one Hessian updates evaluate the bare outer product first (bitwise
// symmetric because scalar multiplication commutes) and scale it
// coefficient-wise; folding the scalar into one factor would break symmetry
// in the last ulp.
template <int N, bool H>
inline void add_sym_outer(typename Dual<N, H>::Hess& h, double c,
                          const typename Dual<N, H>::Grad& g) {
  if (c == 0.0) return;
  typename Dual<N, H>::Hess m = g * g.transpose();
  h += c * m;
}

// r = f(a) with fp = f'(a.v), fpp = f''(a.v).
template <int N, bool H>
inline Dual<N, H> unary(const Dual<N, H>& a, double f, double fp, double fpp) {
  Dual<N, H> r;
  r.v = f;
  r.g = fp * a.g;
  if constexpr (H) {
    r.h.noalias() = fp * a.h;
    add_sym_outer<N, H>(r.h, fpp, a.g);
  }
  return r;
}

// r = f(a, b) with first partials (fa, fb) and second partials (faa, fab, fbb).
template <int N, bool H>
inline Dual<N, H> binary(const Dual<N, H>& a, const Dual<N, H>& b, double f, double fa, double fb,
                         double faa, double fab, double fbb) {
  Dual<N, H> r;
  r.v = f;
  r.g = fa * a.g + fb * b.g;
  if constexpr (H) {
    r.h.noalias() = fa * a.h;
    r.h.noalias() += fb * b.h;
    add_sym_outer<N, H>(r.h, faa, a.g);
    add_sym_outer<N, H>(r.h, fbb, b.g);
    if (fab != 0.0) {
      // Fused update: entries (i,j) and (j,i) see the same two products
      // added in commuted order, so symmetry is exact.
      typename Dual<N, H>::Hess m = a.g * b.g.transpose();
      r.h.noalias() += fab * (m + m.transpose());
    }
  }
  return r;
}

}  // namespace detail

template <int N, bool H>
inline Dual<N, H> operator+(const Dual<N, H>& a, const Dual<N, H>& b) {
  Dual<N, H> r;
  r.v = a.v + b.v;
  r.g = a.g + b.g;
  if constexpr (H) r.h = a.h + b.h;
  return r;
}

template <int N, bool H>
inline Dual<N, H> operator-(const Dual<N, H>& a, const Dual<N, H>& b) {
  Dual<N, H> r;
  r.v = a.v - b.v;
  r.g = a.g - b.g;
  if constexpr (H) r.h = a.h - b.h;
  return r;
}

template <int N, bool H>
inline Dual<N, H> operator-(const Dual<N, H>& a) {
  Dual<N, H> r;
  r.v = -a.v;
  r.g = -a.g;
  if constexpr (H) r.h = -a.h;
  return r;
}

template <int N, bool H>
inline Dual<N, H> operator*(const Dual<N, H>& a, const Dual<N, H>& b) {
  return detail::binary(a, b, a.v * b.v, b.v, a.v, 0.0, 1.0, 0.0);
}

template <int N, bool H>
inline Dual<N, H> operator*(const Dual<N, H>& a, double s) {
  Dual<N, H> r;
  r.v = a.v * s;
  r.g = a.g * s;
  if constexpr (H) r.h = a.h * s;
  return r;
}

template <int N, bool H>
inline Dual<N, H> operator*(double s, const Dual<N, H>& a) {
  return a * s;
}

template <int N, bool H>
inline Dual<N, H> operator+(const Dual<N, H>& a, double s) {
  Dual<N, H> r = a;
  r.v += s;
  return r;
}

template <int N, bool H>
inline Dual<N, H> operator+(double s, const Dual<N, H>& a) {
  return a + s;
}

template <int N, bool H>
inline Dual<N, H> operator-(const Dual<N, H>& a, double s) {
  return a + (-s);
}

template <int N, bool H>
inline Dual<N, H> operator-(double s, const Dual<N, H>& a) {
  return (-a) + s;
}

template <int N, bool H>
inline Dual<N, H> inv(const Dual<N, H>& a) {
  double iv = 1.0 / a.v;
  return detail::unary(a, iv, -iv * iv, 2.0 * iv * iv * iv);
}

// The value is a true divide so Dual and plain-double instantiations of the
// same expression agree bitwise.
template <int N, bool H>
inline Dual<N, H> operator/(const Dual<N, H>& a, const Dual<N, H>& b) {
  double ib = 1.0 / b.v;
  double q = a.v / b.v;
  return detail::binary(a, b, q, ib, -q * ib, 0.0, -ib * ib, 2.0 * q * ib * ib);
}

template <int N, bool H>
inline Dual<N, H> operator/(const Dual<N, H>& a, double s) {
  Dual<N, H> r;
  r.v = a.v / s;
  r.g = a.g / s;
  if constexpr (H) r.h = a.h / s;
  return r;
}

template <int N, bool H>
inline Dual<N, H> operator/(double s, const Dual<N, H>& a) {
  double ia = 1.0 / a.v;
  double q = s / a.v;
  return detail::unary(a, q, -q * ia, 2.0 * q * ia * ia);
}

template <int N, bool H>
inline Dual<N, H> sqrt(const Dual<N, H>& a) {
  double s = std::sqrt(a.v);
  return detail::unary(a, s, 0.5 / s, -0.25 / (s * a.v));
}

template <int N, bool H>
inline Dual<N, H> sin(const Dual<N, H>& a) {
  double s = std::sin(a.v), c = std::cos(a.v);
  return detail::unary(a, s, c, -s);
}

template <int N, bool H>
inline Dual<N, H> cos(const Dual<N, H>& a) {
  double s = std::sin(a.v), c = std::cos(a.v);
  return detail::unary(a, c, -s, -c);
}

template <int N, bool H>
inline Dual<N, H> log(const Dual<N, H>& a) {
  double iv = 1.0 / a.v;
  return detail::unary(a, std::log(a.v), iv, -iv * iv);
}

template <int N, bool H>
inline Dual<N, H> exp(const Dual<N, H>& a) {
  double e = std::exp(a.v);
  return detail::unary(a, e, e, e);
}

// atan2(y, x); well-defined away from the origin.
template <int N, bool H>
inline Dual<N, H> atan2(const Dual<N, H>& y, const Dual<N, H>& x) {
  double d = x.v * x.v + y.v * y.v;
  double fy = x.v / d, fx = -y.v / d;
  double d2 = d * d;
  double fyy = -2.0 * x.v * y.v / d2;
  double fyx = (y.v * y.v - x.v * x.v) / d2;
  double fxx = 2.0 * x.v * y.v / d2;
  return detail::binary(y, x, std::atan2(y.v, x.v), fy, fx, fyy, fyx, fxx);
}

template <int N, bool H>
inline bool operator<(const Dual<N, H>& a, double s) {
  return a.v < s;
}
template <int N, bool H>
inline bool operator>(const Dual<N, H>& a, double s) {
  return a.v > s;
}

template <int N>
using D1 = Dual<N, false>;
template <int N>
using D2 = Dual<N, true>;

// Scalar access helpers so templated geometry code works for plain doubles
// and duals alike.
inline double value_of(double x) { return x; }
template <int N, bool H>
inline double value_of(const Dual<N, H>& x) {
  return x.v;
}

}  // namespace tn
