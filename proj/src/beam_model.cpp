#include "trussnet/beam_model.hpp"

#include <Eigen/Geometry>

#include "trussnet/dual.hpp"
#include "trussnet/geom.hpp"

namespace tn {

BeamElement BeamElement::create(const Eigen::Vector3d& x_a, const Eigen::Vector3d& x_b,
                                double radius) {
  BeamElement el;
  el.x_a = x_a;
  el.x_b = x_b;
  el.length = (x_b - x_a).norm();
  if (!(el.length > 0.0)) throw ValidationError("beam endpoints coincide");
  el.section.radius = radius;

  Eigen::Vector3d t = (x_b - x_a) / el.length;
  // Deterministic complement: seed with the global axis least aligned with
  // the beam. Roll is arbitrary but irrelevant for circular sections.
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(t[i]) < std::abs(t[k])) k = i;
  Eigen::Vector3d seed = Eigen::Vector3d::Unit(k);
  Eigen::Vector3d e2 = t.cross(seed).normalized();
  Eigen::Vector3d e3 = t.cross(e2);
  el.triad.col(0) = t;
  el.triad.col(1) = e2;
  el.triad.col(2) = e3;
  return el;
}

namespace {

template <class T>
M3<T> to_m3(const Eigen::Matrix3d& m) {
  M3<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.a[i][j] = T(m(i, j));
  return r;
}

// Scalar element energy; T is double or a dual type over the 12 dofs.
template <class T>
T beam_energy_scalar(const BeamElement& el, const BeamMaterial& mat, const V3<T>& ua,
                     const V3<T>& tha, const V3<T>& ub, const V3<T>& thb) {
  using std::sqrt;
  const double L0 = el.length;
  const double EA = mat.youngs_modulus * el.section.area();
  const double EI = mat.youngs_modulus * el.section.bending_inertia();
  const double GJ = mat.shear_modulus() * el.section.torsion_constant();

  // Chord between deformed endpoints.
  V3<T> xa{T(el.x_a[0]) + ua.x, T(el.x_a[1]) + ua.y, T(el.x_a[2]) + ua.z};
  V3<T> xb{T(el.x_b[0]) + ub.x, T(el.x_b[1]) + ub.y, T(el.x_b[2]) + ub.z};
  V3<T> d = xb - xa;
  T lc2 = dot(d, d);
  T lc = sqrt(lc2);
  V3<T> m1 = (1.0 / lc) * d;

  // Nodal rotations applied to the reference triad.
  M3<T> ra = rodrigues(tha);
  M3<T> rb = rodrigues(thb);

  // Geodesic mean rotation, then rotate its axis onto the chord by the
  // smallest rotation; this frame shares the torsional roll equally.
  V3<T> phi = rotvec(matmul(transpose(ra), rb));
  M3<T> rm = matmul(ra, rodrigues(0.5 * phi));
  M3<T> triad = to_m3<T>(el.triad);
  M3<T> tm = matmul(rm, triad);
  V3<T> t1 = col(tm, 0);
  M3<T> frame = matmul(smallest_rotation(t1, m1), tm);

  // Local nodal rotations in frame axes.
  V3<T> va = rotvec(matmul(transpose(frame), matmul(ra, triad)));
  V3<T> vb = rotvec(matmul(transpose(frame), matmul(rb, triad)));

  // Stable elongation: (lc^2 - L0^2) / (lc + L0) = lc - L0 without cancellation.
  T delta = (lc2 - L0 * L0) / (lc + L0);

  T twist = vb.x - va.x;
  T w = (0.5 * EA / L0) * delta * delta + (0.5 * GJ / L0) * twist * twist;
  w = w + (EI / L0) * (2.0 * (va.y * va.y + va.y * vb.y + vb.y * vb.y) +
                       2.0 * (va.z * va.z + va.z * vb.z + vb.z * vb.z));
  return w;
}

template <class T>
T beam_energy_dofs(const BeamElement& el, const BeamMaterial& mat,
                   const Eigen::Matrix<double, 12, 1>& dofs) {
  auto grab = [&](int base) {
    if constexpr (std::is_same_v<T, double>) {
      return V3<T>{dofs[base], dofs[base + 1], dofs[base + 2]};
    } else {
      return V3<T>{T::variable(dofs[base], base), T::variable(dofs[base + 1], base + 1),
                   T::variable(dofs[base + 2], base + 2)};
    }
  };
  return beam_energy_scalar(el, mat, grab(0), grab(3), grab(6), grab(9));
}

}  // namespace

double beam_energy(const BeamElement& el, const BeamMaterial& mat, const Vector12d& dofs) {
  return beam_energy_dofs<double>(el, mat, dofs);
}

double beam_force(const BeamElement& el, const BeamMaterial& mat, const Vector12d& dofs,
                  Vector12d& force) {
  D1<12> w = beam_energy_dofs<D1<12>>(el, mat, dofs);
  force = w.g;
  return w.v;
}

double beam_force_tangent(const BeamElement& el, const BeamMaterial& mat, const Vector12d& dofs,
                          Vector12d& force, Matrix12d& tangent) {
  D2<12> w = beam_energy_dofs<D2<12>>(el, mat, dofs);
  force = w.g;
  tangent = w.h;
  return w.v;
}

}  // namespace tn
