#pragma once

#include <Eigen/Core>
#include <cmath>

#include "trussnet/errors.hpp"

namespace tn {

struct BeamMaterial {
  double youngs_modulus = 1.0;
  double poisson_ratio = 0.3;

  double shear_modulus() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }

  void check() const {
    if (!(youngs_modulus > 0.0)) throw ValidationError("Young's modulus must be positive");
    if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5))
      throw ValidationError("Poisson's ratio must lie in (-1, 0.5)");
  }
};

// Circular cross-section.
struct BeamSection {
  double radius = 0.0;

  double area() const { return M_PI * radius * radius; }
  double bending_inertia() const { return M_PI * std::pow(radius, 4) / 4.0; }
  double torsion_constant() const { return M_PI * std::pow(radius, 4) / 2.0; }

  void check() const {
    if (!(radius > 0.0)) throw ValidationError("section radius must be positive");
  }
};

// Corotational Euler-Bernoulli beam (no shear deformation), circular
// section. Rotational dofs are total rotation vectors; the element energy
// is exactly invariant under rigid motions, and forces / tangent are exact
// derivatives of the energy (evaluated with second-order duals), so the
// tangent is symmetric by construction.
struct BeamElement {
  Eigen::Vector3d x_a = Eigen::Vector3d::Zero();
  Eigen::Vector3d x_b = Eigen::Vector3d::Zero();
  Eigen::Matrix3d triad = Eigen::Matrix3d::Identity();  // column 0 = beam axis
  double length = 0.0;
  BeamSection section;

  static BeamElement create(const Eigen::Vector3d& x_a, const Eigen::Vector3d& x_b, double radius);
};

using Vector12d = Eigen::Matrix<double, 12, 1>;
using Matrix12d = Eigen::Matrix<double, 12, 12>;

// Dof order: [u_a(3), theta_a(3), u_b(3), theta_b(3)].
double beam_energy(const BeamElement& el, const BeamMaterial& mat, const Vector12d& dofs);
double beam_force(const BeamElement& el, const BeamMaterial& mat, const Vector12d& dofs,
                  Vector12d& force);
double beam_force_tangent(const BeamElement& el, const BeamMaterial& mat, const Vector12d& dofs,
                          Vector12d& force, Matrix12d& tangent);

}  // namespace tn
