#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

#include "trussnet/rng.hpp"

namespace tn {

// Families of proportional deformation paths. All paths are linear in the
// step index: F(t) - I = (t/T) * (F(T) - I) exactly.
enum class PathFamily { kUniaxial, kBiaxial, kSimpleShear, kTriaxial };

struct DeformationPath {
  PathFamily family = PathFamily::kUniaxial;
  // kUniaxial: axes[0] is the loaded axis (0..2).
  // kBiaxial: axes[0] < axes[1] are the two loaded axes.
  // kSimpleShear / kTriaxial: axes unused.
  std::array<int, 2> axes = {0, 0};
  // kUniaxial / kSimpleShear use lambda[0]; kBiaxial lambda[0..1];
  // kTriaxial lambda[0..2]. Values are the endpoint at t = steps.
  std::array<double, 3> lambda = {0.0, 0.0, 0.0};
  int steps = 1;
  // Widens the compressive range from [-0.25, 0] to [-0.3, 0]; used by the
  // extrapolation test family.
  bool extended_range = false;

  bool operator==(const DeformationPath&) const = default;
};

// Throws ValidationError when the loading parameters leave the declared
// family ranges (compressive lambda in [-0.25, 0], shear in [0, 0.5];
// extended_range widens compression to [-0.3, 0]).
void validate_path(const DeformationPath& p);

// Deformation increment F(t) - I at integer step t in [0, steps]. Computed
// as (t/steps) * (F(steps) - I) in one rounding, so linearity in t holds
// bitwise on the increment.
Eigen::Matrix3d path_increment(const DeformationPath& p, int t);

// Deformation gradient at integer step t in [0, steps].
Eigen::Matrix3d path_F(const DeformationPath& p, int t);

// Green-Lagrange strain E = (F^T F - I) / 2.
Eigen::Matrix3d green_lagrange(const Eigen::Matrix3d& F);

// Symmetric 3x3 <-> 6-vector in component order (11, 22, 33, 23, 13, 12).
// Stored entries are tensor components (no engineering doubling).
Eigen::Matrix<double, 6, 1> sym_to_vec(const Eigen::Matrix3d& m);
Eigen::Matrix3d vec_to_sym(const Eigen::Matrix<double, 6, 1>& v);

// Isochoric invariants and Jacobian of F: (I1_bar, I2_bar, J) with
// C = F^T F, I1_bar = J^(-2/3) tr C, I2_bar = J^(-4/3) (tr(C)^2 - tr(C^2))/2.
Eigen::Vector3d isochoric_invariants(const Eigen::Matrix3d& F);

// Canonical one-line text form, e.g. "UC 2 -0.25 20" or
// "BC 0 1 -0.25 -0.125 20" or "SS 0.5 20" or "TC -0.1 -0.2 -0.3 20 ext".
std::string path_to_string(const DeformationPath& p);
DeformationPath path_from_string(const std::string& s);

// The fixed catalog of training paths (K = 14): six paths to the corner of
// the admissible range (3 UC, 3 BC at (-0.25, -0.25)), one simple shear to
// 0.5, and seven interior UC/BC endpoints on a documented grid.
std::vector<DeformationPath> training_paths(int steps);

// Seven held-out paths inside the standard ranges, off the training grid:
// two uniaxial, two biaxial, one shear, two triaxial.
std::vector<DeformationPath> interpolation_test_paths(int steps);

// Random UC / BC / TC paths with every lambda uniform in [-0.3, 0]
// (extended range); used by the extrapolation test split.
std::vector<DeformationPath> sample_extrapolation_paths(int count, int steps, Rng& rng);

}  // namespace tn
