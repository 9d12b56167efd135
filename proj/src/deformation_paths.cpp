#include "trussnet/deformation_paths.hpp"

#include <Eigen/LU>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "trussnet/errors.hpp"

namespace tn {

namespace {

const char* family_token(PathFamily f) {
  switch (f) {
    case PathFamily::kUniaxial: return "UC";
    case PathFamily::kBiaxial: return "BC";
    case PathFamily::kSimpleShear: return "SS";
    case PathFamily::kTriaxial: return "TC";
  }
  throw ValidationError("unknown path family");
}

void check_compressive(double lambda, bool extended, const char* what) {
  double lo = extended ? -0.3 : -0.25;
  if (!(lambda >= lo && lambda <= 0.0))
    throw ValidationError(std::string(what) + " loading parameter outside [" +
                          std::to_string(lo) + ", 0]");
}

}  // namespace

void validate_path(const DeformationPath& p) {
  if (p.steps < 1) throw ValidationError("path must have at least one step");
  switch (p.family) {
    case PathFamily::kUniaxial:
      if (p.axes[0] < 0 || p.axes[0] > 2) throw ValidationError("uniaxial axis out of range");
      check_compressive(p.lambda[0], p.extended_range, "uniaxial");
      break;
    case PathFamily::kBiaxial:
      if (p.axes[0] < 0 || p.axes[1] > 2 || p.axes[0] >= p.axes[1])
        throw ValidationError("biaxial axes must satisfy 0 <= a < b <= 2");
      check_compressive(p.lambda[0], p.extended_range, "biaxial");
      check_compressive(p.lambda[1], p.extended_range, "biaxial");
      break;
    case PathFamily::kSimpleShear:
      if (!(p.lambda[0] >= 0.0 && p.lambda[0] <= 0.5))
        throw ValidationError("shear loading parameter outside [0, 0.5]");
      break;
    case PathFamily::kTriaxial:
      for (int k = 0; k < 3; ++k) check_compressive(p.lambda[k], p.extended_range, "triaxial");
      break;
  }
}

Eigen::Matrix3d path_increment(const DeformationPath& p, int t) {
  if (t < 0 || t > p.steps) throw ValidationError("path step index out of range");
  Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
  switch (p.family) {
    case PathFamily::kUniaxial:
      M(p.axes[0], p.axes[0]) = p.lambda[0];
      break;
    case PathFamily::kBiaxial:
      M(p.axes[0], p.axes[0]) = p.lambda[0];
      M(p.axes[1], p.axes[1]) = p.lambda[1];
      break;
    case PathFamily::kSimpleShear:
      M(0, 1) = p.lambda[0];
      break;
    case PathFamily::kTriaxial:
      for (int k = 0; k < 3; ++k) M(k, k) = p.lambda[k];
      break;
  }
  return (double(t) / double(p.steps)) * M;
}

Eigen::Matrix3d path_F(const DeformationPath& p, int t) {
  return Eigen::Matrix3d::Identity() + path_increment(p, t);
}

Eigen::Matrix3d green_lagrange(const Eigen::Matrix3d& F) {
  return 0.5 * (F.transpose() * F - Eigen::Matrix3d::Identity());
}

Eigen::Matrix<double, 6, 1> sym_to_vec(const Eigen::Matrix3d& m) {
  Eigen::Matrix<double, 6, 1> v;
  v << m(0, 0), m(1, 1), m(2, 2), m(1, 2), m(0, 2), m(0, 1);
  return v;
}

Eigen::Matrix3d vec_to_sym(const Eigen::Matrix<double, 6, 1>& v) {
  Eigen::Matrix3d m;
  m << v[0], v[5], v[4],
       v[5], v[1], v[3],
       v[4], v[3], v[2];
  return m;
}

Eigen::Vector3d isochoric_invariants(const Eigen::Matrix3d& F) {
  Eigen::Matrix3d C = F.transpose() * F;
  double J = F.determinant();
  if (J <= 0.0) throw ValidationError("deformation gradient has non-positive determinant");
  double trC = C.trace();
  double trC2 = (C * C).trace();
  double i1 = std::pow(J, -2.0 / 3.0) * trC;
  double i2 = std::pow(J, -4.0 / 3.0) * 0.5 * (trC * trC - trC2);
  return {i1, i2, J};
}

std::string path_to_string(const DeformationPath& p) {
  char buf[64];
  std::ostringstream os;
  os << family_token(p.family);
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    os << ' ' << buf;
  };
  switch (p.family) {
    case PathFamily::kUniaxial:
      os << ' ' << p.axes[0];
      put(p.lambda[0]);
      break;
    case PathFamily::kBiaxial:
      os << ' ' << p.axes[0] << ' ' << p.axes[1];
      put(p.lambda[0]);
      put(p.lambda[1]);
      break;
    case PathFamily::kSimpleShear:
      put(p.lambda[0]);
      break;
    case PathFamily::kTriaxial:
      put(p.lambda[0]);
      put(p.lambda[1]);
      put(p.lambda[2]);
      break;
  }
  os << ' ' << p.steps;
  if (p.extended_range) os << " ext";
  return os.str();
}

DeformationPath path_from_string(const std::string& s) {
  std::istringstream is(s);
  std::string tok;
  if (!(is >> tok)) throw ValidationError("empty path descriptor");
  DeformationPath p;
  auto read_int = [&](int& out) {
    if (!(is >> out)) throw ValidationError("malformed path descriptor: " + s);
  };
  auto read_double = [&](double& out) {
    if (!(is >> out)) throw ValidationError("malformed path descriptor: " + s);
  };
  if (tok == "UC") {
    p.family = PathFamily::kUniaxial;
    read_int(p.axes[0]);
    read_double(p.lambda[0]);
  } else if (tok == "BC") {
    p.family = PathFamily::kBiaxial;
    read_int(p.axes[0]);
    read_int(p.axes[1]);
    read_double(p.lambda[0]);
    read_double(p.lambda[1]);
  } else if (tok == "SS") {
    p.family = PathFamily::kSimpleShear;
    read_double(p.lambda[0]);
  } else if (tok == "TC") {
    p.family = PathFamily::kTriaxial;
    read_double(p.lambda[0]);
    read_double(p.lambda[1]);
    read_double(p.lambda[2]);
  } else {
    throw ValidationError("unknown path family token: " + tok);
  }
  read_int(p.steps);
  if (is >> tok) {
    if (tok != "ext") throw ValidationError("unexpected trailing token in path descriptor: " + s);
    p.extended_range = true;
  }
  validate_path(p);
  return p;
}

namespace {

DeformationPath uc(int axis, double l, int steps) {
  DeformationPath p;
  p.family = PathFamily::kUniaxial;
  p.axes = {axis, 0};
  p.lambda = {l, 0.0, 0.0};
  p.steps = steps;
  return p;
}

DeformationPath bc(int a, int b, double l1, double l2, int steps) {
  DeformationPath p;
  p.family = PathFamily::kBiaxial;
  p.axes = {a, b};
  p.lambda = {l1, l2, 0.0};
  p.steps = steps;
  return p;
}

DeformationPath ss(double l, int steps) {
  DeformationPath p;
  p.family = PathFamily::kSimpleShear;
  p.lambda = {l, 0.0, 0.0};
  p.steps = steps;
  return p;
}

DeformationPath tc(double l1, double l2, double l3, int steps, bool ext = false) {
  DeformationPath p;
  p.family = PathFamily::kTriaxial;
  p.lambda = {l1, l2, l3};
  p.steps = steps;
  p.extended_range = ext;
  return p;
}

}  // namespace

std::vector<DeformationPath> training_paths(int steps) {
  // Corner paths cover the full range on every axis pairing; the interior
  // grid (multiples of 1/16) varies the endpoint so proportional loading
  // magnitudes are not confounded with direction.
  return {
      uc(0, -0.25, steps),
      uc(1, -0.25, steps),
      uc(2, -0.25, steps),
      bc(0, 1, -0.25, -0.25, steps),
      bc(0, 2, -0.25, -0.25, steps),
      bc(1, 2, -0.25, -0.25, steps),
      ss(0.5, steps),
      uc(0, -0.125, steps),
      uc(1, -0.1875, steps),
      uc(2, -0.0625, steps),
      bc(0, 1, -0.125, -0.1875, steps),
      bc(0, 2, -0.1875, -0.0625, steps),
      bc(1, 2, -0.25, -0.125, steps),
      bc(0, 1, -0.0625, -0.25, steps),
  };
}

std::vector<DeformationPath> interpolation_test_paths(int steps) {
  return {
      uc(2, -0.22, steps),
      uc(0, -0.09, steps),
      bc(0, 1, -0.21, -0.07, steps),
      bc(1, 2, -0.14, -0.23, steps),
      ss(0.37, steps),
      tc(-0.2, -0.1, -0.15, steps),
      tc(-0.05, -0.22, -0.11, steps),
  };
}

std::vector<DeformationPath> sample_extrapolation_paths(int count, int steps, Rng& rng) {
  std::vector<DeformationPath> out;
  out.reserve(count);
  const std::array<std::pair<int, int>, 3> pairs = {{{0, 1}, {0, 2}, {1, 2}}};
  for (int i = 0; i < count; ++i) {
    DeformationPath p;
    p.steps = steps;
    p.extended_range = true;
    switch (rng.below(3)) {
      case 0:
        p.family = PathFamily::kUniaxial;
        p.axes = {int(rng.below(3)), 0};
        p.lambda = {rng.uniform(-0.3, 0.0), 0.0, 0.0};
        break;
      case 1: {
        p.family = PathFamily::kBiaxial;
        auto [a, b] = pairs[rng.below(3)];
        p.axes = {a, b};
        p.lambda = {rng.uniform(-0.3, 0.0), rng.uniform(-0.3, 0.0), 0.0};
        break;
      }
      default:
        p.family = PathFamily::kTriaxial;
        p.lambda = {rng.uniform(-0.3, 0.0), rng.uniform(-0.3, 0.0), rng.uniform(-0.3, 0.0)};
        break;
    }
    validate_path(p);
    out.push_back(p);
  }
  return out;
}

}  // namespace tn
