#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

#include "trussnet/errors.hpp"
#include "trussnet/homogenizer.hpp"
#include "trussnet/rng.hpp"
#include "trussnet/truss_design.hpp"

using namespace tn;

namespace {

// One strut spanning the cell along x, already in quotient form: the far
// end is the periodic image of the near end.
UnitCellMesh single_strut_mesh() {
  UnitCellMesh mesh;
  mesh.nodes = {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
  mesh.beams.push_back({0, 1, 0.0, 1.0});
  mesh.boundary_pairs.push_back({1, 0, Eigen::Vector3d(1.0, 0.0, 0.0)});
  return mesh;
}

DeformationPath uniaxial(int axis, double lam, int steps) {
  DeformationPath p;
  p.family = PathFamily::kUniaxial;
  p.axes[0] = axis;
  p.lambda[0] = lam;
  p.steps = steps;
  return p;
}

double contract(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  return (a.array() * b.array()).sum();
}

}  // namespace

TEST_CASE("strut radius inverts the density relation") {
  UnitCellMesh mesh = single_strut_mesh();
  CHECK(mesh.weighted_length() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(strut_radius(mesh, 0.025) == doctest::Approx(std::sqrt(0.025 / M_PI)).epsilon(1e-15));
  CHECK(strut_radius(mesh, 0.0) == 0.0);

  // Doubling the strut length halves the area: r scales by 1/sqrt(2).
  UnitCellMesh doubled = mesh;
  doubled.nodes.push_back({0.0, 0.5, 0.0});
  doubled.nodes.push_back({1.0, 0.5, 0.0});
  doubled.beams.push_back({2, 3, 0.0, 1.0});
  doubled.boundary_pairs.push_back({3, 2, Eigen::Vector3d(1.0, 0.0, 0.0)});
  double r1 = strut_radius(mesh, 0.025);
  double r2 = strut_radius(doubled, 0.025);
  CHECK(r2 == doctest::Approx(r1 / std::sqrt(2.0)).epsilon(1e-14));

  UnitCellMesh empty;
  CHECK_THROWS_AS(strut_radius(empty, 0.025), ValidationError);
  CHECK_THROWS_AS(strut_radius(mesh, -0.1), ValidationError);
}

TEST_CASE("identity deformation converges with zero iterations") {
  Homogenizer homog(tessellate(seed_graph(SeedCell::kBodyCentered)));
  CellState st = homog.solve_step(Eigen::Matrix3d::Identity());
  CHECK(st.converged);
  CHECK(st.iterations == 0);
  CHECK_FALSE(st.perturbed);
  HomogenizedPoint pt = homog.effective_response(st);
  CHECK(std::abs(pt.energy_density) < 1e-20);
  CHECK(pt.nominal_stress.norm() < 1e-15);
  CHECK(pt.second_pk.norm() < 1e-15);
}

TEST_CASE("single strut cell reproduces the analytic bar response") {
  Homogenizer homog(single_strut_mesh());
  const double area = M_PI * homog.radius() * homog.radius();
  CHECK(area == doctest::Approx(0.025).epsilon(1e-14));
  const double ea = homog.material().youngs_modulus * area;

  for (double lam : {-1e-3, -5e-4, 2e-4, 1e-3}) {
    Eigen::Matrix3d f = Eigen::Matrix3d::Identity();
    f(0, 0) = 1.0 + lam;
    CellState st = homog.solve_step(f);
    CHECK(st.converged);
    CHECK(st.iterations <= 3);
    HomogenizedPoint pt = homog.effective_response(st);
    // The strut elongation equals lam exactly, so W and P are closed-form.
    CHECK(pt.energy_density == doctest::Approx(0.5 * ea * lam * lam).epsilon(1e-6));
    CHECK(pt.nominal_stress(0, 0) == doctest::Approx(ea * lam).epsilon(1e-6));
    Eigen::Matrix3d rest = pt.nominal_stress;
    rest(0, 0) = 0.0;
    CHECK(rest.norm() < 1e-12 * ea);
    CHECK(pt.second_pk(0, 0) == doctest::Approx(ea * lam / (1.0 + lam)).epsilon(1e-6));
  }
}

TEST_CASE("tilted strut converges through the regularized tangent") {
  Homogenizer homog(single_strut_mesh());
  const double area = M_PI * homog.radius() * homog.radius();
  const double ea = homog.material().youngs_modulus * area;

  // Transverse displacement of the far end rotates the strut; the spin
  // about its own axis is a zero-energy mode, so the tangent is singular.
  Eigen::Matrix3d f = Eigen::Matrix3d::Identity();
  f(1, 0) = 0.1;
  CellState st = homog.solve_step(f);
  CHECK(st.converged);
  CHECK(st.regularized);
  double delta = std::sqrt(1.01) - 1.0;
  HomogenizedPoint pt = homog.effective_response(st);
  // At equilibrium the local bending rotations vanish and only the axial
  // stretch of the tilted chord stores energy.
  CHECK(pt.energy_density == doctest::Approx(0.5 * ea * delta * delta).epsilon(1e-8));
}

TEST_CASE("rigid rotations store no energy") {
  Homogenizer homog(tessellate(seed_graph(SeedCell::kBodyCentered)));
  Rng rng(41);
  for (int trial = 0; trial < 4; ++trial) {
    Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    axis.normalize();
    double angle = rng.uniform(0.1, 0.5);
    Eigen::Matrix3d q = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    CellState st = homog.solve_step(q);
    CHECK(st.converged);
    HomogenizedPoint pt = homog.effective_response(st);
    CHECK(std::abs(pt.energy_density) <= 1e-10 * homog.material().youngs_modulus);
    CHECK(pt.second_pk.norm() <= 1e-10 * homog.material().youngs_modulus);
  }
}

TEST_CASE("reaction stress is the derivative of the stored energy") {
  Homogenizer homog(tessellate(seed_graph(SeedCell::kOctet)));
  DeformationPath path = uniaxial(0, -0.06, 8);
  std::vector<HomogenizedPoint> pts = homog.run_path(path);
  REQUIRE(pts.size() == 8);
  for (const auto& pt : pts) CHECK(pt.converged);

  // Central differences of W over steps against P : dF.
  for (std::size_t t = 1; t + 1 < pts.size(); ++t) {
    double dw = 0.5 * (pts[t + 1].energy_density - pts[t - 1].energy_density);
    Eigen::Matrix3d df = 0.5 * (pts[t + 1].deformation - pts[t - 1].deformation);
    double predicted = contract(pts[t].nominal_stress, df);
    CHECK(predicted == doctest::Approx(dw).epsilon(1e-3));
  }

  // Trapezoid integral of P : dF across the path matches the energy gain.
  double integral = 0.0;
  for (std::size_t t = 0; t + 1 < pts.size(); ++t) {
    Eigen::Matrix3d df = pts[t + 1].deformation - pts[t].deformation;
    integral += 0.5 * contract(pts[t].nominal_stress + pts[t + 1].nominal_stress, df);
  }
  double gain = pts.back().energy_density - pts.front().energy_density;
  CHECK(integral == doctest::Approx(gain).epsilon(0.01));

  // The stored S satisfies its defining symmetry to solver accuracy.
  for (const auto& pt : pts) {
    Eigen::Matrix3d fs = pt.deformation.inverse() * pt.nominal_stress;
    CHECK((fs - fs.transpose()).norm() <= 1e-8 * std::max(fs.norm(), 1e-12));
    CHECK((pt.second_pk - pt.second_pk.transpose()).norm() == 0.0);
  }
}

TEST_CASE("cubic cell loads along different axes identically") {
  Homogenizer homog(tessellate(seed_graph(SeedCell::kOctet)));
  std::array<double, 3> w{};
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<HomogenizedPoint> pts = homog.run_path(uniaxial(axis, -0.04, 4));
    REQUIRE(pts.size() == 4);
    CHECK(pts.back().converged);
    w[axis] = pts.back().energy_density;
  }
  CHECK(w[1] == doctest::Approx(w[0]).epsilon(1e-8));
  CHECK(w[2] == doctest::Approx(w[0]).epsilon(1e-8));
}

TEST_CASE("splitting struts in two barely changes the converged energy") {
  UnitCellMesh coarse = tessellate(seed_graph(SeedCell::kBodyCentered));
  UnitCellMesh fine = subdivided(coarse, 2);
  DeformationPath path = uniaxial(0, -0.05, 5);
  double w1 = Homogenizer(coarse).run_path(path).back().energy_density;
  double w2 = Homogenizer(fine).run_path(path).back().energy_density;
  CHECK(std::abs(w2 - w1) <= 0.005 * std::abs(w1));
}

TEST_CASE("zero amplitude path yields identical zero points") {
  Homogenizer homog(tessellate(seed_graph(SeedCell::kSimpleCubic)));
  std::vector<HomogenizedPoint> pts = homog.run_path(uniaxial(1, 0.0, 4));
  REQUIRE(pts.size() == 4);
  for (const auto& pt : pts) {
    CHECK(pt.converged);
    CHECK(pt.deformation == Eigen::Matrix3d::Identity());
    CHECK(pt.energy_density == 0.0);
    CHECK(pt.nominal_stress.norm() == 0.0);
  }
}

TEST_CASE("periodic constraint holds at convergence") {
  Homogenizer homog(tessellate(seed_graph(SeedCell::kBodyCentered)));
  Eigen::Matrix3d f;
  f << 0.97, 0.01, 0.0, 0.0, 1.01, 0.0, 0.0, 0.0, 0.99;
  CellState st = homog.solve_step(f);
  CHECK(st.converged);
  const Eigen::Matrix3d affine = f - Eigen::Matrix3d::Identity();
  for (const auto& bp : homog.mesh().boundary_pairs) {
    Eigen::Vector3d gap = homog.node_displacement(st, bp.slave) -
                          homog.node_displacement(st, bp.master) - affine * bp.shift;
    CHECK(gap.norm() < 1e-14);
    Eigen::Vector3d rot_gap =
        st.dofs.segment<3>(6 * bp.slave + 3) - st.dofs.segment<3>(6 * bp.master + 3);
    CHECK(rot_gap.norm() == 0.0);
  }
}

TEST_CASE("solves are deterministic") {
  Homogenizer homog(tessellate(seed_graph(SeedCell::kOctet)));
  Eigen::Matrix3d f = Eigen::Matrix3d::Identity();
  f(0, 0) = 0.95;
  f(1, 0) = 0.02;
  CellState a = homog.solve_step(f);
  CellState b = homog.solve_step(f);
  CHECK(a.converged);
  CHECK((a.dofs - b.dofs).norm() == 0.0);
  CHECK(a.energy == b.energy);
  CHECK(a.iterations == b.iterations);
  HomogenizedPoint pa = homog.effective_response(a);
  HomogenizedPoint pb = homog.effective_response(b);
  CHECK((pa.nominal_stress - pb.nominal_stress).norm() == 0.0);
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(Homogenizer(UnitCellMesh{}), ValidationError);
  Homogenizer homog(single_strut_mesh());
  CellState cold;
  cold.dofs = Eigen::VectorXd::Zero(12);
  CHECK_THROWS_AS(homog.effective_response(cold), SolverError);
  DeformationPath bad = uniaxial(0, 0.1, 4);  // tensile, outside the family range
  CHECK_THROWS_AS(homog.run_path(bad), ValidationError);
}
