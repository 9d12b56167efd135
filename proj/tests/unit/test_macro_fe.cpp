#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <string>

#include "trussnet/deformation_paths.hpp"
#include "trussnet/errors.hpp"
#include "trussnet/macro_fe.hpp"
#include "trussnet/rng.hpp"

using namespace tn;

namespace {

ConstitutiveModel random_model(std::uint64_t seed, double scale = 0.5) {
  Rng rng(seed);
  Eigen::VectorXd gen(kGeneratedParamCount), bias(kBiasCount);
  for (int i = 0; i < gen.size(); ++i) gen[i] = rng.uniform(-scale, scale);
  for (int i = 0; i < bias.size(); ++i) bias[i] = rng.uniform(-scale, scale);
  return ConstitutiveModel(IcnnWeights::from_parts(gen, bias));
}

Eigen::VectorXd affine_field(const MacroMesh& mesh, const Eigen::Matrix3d& deformation) {
  Eigen::VectorXd u(3 * static_cast<int>(mesh.nodes.size()));
  const Eigen::Matrix3d a = deformation - Eigen::Matrix3d::Identity();
  for (int v = 0; v < static_cast<int>(mesh.nodes.size()); ++v)
    u.segment<3>(3 * v) = a * mesh.nodes[v];
  return u;
}

// Two positively oriented tets sharing the face {1, 2, 3}.
MacroMesh two_element_mesh() {
  std::vector<Eigen::Vector3d> nodes = {{0.0, 0.0, 0.0},
                                        {1.0, 0.0, 0.0},
                                        {0.0, 1.0, 0.0},
                                        {0.0, 0.0, 1.0},
                                        {1.0, 1.0, 1.0}};
  return build_mesh(std::move(nodes), {{0, 1, 2, 3}, {1, 2, 3, 4}}, 1.0);
}

ResponseCurve curve_from(const std::vector<std::pair<double, double>>& pts) {
  ResponseCurve c;
  int step = 0;
  for (const auto& [u, f] : pts) {
    ResponsePoint p;
    p.step = step++;
    p.displacement = u;
    p.force = f;
    c.points.push_back(p);
  }
  return c;
}

const UnitCellMesh::Beam* beam_at(const UnitCellMesh& mesh, const Eigen::Vector3d& midpoint) {
  for (const auto& b : mesh.beams)
    if ((0.5 * (mesh.nodes[b.a] + mesh.nodes[b.b]) - midpoint).norm() < 1e-7) return &b;
  return nullptr;
}

}  // namespace

TEST_CASE("structured cube mesh is positively oriented, conforming in volume") {
  MacroMesh mesh = structured_cube_mesh(2.0, 3);
  CHECK(mesh.nodes.size() == 64);
  CHECK(mesh.elements.size() == 6 * 27);
  CHECK(mesh.side == 2.0);

  double volume = 0.0;
  for (const auto& tet : mesh.elements) {
    CHECK(tet.volume > 0.0);
    volume += tet.volume;
    // Partition of unity: shape gradients sum to zero.
    CHECK(tet.grad.colwise().sum().norm() <= 1e-12 * tet.grad.norm());
  }
  CHECK(volume == doctest::Approx(8.0).epsilon(1e-12));

  // Volume-weighted gradient sums vanish on interior nodes; this identity is
  // what makes homogeneous states equilibrate exactly.
  Eigen::VectorXd gsum = Eigen::VectorXd::Zero(3 * 64);
  double gmax = 0.0;
  for (const auto& tet : mesh.elements)
    for (int a = 0; a < 4; ++a) {
      gsum.segment<3>(3 * tet.nodes[a]) += tet.volume * tet.grad.row(a).transpose();
      gmax = std::max(gmax, tet.volume * tet.grad.row(a).norm());
    }
  int interior = 0;
  for (int v = 0; v < 64; ++v) {
    const Eigen::Vector3d& x = mesh.nodes[v];
    bool inside = true;
    for (int c = 0; c < 3; ++c) inside = inside && x[c] > 1e-9 && x[c] < 2.0 - 1e-9;
    if (!inside) continue;
    ++interior;
    CHECK(gsum.segment<3>(3 * v).norm() <= 1e-12 * gmax);
  }
  CHECK(interior == 8);

  CHECK_THROWS_AS(structured_cube_mesh(1.0, 0), ValidationError);
  CHECK_THROWS_AS(structured_cube_mesh(0.0, 2), ValidationError);
  // Swapping two vertices flips the orientation.
  std::vector<Eigen::Vector3d> nodes = {
      {0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
  CHECK_THROWS_AS(build_mesh(nodes, {{1, 0, 2, 3}}, 1.0), ValidationError);
  CHECK_THROWS_AS(build_mesh(nodes, {{0, 1, 2, 4}}, 1.0), ValidationError);
}

TEST_CASE("assembly is exactly zero at the reference state") {
  MacroMesh mesh = structured_cube_mesh(1.0, 2);
  ConstitutiveModel model = random_model(7);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(3 * static_cast<int>(mesh.nodes.size()));
  Assembly asm0 = assemble(mesh, model, u);
  CHECK(asm0.energy == 0.0);
  CHECK(asm0.internal_force.norm() == 0.0);
  CHECK(Eigen::MatrixXd(asm0.tangent).norm() > 0.0);  // reference modulus is live
  CHECK_THROWS_AS(assemble(mesh, model, Eigen::VectorXd::Zero(5)), ValidationError);
}

TEST_CASE("affine states are homogeneous: interior equilibrium, exact face reaction") {
  MacroMesh mesh = structured_cube_mesh(1.0, 2);
  ConstitutiveModel model = random_model(11);
  Eigen::Matrix3d f_bar = Eigen::Matrix3d::Identity();
  f_bar(0, 0) = 0.98;
  f_bar(1, 1) = 1.01;
  f_bar(2, 2) = 0.97;
  f_bar(0, 1) = 0.01;

  Assembly out = assemble(mesh, model, affine_field(mesh, f_bar));
  const int n = static_cast<int>(mesh.nodes.size());
  double fmax = 0.0;
  for (int v = 0; v < n; ++v) fmax = std::max(fmax, out.internal_force.segment<3>(3 * v).norm());
  REQUIRE(fmax > 0.0);

  Eigen::Vector3d total = Eigen::Vector3d::Zero();
  for (int v = 0; v < n; ++v) {
    const Eigen::Vector3d f = out.internal_force.segment<3>(3 * v);
    total += f;
    const Eigen::Vector3d& x = mesh.nodes[v];
    bool inside = true;
    for (int c = 0; c < 3; ++c) inside = inside && x[c] > 1e-9 && x[c] < 1.0 - 1e-9;
    if (inside) CHECK(f.norm() <= 1e-12 * fmax);
  }
  CHECK(total.norm() <= 1e-12 * fmax);

  // Constant P makes the loaded-face nodal sum equal P e3 times the face
  // area; the lateral strips cancel between opposite faces.
  double top = 0.0;
  for (int v = 0; v < n; ++v)
    if (mesh.nodes[v].z() > 1.0 - 1e-9) top += out.internal_force[3 * v + 2];
  const Eigen::Matrix3d p = f_bar * model.stress(green_lagrange(f_bar));
  CHECK(top == doctest::Approx(p(2, 2)).epsilon(1e-10));

  Eigen::MatrixXd k(out.tangent);
  CHECK((k - k.transpose()).norm() <= 1e-12 * k.norm());
}

TEST_CASE("force and tangent match finite differences on a two-element mesh") {
  MacroMesh mesh = two_element_mesh();
  ConstitutiveModel model = random_model(13);
  Rng rng(17);
  const int dofs = 3 * static_cast<int>(mesh.nodes.size());
  Eigen::VectorXd u(dofs);
  for (int i = 0; i < dofs; ++i) u[i] = rng.uniform(-0.05, 0.05);

  Assembly out = assemble(mesh, model, u);
  Eigen::MatrixXd k(out.tangent);
  const double h = 1e-6;

  for (int d = 0; d < dofs; ++d) {
    Eigen::VectorXd up = u, dn = u;
    up[d] += h;
    dn[d] -= h;
    const Eigen::VectorXd fd =
        (assemble(mesh, model, up, false).internal_force -
         assemble(mesh, model, dn, false).internal_force) /
        (2.0 * h);
    CHECK((k.col(d) - fd).norm() <= 1e-5 * (1.0 + fd.norm()));
  }

  for (int trial = 0; trial < 3; ++trial) {
    Eigen::VectorXd dir(dofs);
    for (int i = 0; i < dofs; ++i) dir[i] = rng.normal();
    dir.normalize();
    const double de = (assemble(mesh, model, u + h * dir, false).energy -
                       assemble(mesh, model, u - h * dir, false).energy) /
                      (2.0 * h);
    CHECK(out.internal_force.dot(dir) == doctest::Approx(de).epsilon(1e-6));
  }
}

TEST_CASE("element inversion is reported with the element id") {
  MacroMesh mesh = structured_cube_mesh(1.0, 1);
  ConstitutiveModel model = random_model(5);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(24);
  u[3 * 7 + 2] = -1.5;  // push corner (1,1,1) through the body
  try {
    assemble(mesh, model, u, false);
    FAIL("expected SolverError");
  } catch (const SolverError& err) {
    CHECK(std::string(err.what()).find("inverted") != std::string::npos);
    CHECK(std::string(err.what()).find("element") != std::string::npos);
  }
}

TEST_CASE("patch test: affine compression reproduces the material point") {
  MacroProblem problem;
  problem.mesh = structured_cube_mesh(1.0, 2);
  problem.steps = 3;
  problem.program = BoundaryProgram::kAffineBoundary;
  problem.affine_deformation = Eigen::Matrix3d::Identity();
  problem.affine_deformation(2, 2) = 0.97;
  problem.solver.residual_rel_tol = 1e-10;
  ConstitutiveModel model = random_model(23);

  ResponseCurve curve = solve(problem, model);
  REQUIRE(curve.complete);
  REQUIRE(curve.points.size() == 4);
  CHECK(curve.points.front().step == 0);
  CHECK(curve.points.front().displacement == 0.0);
  CHECK(curve.points.front().force == 0.0);

  for (int t = 1; t <= 3; ++t) {
    const double s = t / 3.0;
    Eigen::Matrix3d f_t = Eigen::Matrix3d::Identity();
    f_t(2, 2) = 1.0 + s * (0.97 - 1.0);
    const double expected = (f_t * model.stress(green_lagrange(f_t)))(2, 2);
    const auto& pt = curve.points[t];
    CHECK(pt.force == doctest::Approx(expected).epsilon(1e-8));
    CHECK(pt.displacement == doctest::Approx(s * -0.03).epsilon(1e-14));
    CHECK(pt.u_over_l == doctest::Approx(pt.displacement).epsilon(1e-14));
    CHECK(pt.force_normalized == doctest::Approx(pt.force).epsilon(1e-14));
  }

  // Global equilibrium at the final state: all nodal forces sum to zero.
  Assembly fin = assemble(problem.mesh, model, curve.final_state, false);
  Eigen::Vector3d total = Eigen::Vector3d::Zero();
  for (int v = 0; v < static_cast<int>(problem.mesh.nodes.size()); ++v)
    total += fin.internal_force.segment<3>(3 * v);
  CHECK(total.norm() <= 1e-10 * std::abs(curve.points.back().force));
}

TEST_CASE("newton converges quadratically near the solution") {
  MacroProblem problem;
  problem.mesh = structured_cube_mesh(1.0, 2);
  problem.steps = 1;
  problem.program = BoundaryProgram::kAffineBoundary;
  problem.affine_deformation = Eigen::Matrix3d::Identity();
  problem.affine_deformation(2, 2) = 0.97;
  problem.solver.residual_rel_tol = 1e-10;
  ConstitutiveModel model = random_model(29);

  ResponseCurve curve = solve(problem, model);
  REQUIRE(curve.complete);
  const auto& r = curve.newton_residuals_last_step;
  REQUIRE(r.size() >= 2);
  for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i] < r[i - 1]);
  for (std::size_t i = 0; i + 1 < r.size(); ++i)
    if (r[i] <= 1e-2 * r.front()) CHECK(r[i + 1] <= 0.1 * r[i]);
}

TEST_CASE("zero prescribed displacement yields the flat zero curve") {
  MacroProblem problem;
  problem.mesh = structured_cube_mesh(1.0, 2);
  problem.steps = 3;
  problem.final_displacement = 0.0;
  ConstitutiveModel model = random_model(31);

  ResponseCurve curve = solve(problem, model);
  REQUIRE(curve.complete);
  REQUIRE(curve.points.size() == 4);
  for (const auto& pt : curve.points) {
    CHECK(pt.displacement == 0.0);
    CHECK(pt.force == 0.0);
  }
  CHECK(curve.out_of_range_points == 0);
}

TEST_CASE("uniaxial compression: signed monotone response and global balance") {
  MacroProblem problem;
  problem.mesh = structured_cube_mesh(1.0, 2);
  problem.steps = 5;
  problem.final_displacement = -0.01;
  problem.youngs_modulus = 2.5;
  problem.solver.residual_rel_tol = 1e-10;
  ConstitutiveModel model = random_model(37);

  ResponseCurve curve = solve(problem, model);
  REQUIRE(curve.complete);
  REQUIRE(curve.points.size() == 6);
  for (int t = 1; t <= 5; ++t) {
    const auto& pt = curve.points[t];
    CHECK(pt.displacement == doctest::Approx(-0.01 * t / 5.0).epsilon(1e-14));
    CHECK(pt.force < 0.0);  // compression
    CHECK(std::abs(pt.force) > std::abs(curve.points[t - 1].force));
    CHECK(pt.force == doctest::Approx(2.5 * pt.force_normalized).epsilon(1e-14));
  }

  Assembly fin = assemble(problem.mesh, model, curve.final_state, false);
  const int n = static_cast<int>(problem.mesh.nodes.size());
  Eigen::Vector3d total = Eigen::Vector3d::Zero();
  double top = 0.0, bottom = 0.0;
  for (int v = 0; v < n; ++v) {
    total += fin.internal_force.segment<3>(3 * v);
    if (problem.mesh.nodes[v].z() > 1.0 - 1e-9) top += fin.internal_force[3 * v + 2];
    if (problem.mesh.nodes[v].z() < 1e-9) bottom += fin.internal_force[3 * v + 2];
  }
  const double scale = std::abs(top);
  REQUIRE(scale > 0.0);
  CHECK(total.norm() <= 1e-10 * scale);
  CHECK(top + bottom == doctest::Approx(0.0).epsilon(1e-10).scale(scale));
  CHECK(curve.points.back().force == doctest::Approx(2.5 * top).epsilon(1e-12));
}

TEST_CASE("normalized response is invariant under rescaling modulus and side") {
  ConstitutiveModel model = random_model(41);

  MacroProblem a;
  a.mesh = structured_cube_mesh(1.0, 2);
  a.steps = 3;
  a.final_displacement = -0.01;
  a.youngs_modulus = 1.0;

  MacroProblem b;
  b.mesh = structured_cube_mesh(0.5, 2);
  b.steps = 3;
  b.final_displacement = -0.005;
  b.youngs_modulus = 32.0;

  ResponseCurve ca = solve(a, model);
  ResponseCurve cb = solve(b, model);
  REQUIRE(ca.complete);
  REQUIRE(cb.complete);
  REQUIRE(ca.points.size() == cb.points.size());
  for (std::size_t i = 0; i < ca.points.size(); ++i) {
    CHECK(cb.points[i].u_over_l ==
          doctest::Approx(ca.points[i].u_over_l).epsilon(1e-13));
    CHECK(cb.points[i].force_normalized ==
          doctest::Approx(ca.points[i].force_normalized).epsilon(1e-13));
  }
}

TEST_CASE("solve validates the problem") {
  ConstitutiveModel model = random_model(3);
  MacroProblem problem;
  problem.mesh = two_element_mesh();  // does not fill its declared box
  CHECK_THROWS_AS(solve(problem, model), ValidationError);

  problem.mesh = structured_cube_mesh(1.0, 1);
  problem.steps = 0;
  CHECK_THROWS_AS(solve(problem, model), ValidationError);

  problem.steps = 1;
  problem.youngs_modulus = 0.0;
  CHECK_THROWS_AS(solve(problem, model), ValidationError);

  CHECK_THROWS_AS(solve(MacroProblem{}, model), ValidationError);
}

TEST_CASE("tiled lattice merges coincident struts by periodic weight") {
  UnitCellMesh cell = tessellate(seed_graph(SeedCell::kSimpleCubic));
  REQUIRE(cell.weighted_length() == doctest::Approx(3.0).epsilon(1e-12));
  REQUIRE(cell.nodes.size() == 20);
  REQUIRE(cell.beams.size() == 24);

  UnitCellMesh one = tiled_lattice(cell, 1);
  CHECK(one.nodes.size() == 20);
  CHECK(one.beams.size() == 24);
  CHECK(one.boundary_pairs.empty());
  for (const auto& b : one.beams) CHECK(b.weight == 0.25);
  CHECK(one.weighted_length() == doctest::Approx(3.0).epsilon(1e-12));

  UnitCellMesh two = tiled_lattice(cell, 2);
  CHECK(two.nodes.size() == 81);   // 27 grid corners + 54 edge midpoints
  CHECK(two.beams.size() == 108);  // 54 unit edges, two struts each
  CHECK(two.boundary_pairs.empty());
  CHECK(two.weighted_length() == doctest::Approx(8.0 * 3.0).epsilon(1e-12));

  const auto* core = beam_at(two, {1.0, 1.0, 0.25});  // shared by four cells
  REQUIRE(core != nullptr);
  CHECK(core->weight == doctest::Approx(1.0).epsilon(1e-15));
  const auto* face = beam_at(two, {1.0, 0.0, 0.25});  // shared by two cells
  REQUIRE(face != nullptr);
  CHECK(face->weight == doctest::Approx(0.5).epsilon(1e-15));
  const auto* rim = beam_at(two, {0.0, 0.0, 0.25});  // belongs to one cell
  REQUIRE(rim != nullptr);
  CHECK(rim->weight == doctest::Approx(0.25).epsilon(1e-15));

  CHECK_THROWS_AS(tiled_lattice(cell, 0), ValidationError);
  CHECK_THROWS_AS(tiled_lattice(UnitCellMesh{}, 1), ValidationError);
}

TEST_CASE("lattice sample under axial load matches the bar formula") {
  FullyResolvedProblem problem;
  problem.design = seed_graph(SeedCell::kSimpleCubic);
  problem.tiling = 1;
  problem.subdivisions = 1;
  problem.steps = 2;
  problem.final_displacement = -2e-4;
  problem.solver.residual_rel_tol = 1e-10;

  // Four corner columns of weight 1/4: the sample carries exactly one strut
  // area, so F = E A u for the rotation-free axial solution.
  const double radius = strut_radius(tessellate(problem.design), problem.relative_density);
  const double area = M_PI * radius * radius;

  ResponseCurve curve = fully_resolved(problem);
  REQUIRE(curve.complete);
  REQUIRE(curve.points.size() == 3);
  CHECK(curve.points.front().force == 0.0);
  for (int t = 1; t <= 2; ++t) {
    const double u = -2e-4 * t / 2.0;
    CHECK(curve.points[t].force == doctest::Approx(area * u).epsilon(1e-6));
    CHECK(curve.points[t].force_normalized ==
          doctest::Approx(curve.points[t].force).epsilon(1e-14));
  }

  problem.final_displacement = 2e-4;
  ResponseCurve tension = fully_resolved(problem);
  REQUIRE(tension.complete);
  CHECK(tension.points.back().force == doctest::Approx(area * 2e-4).epsilon(1e-6));

  // The simple-cubic lattice has no boundary layer under axial load, so the
  // normalized curve is tiling-independent.
  problem.final_displacement = -2e-4;
  problem.tiling = 2;
  ResponseCurve two = fully_resolved(problem);
  REQUIRE(two.complete);
  CHECK(two.points.back().force_normalized ==
        doctest::Approx(curve.points.back().force_normalized).epsilon(1e-9));
}

TEST_CASE("lattice sample edge cases") {
  FullyResolvedProblem problem;
  problem.design = seed_graph(SeedCell::kOctet);
  problem.tiling = 1;
  problem.steps = 2;
  problem.final_displacement = 0.0;

  ResponseCurve flat = fully_resolved(problem);
  REQUIRE(flat.complete);
  // Diagonal struts leave rounding-level frame noise; axis-aligned ones are exact.
  for (const auto& pt : flat.points) CHECK(std::abs(pt.force) <= 1e-15);

  problem.tiling = 0;
  CHECK_THROWS_AS(fully_resolved(problem), ValidationError);
  problem.tiling = 1;
  problem.design = OctantGraph();  // no struts; invalid
  CHECK_THROWS_AS(fully_resolved(problem), ValidationError);
}

TEST_CASE("curve comparison is an NRMSE on the shared displacement grid") {
  ResponseCurve ref = curve_from({{0.0, 0.0}, {-0.01, -1.0}, {-0.02, -2.0}, {-0.03, -3.0}, {-0.04, -4.0}});
  CHECK(compare_curves(ref, ref) == 0.0);

  ResponseCurve shifted = curve_from(
      {{0.0, 0.5}, {-0.01, -0.5}, {-0.02, -1.5}, {-0.03, -2.5}, {-0.04, -3.5}});
  CHECK(compare_curves(ref, shifted) == doctest::Approx(0.5 / 4.0).epsilon(1e-14));

  // Linear resampling is exact on a linear curve.
  ResponseCurve coarse = curve_from({{0.0, 0.0}, {-0.04, -4.0}});
  CHECK(compare_curves(ref, coarse) == 0.0);

  ResponseCurve far = curve_from({{1.0, 0.0}, {2.0, 1.0}});
  CHECK_THROWS_AS(compare_curves(ref, far), ValidationError);

  ResponseCurve flat_a = curve_from({{0.0, 0.0}, {-0.01, 0.0}, {-0.02, 0.0}});
  ResponseCurve flat_b = curve_from({{0.0, 1.0}, {-0.01, 1.0}, {-0.02, 1.0}});
  CHECK_THROWS_AS(compare_curves(flat_a, flat_b), ValidationError);

  ResponseCurve doubled = curve_from({{0.0, 0.0}, {0.0, 1.0}, {-0.02, 2.0}});
  CHECK_THROWS_AS(compare_curves(ref, doubled), ValidationError);
  CHECK_THROWS_AS(compare_curves(ResponseCurve{}, ref), ValidationError);
}

TEST_CASE("curve csv has the documented columns") {
  ResponseCurve curve = curve_from({{0.0, 0.0}, {-0.01, -1.25}});
  curve.points[1].u_over_l = -0.01;
  curve.points[1].force_normalized = -1.25;
  std::ostringstream os;
  write_curve_csv(os, curve);

  std::istringstream is(os.str());
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "step,u,u_over_L,force,force_normalized");
  REQUIRE(std::getline(is, line));
  CHECK(line.rfind("0,", 0) == 0);
  REQUIRE(std::getline(is, line));
  const auto comma = line.find(',');
  CHECK(line.substr(0, comma) == "1");
  CHECK(std::stod(line.substr(comma + 1)) == -0.01);
  CHECK(!std::getline(is, line));
}

TEST_CASE("strain excursions outside the sampled band are counted") {
  MacroProblem problem;
  problem.mesh = structured_cube_mesh(1.0, 1);
  problem.steps = 1;
  problem.program = BoundaryProgram::kAffineBoundary;
  problem.affine_deformation = Eigen::Matrix3d::Identity();
  problem.affine_deformation(2, 2) = 0.65;  // principal strain -0.289, below the band
  ConstitutiveModel model = random_model(43);

  ResponseCurve curve = solve(problem, model);
  REQUIRE(curve.complete);
  CHECK(curve.out_of_range_points == 6);
}
