#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "trussnet/beam_model.hpp"
#include "trussnet/homogenizer.hpp"
#include "trussnet/icnn.hpp"
#include "trussnet/truss_design.hpp"

namespace tn {

// Principal Green-Lagrange strain band covered by the homogenization
// sampling: compressive stretch down to 0.75 and simple shear up to 0.5.
// Quadrature states outside the band are counted, never rejected; the
// constitutive surrogate extrapolates convexly.
inline constexpr double kSampledStrainLo = (0.75 * 0.75 - 1.0) / 2.0;
inline const double kSampledStrainHi = (0.25 + 0.5 * std::sqrt(4.25)) / 4.0;

// Prescribed boundary travel beyond this fraction of the box side leaves the
// sampled kinematic range and draws a stderr warning.
inline constexpr double kPrescribedTravelGuard = 0.25;

// Tetrahedral mesh with constant shape-function gradients per element.
// All element volumes are positive (enforced at build).
struct MacroMesh {
  struct Tet {
    std::array<int, 4> nodes{};
    Eigen::Matrix<double, 4, 3> grad = Eigen::Matrix<double, 4, 3>::Zero();  // rows = grad N_a
    double volume = 0.0;
  };
  std::vector<Eigen::Vector3d> nodes;  // reference coordinates, meters
  std::vector<Tet> elements;
  double side = 1.0;  // declared box edge, meters
};

// Computes gradients and volumes; throws ValidationError on inverted or
// degenerate elements and out-of-range node ids.
MacroMesh build_mesh(std::vector<Eigen::Vector3d> nodes,
                     const std::vector<std::array<int, 4>>& tets, double side);

// Structured grid of divisions^3 hexes, each split into six tets around the
// main diagonal so shared faces triangulate identically (conforming).
MacroMesh structured_cube_mesh(double side, int divisions);

struct MacroSolverConfig {
  int max_iterations = 30;
  int max_backtracks = 20;
  // Converged when the free-dof residual 2-norm is at or below
  // residual_rel_tol * max(norm of the prescribed-dof reactions,
  // force_floor_rel * E_s * L^2).
  double residual_rel_tol = 1e-8;
  double force_floor_rel = 1e-6;
  // Deterministic escape from singular tangents at bifurcation points;
  // displacement magnitude is perturbation * L.
  double perturbation = 1e-8;
  std::uint64_t perturbation_seed = 0x5eedu;
};

enum class BoundaryProgram {
  kUniaxialTop,     // bottom face fixed, top-face e3 travel prescribed, lateral free
  kAffineBoundary,  // u = (F - I) X on every boundary node (homogeneous-state probe)
};

struct MacroProblem {
  MacroMesh mesh;
  // Scales reported forces only; the material closure is evaluated in
  // base-modulus units (the homogenized data is generated at E_s = 1).
  double youngs_modulus = 1.0;
  int steps = 50;
  BoundaryProgram program = BoundaryProgram::kUniaxialTop;
  double final_displacement = 0.0;  // top-face e3 travel at the final step, meters
  Eigen::Matrix3d affine_deformation = Eigen::Matrix3d::Identity();  // kAffineBoundary endpoint
  MacroSolverConfig solver;
};

// Structural checks plus the kinematic-range warning; throws ValidationError.
void validate_problem(const MacroProblem& problem);

struct ResponsePoint {
  int step = 0;
  double displacement = 0.0;      // applied travel of the loaded face, meters
  double u_over_l = 0.0;          // displacement / L
  double force = 0.0;             // e3 reaction summed over the loaded face, newtons
  double force_normalized = 0.0;  // force / (E_s L^2)
};

struct ResponseCurve {
  std::vector<ResponsePoint> points;  // leading entry is the unloaded state (0, 0)
  bool complete = true;               // false when truncated by divergence
  std::string diagnostic;             // set when truncated
  int out_of_range_points = 0;  // element strain states outside the sampled band, summed over steps
  std::vector<double> newton_residuals_last_step;  // residual per iteration, last attempted step
  Eigen::VectorXd final_state;  // dofs of the last converged step (3 per node; 6 for lattices)
};

// Total-Lagrangian Tet4 internal force and consistent tangent with
// single-point quadrature; exact for the linear shape functions. Throws
// SolverError naming the element when det F <= 0 at its quadrature point.
struct Assembly {
  double energy = 0.0;
  Eigen::VectorXd internal_force;       // 3 dofs per node
  Eigen::SparseMatrix<double> tangent;  // symmetric, full dof space
};
Assembly assemble(const MacroMesh& mesh, const ConstitutiveModel& model,
                  const Eigen::VectorXd& displacement, bool with_tangent = true);

// Incremental loading with damped Newton; a diverged step truncates the
// curve and sets the diagnostic instead of throwing.
ResponseCurve solve(const MacroProblem& problem, const ConstitutiveModel& model);

// Literal n x n x n tiling of a periodic cell mesh, cell units. Coincident
// nodes merge; coincident struts merge by summing their periodicity weights,
// so interior interfaces carry full material and the sample equals n^3
// periodic cells exactly (outer-face struts keep their fractional weight).
// The result has no boundary pairs: the sample is finite.
UnitCellMesh tiled_lattice(const UnitCellMesh& cell, int n);

struct FullyResolvedProblem {
  OctantGraph design;
  int tiling = 1;
  int subdivisions = 2;  // beam elements per strut; matches the homogenization default
  BeamMaterial material;
  double relative_density = kDefaultRelativeDensity;
  double side = 1.0;  // sample edge, meters
  int steps = 50;
  double final_displacement = 0.0;  // top-face e3 travel at the final step, meters
  MacroSolverConfig solver;
};

// Reference beam-lattice solution of the same boundary-value problem:
// bottom-node translations fixed, top-node e3 travel prescribed, rotations
// and lateral faces free. Reported in the same normalization as solve().
ResponseCurve fully_resolved(const FullyResolvedProblem& problem);

// NRMSE of the force channel: the test curve is linearly resampled onto the
// reference displacement grid restricted to the overlap, and the RMS error
// is normalized by the reference force range there. Identical curves give 0;
// disjoint displacement ranges throw ValidationError.
double compare_curves(const ResponseCurve& reference, const ResponseCurve& test);

// CSV: step,u,u_over_L,force,force_normalized (17 significant digits).
void write_curve_csv(std::ostream& os, const ResponseCurve& curve);

}  // namespace tn
