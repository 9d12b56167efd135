#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstdint>
#include <vector>

#include "trussnet/beam_model.hpp"
#include "trussnet/deformation_paths.hpp"
#include "trussnet/truss_design.hpp"

namespace tn {

inline constexpr double kDefaultRelativeDensity = 0.025;

// Uniform strut radius giving the requested solid volume fraction for the
// unit cell (volume 1); node-overlap volume is ignored.
double strut_radius(const UnitCellMesh& mesh, double relative_density);

struct SolverConfig {
  int max_iterations = 50;
  int max_backtracks = 20;
  // Converged when the reduced residual 2-norm is at or below
  // max(residual_rel_tol * E_s * A, residual_abs_tol).
  double residual_rel_tol = 1e-10;
  double residual_abs_tol = 1e-12;
  // Deterministic escape from singular tangents at bifurcation points.
  double perturbation = 1e-8;
  std::uint64_t perturbation_seed = 0x5eedu;
};

// Nodal solution for one applied average deformation gradient. Dofs are
// stored for every mesh node, 6 per node: the periodic fluctuation (slaves
// mirror their masters exactly) followed by the total rotation vector. The
// full displacement of node n is (F - I) X_n + fluctuation_n, so the
// periodic constraint u_slave - u_master = (F - I) shift holds identically.
struct CellState {
  Eigen::Matrix3d deformation = Eigen::Matrix3d::Identity();
  Eigen::VectorXd dofs;
  bool converged = false;
  bool perturbed = false;    // bifurcation perturbation fired
  bool regularized = false;  // tangent needed diagonal regularization
  int iterations = 0;
  double residual = 0.0;
  double energy = 0.0;  // total stored energy; equals density for V = 1
};

struct HomogenizedPoint {
  int step = 0;
  Eigen::Matrix3d deformation = Eigen::Matrix3d::Identity();
  double energy_density = 0.0;
  Eigen::Matrix3d nominal_stress = Eigen::Matrix3d::Zero();  // first Piola-Kirchhoff
  Eigen::Matrix3d second_pk = Eigen::Matrix3d::Zero();       // sym(F^-1 P)
  bool converged = false;
};

// Periodic equilibrium of one unit cell of corotational beams under an
// applied average deformation gradient. Boundary pairs are eliminated
// master-slave; one interior translation is pinned to fix the fluctuation
// null space. The nominal stress comes from the constraint reactions:
// P = sum over pairs of (reaction on slave) outer (lattice shift).
class Homogenizer {
 public:
  Homogenizer(UnitCellMesh mesh, BeamMaterial material = {},
              double relative_density = kDefaultRelativeDensity, SolverConfig config = {});

  const UnitCellMesh& mesh() const { return mesh_; }
  const BeamMaterial& material() const { return material_; }
  double radius() const { return radius_; }
  int reduced_dof_count() const { return reduced_count_; }
  double residual_tolerance() const;

  // Total displacement of a node in the given state.
  Eigen::Vector3d node_displacement(const CellState& state, int node) const;

  // Damped Newton from the prior state (zero state when absent). Never
  // throws on non-convergence; the returned state carries the flag.
  CellState solve_step(const Eigen::Matrix3d& deformation,
                       const CellState* prior = nullptr) const;

  // W, P and S at a converged state; throws SolverError otherwise.
  HomogenizedPoint effective_response(const CellState& state) const;

  // Steps t = 1..T with warm starts. A non-converged step is emitted with
  // its flag cleared and ends the series; divergence on the first step
  // throws SolverError.
  std::vector<HomogenizedPoint> run_path(const DeformationPath& path) const;

 private:
  Eigen::VectorXd reduce(const Eigen::VectorXd& full) const;
  Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const;
  // Energy; optionally accumulates the weighted force on every nodal dof
  // and the reduced tangent triplets. Throws SolverError only from
  // degenerate element kinematics (rotations near pi).
  double assemble(const Eigen::Matrix3d& deformation, const Eigen::VectorXd& full,
                  Eigen::VectorXd* full_force,
                  std::vector<Eigen::Triplet<double>>* triplets) const;
  HomogenizedPoint measure(const CellState& state) const;

  UnitCellMesh mesh_;
  BeamMaterial material_;
  SolverConfig config_;
  double radius_ = 0.0;
  std::vector<BeamElement> elements_;
  std::vector<int> dof_map_;  // 6 per node -> reduced index, -1 fixed
  int reduced_count_ = 0;
  int pin_node_ = 0;
};

}  // namespace tn
