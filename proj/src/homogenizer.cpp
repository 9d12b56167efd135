#include "trussnet/homogenizer.hpp"

#include <Eigen/LU>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "trussnet/errors.hpp"
#include "trussnet/rng.hpp"

namespace tn {

double strut_radius(const UnitCellMesh& mesh, double relative_density) {
  if (!(relative_density >= 0.0))
    throw ValidationError("relative density must be non-negative");
  double total = mesh.weighted_length();
  if (!(total > 0.0)) throw ValidationError("mesh has zero total strut length");
  return std::sqrt(relative_density / (M_PI * total));
}

Homogenizer::Homogenizer(UnitCellMesh mesh, BeamMaterial material, double relative_density,
                         SolverConfig config)
    : mesh_(std::move(mesh)), material_(material), config_(config) {
  material_.check();
  if (mesh_.beams.empty()) throw ValidationError("mesh has no beams");
  if (!(relative_density > 0.0)) throw ValidationError("relative density must be positive");
  radius_ = strut_radius(mesh_, relative_density);

  const int n = static_cast<int>(mesh_.nodes.size());
  std::vector<char> is_slave(n, 0);
  for (const auto& bp : mesh_.boundary_pairs) {
    is_slave[bp.slave] = 1;
    if (bp.slave == bp.master) throw ValidationError("boundary pair maps a node to itself");
  }
  for (const auto& bp : mesh_.boundary_pairs)
    if (is_slave[bp.master]) throw ValidationError("boundary pair master is itself a slave");

  pin_node_ = 0;
  while (pin_node_ < n && is_slave[pin_node_]) ++pin_node_;
  if (pin_node_ == n) throw ValidationError("mesh has no master node to pin");

  dof_map_.assign(6 * n, -1);
  int idx = 0;
  for (int node = 0; node < n; ++node) {
    if (is_slave[node]) continue;
    for (int c = 0; c < 6; ++c) {
      if (node == pin_node_ && c < 3) continue;  // pin translations kill the null space
      dof_map_[6 * node + c] = idx++;
    }
  }
  reduced_count_ = idx;
  for (const auto& bp : mesh_.boundary_pairs)
    for (int c = 0; c < 6; ++c) dof_map_[6 * bp.slave + c] = dof_map_[6 * bp.master + c];

  elements_.reserve(mesh_.beams.size());
  for (auto& beam : mesh_.beams) {
    beam.radius = radius_;
    elements_.push_back(BeamElement::create(mesh_.nodes[beam.a], mesh_.nodes[beam.b], radius_));
  }
}

double Homogenizer::residual_tolerance() const {
  double area = M_PI * radius_ * radius_;
  return std::max(config_.residual_rel_tol * material_.youngs_modulus * area,
                  config_.residual_abs_tol);
}

Eigen::Vector3d Homogenizer::node_displacement(const CellState& state, int node) const {
  return (state.deformation - Eigen::Matrix3d::Identity()) * mesh_.nodes[node] +
         state.dofs.segment<3>(6 * node);
}

Eigen::VectorXd Homogenizer::reduce(const Eigen::VectorXd& full) const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(reduced_count_);
  for (int d = 0; d < full.size(); ++d)
    if (dof_map_[d] >= 0) r[dof_map_[d]] += full[d];
  return r;
}

Eigen::VectorXd Homogenizer::expand(const Eigen::VectorXd& reduced) const {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<int>(dof_map_.size()));
  for (int d = 0; d < full.size(); ++d)
    if (dof_map_[d] >= 0) full[d] = reduced[dof_map_[d]];
  return full;
}

double Homogenizer::assemble(const Eigen::Matrix3d& deformation, const Eigen::VectorXd& full,
                             Eigen::VectorXd* full_force,
                             std::vector<Eigen::Triplet<double>>* triplets) const {
  const Eigen::Matrix3d affine = deformation - Eigen::Matrix3d::Identity();
  if (full_force) full_force->setZero(full.size());
  if (triplets) {
    triplets->clear();
    triplets->reserve(elements_.size() * 144);
  }

  double energy = 0.0;
  Vector12d q, f;
  Matrix12d k;
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const auto& beam = mesh_.beams[e];
    const double w = beam.weight;
    const int base[2] = {6 * beam.a, 6 * beam.b};
    for (int end = 0; end < 2; ++end) {
      const int node = end == 0 ? beam.a : beam.b;
      q.segment<3>(6 * end) = affine * mesh_.nodes[node] + full.segment<3>(base[end]);
      q.segment<3>(6 * end + 3) = full.segment<3>(base[end] + 3);
    }

    if (triplets) {
      energy += w * beam_force_tangent(elements_[e], material_, q, f, k);
      for (int i = 0; i < 12; ++i) {
        const int gi = dof_map_[base[i / 6] + i % 6];
        if (gi < 0) continue;
        for (int j = 0; j < 12; ++j) {
          const int gj = dof_map_[base[j / 6] + j % 6];
          if (gj >= 0) triplets->emplace_back(gi, gj, w * k(i, j));
        }
      }
    } else if (full_force) {
      energy += w * beam_force(elements_[e], material_, q, f);
    } else {
      energy += w * beam_energy(elements_[e], material_, q);
      continue;
    }
    for (int i = 0; i < 12; ++i) (*full_force)[base[i / 6] + i % 6] += w * f[i];
  }
  return energy;
}

CellState Homogenizer::solve_step(const Eigen::Matrix3d& deformation,
                                  const CellState* prior) const {
  CellState state;
  state.deformation = deformation;
  if (prior && prior->dofs.size() == static_cast<Eigen::Index>(dof_map_.size()))
    state.dofs = prior->dofs;
  else
    state.dofs = Eigen::VectorXd::Zero(static_cast<int>(dof_map_.size()));

  const double tol = residual_tolerance();
  const double huge = std::numeric_limits<double>::infinity();
  Rng noise(config_.perturbation_seed);
  auto perturb = [&](Eigen::VectorXd& x) {
    Eigen::VectorXd dr(reduced_count_);
    for (int i = 0; i < reduced_count_; ++i)
      dr[i] = config_.perturbation * noise.uniform(-1.0, 1.0);
    x += expand(dr);
    state.perturbed = true;
  };

  Eigen::VectorXd full_force;
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::SparseMatrix<double> stiffness(reduced_count_, reduced_count_);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;

  for (int it = 0;; ++it) {
    double energy;
    try {
      energy = assemble(deformation, state.dofs, &full_force, &trips);
    } catch (const SolverError&) {
      // Degenerate kinematics at the iterate; a perturbation is the only way out.
      if (state.perturbed) break;
      perturb(state.dofs);
      --it;
      continue;
    }
    Eigen::VectorXd residual = reduce(full_force);
    const double rnorm = residual.norm();
    if (!std::isfinite(rnorm)) {
      if (state.perturbed) break;
      perturb(state.dofs);
      --it;
      continue;
    }
    state.iterations = it;
    state.residual = rnorm;
    state.energy = energy;
    if (rnorm <= tol) {
      state.converged = true;
      break;
    }
    if (it >= config_.max_iterations) break;

    stiffness.setFromTriplets(trips.begin(), trips.end());
    Eigen::VectorXd step;
    bool solved = false;
    if (!state.regularized) {
      ldlt.compute(stiffness);
      if (ldlt.info() == Eigen::Success) {
        // A structurally singular tangent can slip through factorization as
        // a near-zero pivot and return a huge but finite step; catch it by
        // pivot ratio, not just non-finite values.
        Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
        if (pivots.minCoeff() > 1e-12 * pivots.maxCoeff()) {
          step = ldlt.solve(-residual);
          solved = step.allFinite();
        }
      }
    }
    if (!solved) {
      // Zero-energy modes (free strut spin) make the tangent structurally
      // singular; a small diagonal shift leaves such modes untouched since
      // they carry no residual.
      state.regularized = true;
      double scale = 0.0;
      for (int i = 0; i < reduced_count_; ++i) scale = std::max(scale, std::abs(stiffness.coeff(i, i)));
      if (scale == 0.0) scale = 1.0;
      Eigen::SparseMatrix<double> shifted = stiffness;
      for (int i = 0; i < reduced_count_; ++i) shifted.coeffRef(i, i) += 1e-8 * scale;
      ldlt.compute(shifted);
      if (ldlt.info() == Eigen::Success) {
        step = ldlt.solve(-residual);
        solved = step.allFinite();
      }
    }
    if (!solved) {
      if (state.perturbed) break;
      perturb(state.dofs);
      continue;
    }

    const Eigen::VectorXd full_step = expand(step);
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= config_.max_backtracks; ++bt) {
      Eigen::VectorXd trial = state.dofs + alpha * full_step;
      double trial_norm = huge;
      try {
        assemble(deformation, trial, &full_force, nullptr);
        trial_norm = reduce(full_force).norm();
      } catch (const SolverError&) {
        trial_norm = huge;
      }
      if (std::isfinite(trial_norm) && trial_norm < rnorm) {
        state.dofs = std::move(trial);
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (state.perturbed) break;
      perturb(state.dofs);
    }
  }
  return state;
}

HomogenizedPoint Homogenizer::measure(const CellState& state) const {
  Eigen::VectorXd full_force;
  HomogenizedPoint pt;
  pt.deformation = state.deformation;
  pt.converged = state.converged;
  pt.energy_density = assemble(state.deformation, state.dofs, &full_force, nullptr);
  // Constraint reactions on the slaves against their lattice shifts; the
  // pin carries no reaction at equilibrium since element forces sum to zero.
  Eigen::Matrix3d p = Eigen::Matrix3d::Zero();
  for (const auto& bp : mesh_.boundary_pairs)
    p += full_force.segment<3>(6 * bp.slave) * bp.shift.transpose();
  pt.nominal_stress = p;
  Eigen::Matrix3d fs = state.deformation.inverse() * p;
  pt.second_pk = 0.5 * (fs + fs.transpose());
  return pt;
}

HomogenizedPoint Homogenizer::effective_response(const CellState& state) const {
  if (!state.converged)
    throw SolverError("effective response requested for a non-converged state");
  return measure(state);
}

std::vector<HomogenizedPoint> Homogenizer::run_path(const DeformationPath& path) const {
  validate_path(path);
  std::vector<HomogenizedPoint> points;
  points.reserve(path.steps);
  CellState prior;
  bool warm = false;
  for (int t = 1; t <= path.steps; ++t) {
    CellState st = solve_step(path_F(path, t), warm ? &prior : nullptr);
    if (!st.converged && t == 1) {
      std::ostringstream msg;
      msg << "first load step diverged, residual " << st.residual << " after " << st.iterations
          << " iterations";
      throw SolverError(msg.str());
    }
    HomogenizedPoint pt = measure(st);
    pt.step = t;
    points.push_back(pt);
    if (!st.converged) break;  // flagged truncation, never filled
    prior = std::move(st);
    warm = true;
  }
  return points;
}

}  // namespace tn
