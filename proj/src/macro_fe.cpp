#include "trussnet/macro_fe.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>

#include "trussnet/errors.hpp"
#include "trussnet/rng.hpp"

namespace tn {

namespace {

void check_solver(const MacroSolverConfig& config) {
  if (config.max_iterations < 1 || config.max_backtracks < 0)
    throw ValidationError("solver iteration limits out of range");
  if (!(config.residual_rel_tol > 0.0) || !(config.force_floor_rel > 0.0) ||
      !(config.perturbation >= 0.0))
    throw ValidationError("solver tolerances out of range");
}

void warn_travel_guard(double travel, double side) {
  if (std::abs(travel) > kPrescribedTravelGuard * side)
    std::fprintf(stderr,
                 "warning: prescribed travel %g exceeds %g of the box side %g; "
                 "outside the sampled kinematic range\n",
                 travel, kPrescribedTravelGuard, side);
}

// Internal force, energy and (optionally) the tangent of the Tet4 body.
// Triplet indices go through dof_map when given (prescribed dofs dropped),
// raw otherwise; the force vector is always full-size.
double continuum_pass(const MacroMesh& mesh, const ConstitutiveModel& model,
                      const Eigen::VectorXd& u, bool want_energy, Eigen::VectorXd* force,
                      const std::vector<int>* dof_map,
                      std::vector<Eigen::Triplet<double>>* triplets) {
  if (force) force->setZero(u.size());
  if (triplets) {
    triplets->clear();
    triplets->reserve(mesh.elements.size() * 144);
  }
  double energy = 0.0;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& tet = mesh.elements[e];
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    for (int a = 0; a < 4; ++a) h += u.segment<3>(3 * tet.nodes[a]) * tet.grad.row(a);
    const Eigen::Matrix3d f = Eigen::Matrix3d::Identity() + h;
    if (!(f.determinant() > 0.0)) {
      std::ostringstream msg;
      msg << "element " << e << " inverted (det F <= 0)";
      throw SolverError(msg.str());
    }
    const Eigen::Matrix3d strain = 0.5 * (f.transpose() * f - Eigen::Matrix3d::Identity());

    Eigen::Matrix3d s;
    Matrix6d c6;
    if (triplets) {
      MaterialTangent mt = model.tangent(strain);
      s = mt.stress;
      c6 = mt.modulus;
    } else {
      s = model.stress(strain);
    }
    if (want_energy) energy += tet.volume * model.energy(strain);
    if (!force && !triplets) continue;

    // Rows pair S and doubled shear strain increments, so B maps nodal
    // velocity to the engineering strain rate and f = V B^T S6 equals the
    // exact P : dF/du contraction.
    Eigen::Matrix<double, 6, 12> b;
    for (int a = 0; a < 4; ++a) {
      const Eigen::RowVector3d g = tet.grad.row(a);
      for (int k = 0; k < 3; ++k) {
        const int col = 3 * a + k;
        b(0, col) = f(k, 0) * g(0);
        b(1, col) = f(k, 1) * g(1);
        b(2, col) = f(k, 2) * g(2);
        b(3, col) = f(k, 1) * g(2) + f(k, 2) * g(1);
        b(4, col) = f(k, 0) * g(2) + f(k, 2) * g(0);
        b(5, col) = f(k, 0) * g(1) + f(k, 1) * g(0);
      }
    }
    Vector6d s6;
    s6 << s(0, 0), s(1, 1), s(2, 2), s(1, 2), s(0, 2), s(0, 1);

    if (force) {
      const Eigen::Matrix<double, 12, 1> fe = tet.volume * (b.transpose() * s6);
      for (int a = 0; a < 4; ++a) force->segment<3>(3 * tet.nodes[a]) += fe.segment<3>(3 * a);
    }
    if (triplets) {
      Eigen::Matrix<double, 12, 12> ke = tet.volume * (b.transpose() * c6 * b);
      for (int a = 0; a < 4; ++a)
        for (int c = 0; c < 4; ++c) {
          const double gsg =
              tet.volume * (tet.grad.row(a) * s * tet.grad.row(c).transpose()).value();
          for (int i = 0; i < 3; ++i) ke(3 * a + i, 3 * c + i) += gsg;
        }
      for (int i = 0; i < 12; ++i) {
        const int fi = 3 * tet.nodes[i / 3] + i % 3;
        const int gi = dof_map ? (*dof_map)[fi] : fi;
        if (gi < 0) continue;
        for (int j = 0; j < 12; ++j) {
          const int fj = 3 * tet.nodes[j / 3] + j % 3;
          const int gj = dof_map ? (*dof_map)[fj] : fj;
          if (gj >= 0) triplets->emplace_back(gi, gj, ke(i, j));
        }
      }
    }
  }
  return energy;
}

// Weighted beam assembly on plain displacement + rotation dofs (6 per node).
double lattice_pass(const std::vector<BeamElement>& elements,
                    const std::vector<UnitCellMesh::Beam>& beams, const BeamMaterial& material,
                    const Eigen::VectorXd& full, Eigen::VectorXd* force,
                    const std::vector<int>* dof_map, std::vector<Eigen::Triplet<double>>* trips) {
  if (force) force->setZero(full.size());
  if (trips) {
    trips->clear();
    trips->reserve(elements.size() * 144);
  }
  double energy = 0.0;
  Vector12d q, f;
  Matrix12d k;
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const auto& beam = beams[e];
    const double w = beam.weight;
    const int base[2] = {6 * beam.a, 6 * beam.b};
    q.segment<6>(0) = full.segment<6>(base[0]);
    q.segment<6>(6) = full.segment<6>(base[1]);
    if (trips) {
      energy += w * beam_force_tangent(elements[e], material, q, f, k);
      for (int i = 0; i < 12; ++i) {
        const int gi = (*dof_map)[base[i / 6] + i % 6];
        if (gi < 0) continue;
        for (int j = 0; j < 12; ++j) {
          const int gj = (*dof_map)[base[j / 6] + j % 6];
          if (gj >= 0) trips->emplace_back(gi, gj, w * k(i, j));
        }
      }
    } else if (force) {
      energy += w * beam_force(elements[e], material, q, f);
    } else {
      energy += w * beam_energy(elements[e], material, q);
      continue;
    }
    if (force)
      for (int i = 0; i < 12; ++i) (*force)[base[i / 6] + i % 6] += w * f[i];
  }
  return energy;
}

struct EquilibriumOutcome {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  bool regularized = false;
  bool perturbed = false;
  std::vector<double> residual_history;
};

using PassFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*,
                                    std::vector<Eigen::Triplet<double>>*)>;

// Damped Newton on the free dofs; prescribed entries of `full` are held
// fixed. On convergence `converged_force` holds the assembly at the final
// iterate, so reactions can be read off the prescribed dofs.
EquilibriumOutcome equilibrate(const PassFn& pass, const std::vector<int>& dof_map,
                               int reduced_count, const std::vector<int>& load_dofs,
                               double force_floor, const MacroSolverConfig& config,
                               double perturb_scale, Eigen::VectorXd& full,
                               Eigen::VectorXd& converged_force) {
  EquilibriumOutcome out;
  auto reduce = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd r(reduced_count);
    for (std::size_t d = 0; d < dof_map.size(); ++d)
      if (dof_map[d] >= 0) r[dof_map[d]] = v[d];
    return r;
  };
  auto expand = [&](const Eigen::VectorXd& r) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dof_map.size()));
    for (std::size_t d = 0; d < dof_map.size(); ++d)
      if (dof_map[d] >= 0) v[d] = r[dof_map[d]];
    return v;
  };
  auto load_norm = [&](const Eigen::VectorXd& f) {
    double s = 0.0;
    for (int d : load_dofs) s += f[d] * f[d];
    return std::sqrt(s);
  };
  Rng noise(config.perturbation_seed);
  auto perturb = [&] {
    for (std::size_t d = 0; d < dof_map.size(); ++d)
      if (dof_map[d] >= 0) full[d] += perturb_scale * noise.uniform(-1.0, 1.0);
    out.perturbed = true;
  };

  const double huge_val = std::numeric_limits<double>::infinity();
  Eigen::VectorXd force;
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::SparseMatrix<double> stiffness(reduced_count, reduced_count);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;

  for (int it = 0;; ++it) {
    try {
      pass(full, &force, &trips);
    } catch (const SolverError&) {
      // Invalid kinematics at the iterate; a perturbation is the only way out.
      if (out.perturbed) break;
      perturb();
      --it;
      continue;
    }
    Eigen::VectorXd residual = reduce(force);
    const double rnorm = residual.norm();
    if (!std::isfinite(rnorm)) {
      if (out.perturbed) break;
      perturb();
      --it;
      continue;
    }
    out.iterations = it;
    out.residual = rnorm;
    out.residual_history.push_back(rnorm);
    if (rnorm <= config.residual_rel_tol * std::max(load_norm(force), force_floor)) {
      out.converged = true;
      converged_force = force;
      break;
    }
    if (it >= config.max_iterations) break;

    stiffness.setFromTriplets(trips.begin(), trips.end());
    Eigen::VectorXd step;
    bool solved = false;
    if (!out.regularized) {
      ldlt.compute(stiffness);
      if (ldlt.info() == Eigen::Success) {
        // A structurally singular tangent can slip through factorization as
        // a near-zero pivot; catch it by pivot ratio, not just non-finite.
        Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
        if (pivots.minCoeff() > 1e-12 * pivots.maxCoeff()) {
          step = ldlt.solve(-residual);
          solved = step.allFinite();
        }
      }
    }
    if (!solved) {
      // Zero-energy modes (free strut spin, pivoting columns) make the
      // tangent singular; a small diagonal shift leaves them untouched
      // since they carry no residual.
      out.regularized = true;
      double scale = 0.0;
      for (int i = 0; i < reduced_count; ++i)
        scale = std::max(scale, std::abs(stiffness.coeff(i, i)));
      if (scale == 0.0) scale = 1.0;
      Eigen::SparseMatrix<double> shifted = stiffness;
      for (int i = 0; i < reduced_count; ++i) shifted.coeffRef(i, i) += 1e-8 * scale;
      ldlt.compute(shifted);
      if (ldlt.info() == Eigen::Success) {
        step = ldlt.solve(-residual);
        solved = step.allFinite();
      }
    }
    if (!solved) {
      if (out.perturbed) break;
      perturb();
      continue;
    }

    const Eigen::VectorXd full_step = expand(step);
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= config.max_backtracks; ++bt) {
      Eigen::VectorXd trial = full + alpha * full_step;
      double trial_norm = huge_val;
      try {
        pass(trial, &force, nullptr);
        trial_norm = reduce(force).norm();
      } catch (const SolverError&) {
        trial_norm = huge_val;
      }
      if (std::isfinite(trial_norm) && trial_norm < rnorm) {
        full = std::move(trial);
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (out.perturbed) break;
      perturb();
    }
  }
  return out;
}

int count_out_of_range(const MacroMesh& mesh, const Eigen::VectorXd& u) {
  int count = 0;
  for (const auto& tet : mesh.elements) {
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    for (int a = 0; a < 4; ++a) h += u.segment<3>(3 * tet.nodes[a]) * tet.grad.row(a);
    const Eigen::Matrix3d f = Eigen::Matrix3d::Identity() + h;
    const Eigen::Matrix3d strain = 0.5 * (f.transpose() * f - Eigen::Matrix3d::Identity());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(strain, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < kSampledStrainLo - 1e-12 ||
        eig.eigenvalues().maxCoeff() > kSampledStrainHi + 1e-12)
      ++count;
  }
  return count;
}

std::string divergence_note(int step, const EquilibriumOutcome& out) {
  std::ostringstream msg;
  msg << "step " << step << " did not converge (residual " << out.residual << " after "
      << out.iterations << " iterations)";
  return msg.str();
}

}  // namespace

MacroMesh build_mesh(std::vector<Eigen::Vector3d> nodes,
                     const std::vector<std::array<int, 4>>& tets, double side) {
  if (!(side > 0.0)) throw ValidationError("mesh side must be positive");
  if (nodes.empty() || tets.empty()) throw ValidationError("mesh needs nodes and elements");
  MacroMesh mesh;
  mesh.side = side;
  mesh.nodes = std::move(nodes);
  const int n = static_cast<int>(mesh.nodes.size());
  mesh.elements.reserve(tets.size());
  for (std::size_t e = 0; e < tets.size(); ++e) {
    MacroMesh::Tet tet;
    tet.nodes = tets[e];
    for (int a = 0; a < 4; ++a)
      if (tet.nodes[a] < 0 || tet.nodes[a] >= n)
        throw ValidationError("element node index out of range");
    Eigen::Matrix3d d;
    for (int c = 0; c < 3; ++c)
      d.col(c) = mesh.nodes[tet.nodes[c + 1]] - mesh.nodes[tet.nodes[0]];
    const double det = d.determinant();
    if (!(det > 0.0)) {
      std::ostringstream msg;
      msg << "element " << e << " has non-positive volume " << det / 6.0;
      throw ValidationError(msg.str());
    }
    tet.volume = det / 6.0;
    const Eigen::Matrix3d dinv = d.inverse();
    for (int a = 1; a < 4; ++a) tet.grad.row(a) = dinv.row(a - 1);
    tet.grad.row(0) = -(tet.grad.row(1) + tet.grad.row(2) + tet.grad.row(3));
    mesh.elements.push_back(tet);
  }
  return mesh;
}

MacroMesh structured_cube_mesh(double side, int divisions) {
  if (divisions < 1) throw ValidationError("mesh divisions must be >= 1");
  if (!(side > 0.0)) throw ValidationError("mesh side must be positive");
  const int d = divisions;
  const int stride = d + 1;
  std::vector<Eigen::Vector3d> nodes;
  nodes.reserve(static_cast<std::size_t>(stride) * stride * stride);
  for (int k = 0; k <= d; ++k)
    for (int j = 0; j <= d; ++j)
      for (int i = 0; i <= d; ++i)
        nodes.emplace_back(side * (i / static_cast<double>(d)), side * (j / static_cast<double>(d)),
                           side * (k / static_cast<double>(d)));
  auto id = [&](int i, int j, int k) { return i + stride * (j + stride * k); };
  // Six positively oriented tets around the (0,0,0)-(1,1,1) hex diagonal;
  // every shared hex face is cut along the same diagonal, so the structured
  // mesh is conforming. Local corner m sits at ((m)&1, (m>>1)&1, (m>>2)&1).
  static constexpr int kSplit[6][4] = {{0, 1, 3, 7}, {0, 5, 1, 7}, {0, 3, 2, 7},
                                       {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 6, 4, 7}};
  std::vector<std::array<int, 4>> tets;
  tets.reserve(static_cast<std::size_t>(6) * d * d * d);
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) {
        int c[8];
        for (int m = 0; m < 8; ++m) c[m] = id(i + (m & 1), j + ((m >> 1) & 1), k + ((m >> 2) & 1));
        for (const auto& t : kSplit) tets.push_back({c[t[0]], c[t[1]], c[t[2]], c[t[3]]});
      }
  return build_mesh(std::move(nodes), tets, side);
}

void validate_problem(const MacroProblem& problem) {
  if (problem.mesh.nodes.empty() || problem.mesh.elements.empty())
    throw ValidationError("macro mesh is empty");
  if (!(problem.mesh.side > 0.0)) throw ValidationError("mesh side must be positive");
  if (!(problem.youngs_modulus > 0.0))
    throw ValidationError("base Young's modulus must be positive");
  if (problem.steps < 1) throw ValidationError("load step count must be >= 1");
  check_solver(problem.solver);

  const double side = problem.mesh.side;
  const double tol = 1e-9 * side;
  Eigen::Vector3d lo = problem.mesh.nodes.front(), hi = lo;
  for (const auto& x : problem.mesh.nodes) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  double volume = 0.0;
  for (const auto& tet : problem.mesh.elements) volume += tet.volume;
  if (lo.cwiseAbs().maxCoeff() > tol || (hi.array() - side).abs().maxCoeff() > tol)
    throw ValidationError("mesh does not span the declared box");
  if (std::abs(volume - side * side * side) > 1e-9 * side * side * side)
    throw ValidationError("mesh volume does not fill the declared box");
}

Assembly assemble(const MacroMesh& mesh, const ConstitutiveModel& model,
                  const Eigen::VectorXd& displacement, bool with_tangent) {
  const Eigen::Index size = 3 * static_cast<Eigen::Index>(mesh.nodes.size());
  if (displacement.size() != size)
    throw ValidationError("displacement vector needs 3 entries per mesh node");
  Assembly out;
  std::vector<Eigen::Triplet<double>> trips;
  out.energy = continuum_pass(mesh, model, displacement, true, &out.internal_force, nullptr,
                              with_tangent ? &trips : nullptr);
  out.tangent.resize(size, size);
  if (with_tangent) out.tangent.setFromTriplets(trips.begin(), trips.end());
  return out;
}

ResponseCurve solve(const MacroProblem& problem, const ConstitutiveModel& model) {
  validate_problem(problem);
  const MacroMesh& mesh = problem.mesh;
  const double side = mesh.side;
  const double face_tol = 1e-9 * side;
  const int n = static_cast<int>(mesh.nodes.size());

  std::vector<std::pair<int, double>> prescribed;
  std::vector<int> reaction_dofs;
  double top_travel = 0.0;
  if (problem.program == BoundaryProgram::kUniaxialTop) {
    top_travel = problem.final_displacement;
    for (int v = 0; v < n; ++v) {
      const double z = mesh.nodes[v].z();
      if (z < face_tol) {
        for (int c = 0; c < 3; ++c) prescribed.emplace_back(3 * v + c, 0.0);
      } else if (z > side - face_tol) {
        prescribed.emplace_back(3 * v + 2, problem.final_displacement);
        reaction_dofs.push_back(3 * v + 2);
      }
    }
  } else {
    const Eigen::Matrix3d affine = problem.affine_deformation - Eigen::Matrix3d::Identity();
    top_travel = affine(2, 2) * side;
    for (int v = 0; v < n; ++v) {
      const Eigen::Vector3d& x = mesh.nodes[v];
      bool boundary = false;
      for (int c = 0; c < 3; ++c) boundary = boundary || x[c] < face_tol || x[c] > side - face_tol;
      if (!boundary) continue;
      const Eigen::Vector3d u = affine * x;
      for (int c = 0; c < 3; ++c) prescribed.emplace_back(3 * v + c, u[c]);
      if (x.z() > side - face_tol) reaction_dofs.push_back(3 * v + 2);
    }
  }
  if (reaction_dofs.empty()) throw ValidationError("mesh has no nodes on the loaded face");

  double max_travel = 0.0;
  for (const auto& entry : prescribed) max_travel = std::max(max_travel, std::abs(entry.second));
  warn_travel_guard(max_travel, side);

  std::vector<int> dof_map(3 * n, 0);
  for (const auto& entry : prescribed) dof_map[entry.first] = -1;
  int reduced = 0;
  std::vector<int> load_dofs;
  for (int d = 0; d < 3 * n; ++d) {
    if (dof_map[d] < 0)
      load_dofs.push_back(d);
    else
      dof_map[d] = reduced++;
  }

  const PassFn pass = [&](const Eigen::VectorXd& u, Eigen::VectorXd* force,
                          std::vector<Eigen::Triplet<double>>* trips) {
    return continuum_pass(mesh, model, u, false, force, &dof_map, trips);
  };

  ResponseCurve curve;
  curve.points.push_back({});
  Eigen::VectorXd full = Eigen::VectorXd::Zero(3 * n);
  Eigen::VectorXd converged_force;
  const double floor = problem.solver.force_floor_rel * side * side;
  for (int t = 1; t <= problem.steps; ++t) {
    const double scale = static_cast<double>(t) / problem.steps;
    for (const auto& [d, v] : prescribed) full[d] = scale * v;
    EquilibriumOutcome out =
        equilibrate(pass, dof_map, reduced, load_dofs, floor, problem.solver,
                    problem.solver.perturbation * side, full, converged_force);
    curve.newton_residuals_last_step = std::move(out.residual_history);
    if (!out.converged) {
      curve.complete = false;
      curve.diagnostic = divergence_note(t, out);
      break;
    }
    double raw = 0.0;
    for (int d : reaction_dofs) raw += converged_force[d];
    ResponsePoint pt;
    pt.step = t;
    pt.displacement = scale * top_travel;
    pt.u_over_l = pt.displacement / side;
    pt.force = problem.youngs_modulus * raw;
    pt.force_normalized = raw / (side * side);
    curve.points.push_back(pt);
    curve.out_of_range_points += count_out_of_range(mesh, full);
    curve.final_state = full;
  }
  return curve;
}

UnitCellMesh tiled_lattice(const UnitCellMesh& cell, int n) {
  if (n < 1) throw ValidationError("tiling count must be >= 1");
  if (cell.nodes.empty() || cell.beams.empty()) throw ValidationError("unit cell mesh is empty");
  UnitCellMesh out;
  std::map<std::array<long long, 3>, int> node_ids;
  auto key = [](const Eigen::Vector3d& x) {
    return std::array<long long, 3>{std::llround(x.x() / kDedupeTol),
                                    std::llround(x.y() / kDedupeTol),
                                    std::llround(x.z() / kDedupeTol)};
  };
  std::map<std::pair<int, int>, int> beam_ids;
  std::vector<int> local(cell.nodes.size());
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Eigen::Vector3d offset(i, j, k);
        for (std::size_t v = 0; v < cell.nodes.size(); ++v) {
          const Eigen::Vector3d x = cell.nodes[v] + offset;
          auto [it, fresh] = node_ids.try_emplace(key(x), static_cast<int>(out.nodes.size()));
          if (fresh) out.nodes.push_back(x);
          local[v] = it->second;
        }
        for (const auto& beam : cell.beams) {
          const int a = local[beam.a], b = local[beam.b];
          if (a == b) throw ValidationError("tiling collapsed a strut");
          const std::pair<int, int> bk{std::min(a, b), std::max(a, b)};
          auto [it, fresh] = beam_ids.try_emplace(bk, static_cast<int>(out.beams.size()));
          if (fresh) {
            UnitCellMesh::Beam merged;
            merged.a = bk.first;
            merged.b = bk.second;
            merged.radius = beam.radius;
            merged.weight = beam.weight;
            out.beams.push_back(merged);
          } else {
            out.beams[it->second].weight += beam.weight;
          }
        }
      }
  return out;
}

ResponseCurve fully_resolved(const FullyResolvedProblem& problem) {
  if (problem.tiling < 1) throw ValidationError("tiling count must be >= 1");
  if (problem.subdivisions < 1) throw ValidationError("strut subdivision must be >= 1");
  if (problem.steps < 1) throw ValidationError("load step count must be >= 1");
  if (!(problem.side > 0.0)) throw ValidationError("sample side must be positive");
  if (!(problem.relative_density > 0.0)) throw ValidationError("relative density must be positive");
  problem.material.check();
  check_solver(problem.solver);
  const ValidationReport report = validate(problem.design);
  if (!report.valid) throw ValidationError("invalid design: " + report.violations.front());

  UnitCellMesh cell = tessellate(problem.design);
  const double cell_radius = strut_radius(cell, problem.relative_density);
  if (problem.subdivisions > 1) cell = subdivided(cell, problem.subdivisions);
  UnitCellMesh lattice = tiled_lattice(cell, problem.tiling);

  const int n = static_cast<int>(lattice.nodes.size());
  const double h = problem.side / problem.tiling;
  const double radius = cell_radius * h;
  std::vector<BeamElement> elements;
  elements.reserve(lattice.beams.size());
  for (auto& beam : lattice.beams) {
    beam.radius = radius;
    elements.push_back(
        BeamElement::create(h * lattice.nodes[beam.a], h * lattice.nodes[beam.b], radius));
  }

  // Face membership decided in cell units where the planes sit at exact
  // integers. Translations only; rotations stay free on both faces.
  const double top = static_cast<double>(problem.tiling);
  std::vector<std::pair<int, double>> prescribed;
  std::vector<int> reaction_dofs;
  int support_nodes = 0;
  for (int v = 0; v < n; ++v) {
    const double z = lattice.nodes[v].z();
    if (z < 1e-9) {
      for (int c = 0; c < 3; ++c) prescribed.emplace_back(6 * v + c, 0.0);
      ++support_nodes;
    } else if (z > top - 1e-9) {
      prescribed.emplace_back(6 * v + 2, problem.final_displacement);
      reaction_dofs.push_back(6 * v + 2);
    }
  }
  if (support_nodes == 0) throw ValidationError("lattice has no nodes on the support face");
  if (reaction_dofs.empty()) throw ValidationError("lattice has no nodes on the loaded face");
  warn_travel_guard(problem.final_displacement, problem.side);

  std::vector<int> dof_map(6 * n, 0);
  for (const auto& entry : prescribed) dof_map[entry.first] = -1;
  int reduced = 0;
  std::vector<int> load_dofs;
  for (int d = 0; d < 6 * n; ++d) {
    if (dof_map[d] < 0)
      load_dofs.push_back(d);
    else
      dof_map[d] = reduced++;
  }

  const PassFn pass = [&](const Eigen::VectorXd& full, Eigen::VectorXd* force,
                          std::vector<Eigen::Triplet<double>>* trips) {
    return lattice_pass(elements, lattice.beams, problem.material, full, force, &dof_map, trips);
  };

  ResponseCurve curve;
  curve.points.push_back({});
  Eigen::VectorXd full = Eigen::VectorXd::Zero(6 * n);
  Eigen::VectorXd converged_force;
  const double area = problem.side * problem.side;
  const double floor = problem.solver.force_floor_rel * problem.material.youngs_modulus * area;
  for (int t = 1; t <= problem.steps; ++t) {
    const double scale = static_cast<double>(t) / problem.steps;
    for (const auto& [d, v] : prescribed) full[d] = scale * v;
    EquilibriumOutcome out =
        equilibrate(pass, dof_map, reduced, load_dofs, floor, problem.solver,
                    problem.solver.perturbation * problem.side, full, converged_force);
    curve.newton_residuals_last_step = std::move(out.residual_history);
    if (!out.converged) {
      curve.complete = false;
      curve.diagnostic = divergence_note(t, out);
      break;
    }
    double raw = 0.0;
    for (int d : reaction_dofs) raw += converged_force[d];
    ResponsePoint pt;
    pt.step = t;
    pt.displacement = scale * problem.final_displacement;
    pt.u_over_l = pt.displacement / problem.side;
    pt.force = raw;
    pt.force_normalized = raw / (problem.material.youngs_modulus * area);
    curve.points.push_back(pt);
    curve.final_state = full;
  }
  return curve;
}

double compare_curves(const ResponseCurve& reference, const ResponseCurve& test) {
  const auto& rp = reference.points;
  const auto& tp = test.points;
  if (rp.empty() || tp.empty()) throw ValidationError("cannot compare empty curves");

  bool identical = rp.size() == tp.size();
  for (std::size_t i = 0; identical && i < rp.size(); ++i)
    identical = rp[i].displacement == tp[i].displacement && rp[i].force == tp[i].force;
  if (identical) return 0.0;

  std::vector<std::pair<double, double>> samples;
  samples.reserve(tp.size());
  for (const auto& p : tp) samples.emplace_back(p.displacement, p.force);
  std::sort(samples.begin(), samples.end());
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (samples[i].first == samples[i - 1].first)
      throw ValidationError("test curve is not single-valued in displacement");
  if (samples.size() < 2) throw ValidationError("test curve has too few points to resample");

  const double lo = samples.front().first, hi = samples.back().first;
  const double eps = 1e-12 * std::max({std::abs(lo), std::abs(hi), 1.0});
  double sse = 0.0, fmin = 0.0, fmax = 0.0;
  int count = 0;
  for (const auto& p : rp) {
    const double u = p.displacement;
    if (u < lo - eps || u > hi + eps) continue;
    const double uc = std::clamp(u, lo, hi);
    auto upper = std::upper_bound(samples.begin(), samples.end(), std::make_pair(uc, 0.0),
                                  [](const auto& a, const auto& b) { return a.first < b.first; });
    if (upper == samples.begin()) ++upper;
    if (upper == samples.end()) --upper;
    const auto& b = *upper;
    const auto& a = *(upper - 1);
    const double frac = (uc - a.first) / (b.first - a.first);
    const double interp = a.second + frac * (b.second - a.second);
    const double err = interp - p.force;
    sse += err * err;
    fmin = count == 0 ? p.force : std::min(fmin, p.force);
    fmax = count == 0 ? p.force : std::max(fmax, p.force);
    ++count;
  }
  if (count == 0) throw ValidationError("curve displacement ranges do not overlap");
  const double rmse = std::sqrt(sse / count);
  if (rmse == 0.0) return 0.0;
  if (!(fmax > fmin)) throw ValidationError("reference force range is zero");
  return rmse / (fmax - fmin);
}

void write_curve_csv(std::ostream& os, const ResponseCurve& curve) {
  os.precision(17);
  os << "step,u,u_over_L,force,force_normalized\n";
  for (const auto& p : curve.points)
    os << p.step << ',' << p.displacement << ',' << p.u_over_l << ',' << p.force << ','
       << p.force_normalized << '\n';
}

}  // namespace tn
