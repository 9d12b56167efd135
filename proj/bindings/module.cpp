// Python surface: design space, deformation paths, cell homogenization, the
// constitutive network, dataset files, and the command driver. Heavy loops
// (homogenizer paths, run_cli) release the GIL; nothing here calls back into
// python.
#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "trussnet/cli.hpp"
#include "trussnet/dataset.hpp"
#include "trussnet/deformation_paths.hpp"
#include "trussnet/errors.hpp"
#include "trussnet/homogenizer.hpp"
#include "trussnet/hypernet.hpp"
#include "trussnet/icnn.hpp"
#include "trussnet/metrics.hpp"
#include "trussnet/rng.hpp"
#include "trussnet/truss_design.hpp"

namespace py = pybind11;
using namespace tn;

namespace {

OctantGraph seed_by_name(const std::string& name) {
  for (const auto& [label, graph] : seed_cells())
    if (label == name) return graph;
  std::string known;
  for (const auto& [label, graph] : seed_cells()) known += " " + label;
  throw ValidationError("unknown seed cell " + name + "; available:" + known);
}

int run_cli_args(const std::vector<std::string>& args) {
  std::vector<std::string> full = {"trussnet"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& a : full) argv.push_back(a.c_str());
  return run_cli(int(argv.size()), argv.data());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Convex constitutive networks for periodic trusses";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);

  m.attr("ENCODED_LENGTH") = kEncodedLength;
  m.attr("FC_PARAM_COUNT") = kFcParamCount;
  m.attr("PASSTHROUGH_PARAM_COUNT") = kPassthroughParamCount;
  m.attr("GENERATED_PARAM_COUNT") = kGeneratedParamCount;
  m.attr("BIAS_COUNT") = kBiasCount;

  // Design space -----------------------------------------------------------
  py::class_<OctantGraph>(m, "OctantGraph")
      .def(py::init<>())
      .def("edge", &OctantGraph::edge, py::arg("i"), py::arg("j"))
      .def("set_edge", &OctantGraph::set_edge, py::arg("i"), py::arg("j"), py::arg("on"))
      .def("active", &OctantGraph::active, py::arg("i"))
      .def("set_active", &OctantGraph::set_active, py::arg("i"), py::arg("on"))
      .def("face_coord", &OctantGraph::face_coord, py::arg("f"))
      .def("set_face_coord", &OctantGraph::set_face_coord, py::arg("f"), py::arg("s"),
           py::arg("t"))
      .def("node_position", &OctantGraph::node_position, py::arg("i"))
      .def("edge_count", &OctantGraph::edge_count)
      .def("active_count", &OctantGraph::active_count)
      .def("edges", &OctantGraph::edges)
      .def_readwrite("lineage", &OctantGraph::lineage)
      .def(py::self == py::self)
      .def("__repr__", [](const OctantGraph& g) {
        std::ostringstream os;
        os << "OctantGraph(edges=" << g.edge_count() << ", active=" << g.active_count();
        if (!g.lineage.empty()) os << ", lineage='" << g.lineage << "'";
        os << ")";
        return os.str();
      });

  py::class_<ValidationReport>(m, "ValidationReport")
      .def_readonly("valid", &ValidationReport::valid)
      .def_readonly("violations", &ValidationReport::violations)
      .def("__bool__", [](const ValidationReport& r) { return r.valid; });

  m.def("encode", &encode, py::arg("graph"));
  m.def("decode", &decode, py::arg("feature"));
  m.def("validate", &validate, py::arg("graph"));
  m.def("seed_graph", &seed_by_name, py::arg("name"));
  m.def("seed_cells", [] { return seed_cells(); });

  py::class_<PerturbParams>(m, "PerturbParams")
      .def(py::init<>())
      .def_readwrite("p_add_edge", &PerturbParams::p_add_edge)
      .def_readwrite("p_remove_edge", &PerturbParams::p_remove_edge)
      .def_readwrite("p_move_face", &PerturbParams::p_move_face)
      .def_readwrite("max_ops", &PerturbParams::max_ops)
      .def_readwrite("coord_lo", &PerturbParams::coord_lo)
      .def_readwrite("coord_hi", &PerturbParams::coord_hi);

  m.def(
      "generate_designs",
      [](int n, const std::vector<OctantGraph>& seeds, const PerturbParams& params,
         std::uint64_t seed) {
        Rng rng(seed);
        return generate_designs(n, seeds, params, rng);
      },
      py::arg("n"), py::arg("seeds"), py::arg("params") = PerturbParams{}, py::arg("seed") = 0);
  m.def("save_designs", &save_designs, py::arg("path"), py::arg("designs"));
  m.def("load_designs", &load_designs, py::arg("path"));

  // Deformation paths ------------------------------------------------------
  py::enum_<PathFamily>(m, "PathFamily")
      .value("UNIAXIAL", PathFamily::kUniaxial)
      .value("BIAXIAL", PathFamily::kBiaxial)
      .value("SIMPLE_SHEAR", PathFamily::kSimpleShear)
      .value("TRIAXIAL", PathFamily::kTriaxial);

  py::class_<DeformationPath>(m, "DeformationPath")
      .def(py::init<>())
      .def_readwrite("family", &DeformationPath::family)
      .def_readwrite("axes", &DeformationPath::axes)
      .def_property(
          "lam", [](const DeformationPath& p) { return p.lambda; },
          [](DeformationPath& p, const std::array<double, 3>& v) { p.lambda = v; })
      .def_readwrite("steps", &DeformationPath::steps)
      .def_readwrite("extended_range", &DeformationPath::extended_range)
      .def(py::self == py::self)
      .def("__str__", &path_to_string)
      .def("__repr__",
           [](const DeformationPath& p) { return "DeformationPath('" + path_to_string(p) + "')"; });

  m.def("path_from_string", &path_from_string, py::arg("text"));
  m.def("validate_path", &validate_path, py::arg("path"));
  m.def("path_F", &path_F, py::arg("path"), py::arg("t"));
  m.def("path_increment", &path_increment, py::arg("path"), py::arg("t"));
  m.def("green_lagrange", &green_lagrange, py::arg("F"));
  m.def("sym_to_vec", &sym_to_vec, py::arg("m"));
  m.def("vec_to_sym", &vec_to_sym, py::arg("v"));
  m.def("isochoric_invariants", &isochoric_invariants, py::arg("F"));
  m.def("training_paths", &training_paths, py::arg("steps"));
  m.def("interpolation_test_paths", &interpolation_test_paths, py::arg("steps"));
  m.def(
      "sample_extrapolation_paths",
      [](int count, int steps, std::uint64_t seed) {
        Rng rng(seed);
        return sample_extrapolation_paths(count, steps, rng);
      },
      py::arg("count"), py::arg("steps"), py::arg("seed") = 0);

  // Cell homogenization ----------------------------------------------------
  py::class_<UnitCellMesh::Beam>(m, "Beam")
      .def_readonly("a", &UnitCellMesh::Beam::a)
      .def_readonly("b", &UnitCellMesh::Beam::b)
      .def_readonly("radius", &UnitCellMesh::Beam::radius)
      .def_readonly("weight", &UnitCellMesh::Beam::weight);

  py::class_<UnitCellMesh>(m, "UnitCellMesh")
      .def_readonly("nodes", &UnitCellMesh::nodes)
      .def_readonly("beams", &UnitCellMesh::beams)
      .def("weighted_length", &UnitCellMesh::weighted_length)
      .def("__repr__", [](const UnitCellMesh& mesh) {
        std::ostringstream os;
        os << "UnitCellMesh(nodes=" << mesh.nodes.size() << ", beams=" << mesh.beams.size()
           << ", boundary_pairs=" << mesh.boundary_pairs.size() << ")";
        return os.str();
      });

  m.def("tessellate", &tessellate, py::arg("graph"), py::arg("dedupe_tol") = kDedupeTol);
  m.def("subdivided", &subdivided, py::arg("mesh"), py::arg("pieces"));
  m.def("strut_radius", &strut_radius, py::arg("mesh"), py::arg("relative_density"));

  py::class_<BeamMaterial>(m, "BeamMaterial")
      .def(py::init<>())
      .def_readwrite("youngs_modulus", &BeamMaterial::youngs_modulus)
      .def_readwrite("poisson_ratio", &BeamMaterial::poisson_ratio);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("max_iterations", &SolverConfig::max_iterations)
      .def_readwrite("max_backtracks", &SolverConfig::max_backtracks)
      .def_readwrite("residual_rel_tol", &SolverConfig::residual_rel_tol)
      .def_readwrite("residual_abs_tol", &SolverConfig::residual_abs_tol);

  py::class_<HomogenizedPoint>(m, "HomogenizedPoint")
      .def_readonly("step", &HomogenizedPoint::step)
      .def_readonly("deformation", &HomogenizedPoint::deformation)
      .def_readonly("energy_density", &HomogenizedPoint::energy_density)
      .def_readonly("nominal_stress", &HomogenizedPoint::nominal_stress)
      .def_readonly("second_pk", &HomogenizedPoint::second_pk)
      .def_readonly("converged", &HomogenizedPoint::converged);

  py::class_<Homogenizer>(m, "Homogenizer")
      .def(py::init<UnitCellMesh, BeamMaterial, double, SolverConfig>(), py::arg("mesh"),
           py::arg("material") = BeamMaterial{},
           py::arg("relative_density") = kDefaultRelativeDensity,
           py::arg("config") = SolverConfig{})
      .def_property_readonly("radius", &Homogenizer::radius)
      .def_property_readonly("reduced_dof_count", &Homogenizer::reduced_dof_count)
      .def("run_path", &Homogenizer::run_path, py::arg("path"),
           py::call_guard<py::gil_scoped_release>());

  // Constitutive network ---------------------------------------------------
  py::class_<MaterialTangent>(m, "MaterialTangent")
      .def_readonly("stress", &MaterialTangent::stress)
      .def_readonly("modulus", &MaterialTangent::modulus);

  py::class_<ConstitutiveModel>(m, "ConstitutiveModel")
      .def("energy", &ConstitutiveModel::energy, py::arg("strain"))
      .def("stress", &ConstitutiveModel::stress, py::arg("strain"))
      .def("tangent", &ConstitutiveModel::tangent, py::arg("strain"))
      .def("energy_from_deformation", &ConstitutiveModel::energy_from_deformation, py::arg("F"))
      .def("pk1", &ConstitutiveModel::pk1, py::arg("F"));

  py::class_<Hypernet>(m, "Hypernet")
      .def(py::init<>())
      .def("init", &Hypernet::init, py::arg("seed"))
      .def_property_readonly("parameter_count", &Hypernet::parameter_count)
      .def("predict", &Hypernet::predict, py::arg("graph"))
      .def("save", &Hypernet::save, py::arg("path"))
      .def_static("load", [](const std::filesystem::path& p) { return Hypernet::load(p); },
                  py::arg("path"));

  // Dataset files ----------------------------------------------------------
  py::class_<SampleRecord>(m, "SampleRecord")
      .def_readonly("design", &SampleRecord::design)
      .def_readonly("path", &SampleRecord::path)
      .def_readonly("t", &SampleRecord::t)
      .def_readonly("F", &SampleRecord::F)
      .def_readonly("E", &SampleRecord::E)
      .def_readonly("S", &SampleRecord::S)
      .def_readonly("W", &SampleRecord::W)
      .def_property_readonly("converged", &SampleRecord::converged);

  py::class_<SplitSpec>(m, "SplitSpec")
      .def_readonly("name", &SplitSpec::name)
      .def_readonly("designs", &SplitSpec::designs)
      .def_readonly("paths", &SplitSpec::paths);

  py::class_<DatasetManifest>(m, "DatasetManifest")
      .def_readonly("paths", &DatasetManifest::paths)
      .def_readonly("splits", &DatasetManifest::splits);

  m.def("read_records", &read_records, py::arg("path"));
  m.def("load_manifest", &load_manifest, py::arg("path"));

  // Command driver ---------------------------------------------------------
  m.def("run_cli", &run_cli_args, py::arg("args"), py::call_guard<py::gil_scoped_release>(),
        "Runs one subcommand (gen, homogenize, train, eval, simulate, export) and "
        "returns its exit code.");
}
