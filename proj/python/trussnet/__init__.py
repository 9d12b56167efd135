"""Convex constitutive networks for periodic trusses.

Thin re-export of the compiled core: design generation, deformation paths,
cell homogenization, the constitutive network, dataset files, and the
command driver.
"""

try:
    from . import _core
except ImportError:  # in-tree runs put the extension on sys.path instead
    import _core

__all__ = [
    "BIAS_COUNT",
    "ENCODED_LENGTH",
    "FC_PARAM_COUNT",
    "GENERATED_PARAM_COUNT",
    "PASSTHROUGH_PARAM_COUNT",
    "Beam",
    "BeamMaterial",
    "ConstitutiveModel",
    "DatasetManifest",
    "DeformationPath",
    "HomogenizedPoint",
    "Homogenizer",
    "Hypernet",
    "IoError",
    "MaterialTangent",
    "OctantGraph",
    "PathFamily",
    "PerturbParams",
    "SampleRecord",
    "SolverConfig",
    "SolverError",
    "SplitSpec",
    "UnitCellMesh",
    "ValidationError",
    "ValidationReport",
    "decode",
    "encode",
    "generate_designs",
    "green_lagrange",
    "interpolation_test_paths",
    "isochoric_invariants",
    "load_designs",
    "load_manifest",
    "path_F",
    "path_from_string",
    "path_increment",
    "read_records",
    "run_cli",
    "sample_extrapolation_paths",
    "save_designs",
    "seed_cells",
    "seed_graph",
    "strut_radius",
    "subdivided",
    "sym_to_vec",
    "tessellate",
    "training_paths",
    "validate",
    "validate_path",
    "vec_to_sym",
]

for _name in __all__:
    globals()[_name] = getattr(_core, _name)

__version__ = "0.1.0"
