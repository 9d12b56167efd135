#pragma once
// Plain-text key-value run configuration for the command line pipeline.
// Lines are `key = value`; '#' starts a comment. Keys are dotted with the
// command section (`train.epochs = 200`); the global keys {seed, threads,
// out} are bare. Unknown and duplicate keys are rejected. Relative paths
// named in the config resolve against the output directory, so chained
// commands share one workspace.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "trussnet/training.hpp"

namespace tn {

struct GenSection {
  int n = 64;
  double p_add_edge = 0.45;
  double p_remove_edge = 0.2;
  double p_move_face = 0.35;
  int max_ops = 4;
  std::string designs = "designs.txt";  // output file
};

struct HomogenizeSection {
  std::string designs = "designs.txt";  // input designs file
  std::string dataset = "dataset";      // output directory
  int steps = 20;
  int train_designs = 48;       // leading design ids form the train split
  int test_designs = 16;        // following ids form the held-out splits
  int extrapolation_paths = 14;  // sampled per-dataset for the test_GL split
  int subdivisions = 2;
  double relative_density = 0.025;
  double youngs_modulus = 1.0;
  double poisson_ratio = 0.3;
  double residual_rel_tol = 1e-10;
};

struct TrainSection {
  TrainConfig optimizer;  // seed comes from the global key
  std::string dataset = "dataset";
  std::string designs = "designs.txt";
  std::string checkpoint = "checkpoint.hcnn";  // output file
};

struct EvalSection {
  std::string dataset = "dataset";
  std::string designs = "designs.txt";
  std::string checkpoint = "checkpoint.hcnn";
  std::string splits = "train,test_L,test_G,test_GL";  // comma list
};

struct SimulateSection {
  std::string designs = "designs.txt";
  std::string checkpoint = "checkpoint.hcnn";
  int design = 0;
  std::string mode = "both";         // continuum | resolved | both
  std::string program = "uniaxial";  // uniaxial | affine
  int divisions = 4;   // continuum mesh subdivisions per side
  int tiling = 3;      // resolved sample cells per side
  int subdivisions = 2;
  int steps = 50;
  double u_over_l = -0.05;  // uniaxial program travel, fraction of the side
  double side = 1.0;
  double youngs_modulus = 1.0;
  double poisson_ratio = 0.3;
  double relative_density = 0.025;
  double residual_rel_tol = 1e-8;
  // Affine program endpoint, row-major; keys f11..f33.
  std::array<double, 9> affine = {1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0};
};

struct ExportSection {
  std::string dataset = "dataset";
  std::string designs = "designs.txt";
  std::string checkpoint = "checkpoint.hcnn";
  std::string splits = "train,test_L,test_G,test_GL";
};

struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out = "out";
  GenSection gen;
  HomogenizeSection homogenize;
  TrainSection train;
  EvalSection eval;
  SimulateSection simulate;
  ExportSection export_;

  void validate() const;  // range and enumeration checks for every section
};

// Unknown keys, duplicates, and malformed values throw ValidationError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Canonical `key = value` dump of every field; parse_config(resolved_config(c))
// reproduces c exactly (doubles are printed with 17 significant digits).
std::string resolved_config(const RunConfig& c);

// Absolute paths pass through; relative ones are joined onto c.out.
std::string resolve_path(const RunConfig& c, const std::string& path);

// Comma-separated list -> trimmed non-empty entries.
std::vector<std::string> split_names(const std::string& csv);

}  // namespace tn
