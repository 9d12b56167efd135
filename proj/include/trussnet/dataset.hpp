#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "trussnet/deformation_paths.hpp"

namespace tn {

// One homogenized sample. On disk: fixed 200-byte little-endian frame
//   offset  0  design id   u32
//   offset  4  path id     u32
//   offset  8  step t      u16
//   offset 10  flags       u16   (bit 0: equilibrium converged)
//   offset 12  F row-major f64[9]
//   offset 84  E           f64[6]  components (11,22,33,23,13,12)
//   offset 132 S           f64[6]  same order
//   offset 180 W           f64
//   offset 188 zero padding to 200
// preceded by a 16-byte header {magic "HCDS", version u32, layout hash u64}.
struct SampleRecord {
  std::uint32_t design = 0;
  std::uint32_t path = 0;
  std::uint16_t t = 0;
  std::uint16_t flags = 0;
  Eigen::Matrix3d F = Eigen::Matrix3d::Identity();
  Eigen::Matrix<double, 6, 1> E = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::Matrix<double, 6, 1> S = Eigen::Matrix<double, 6, 1>::Zero();
  double W = 0.0;

  bool converged() const { return flags & 1u; }
};

inline constexpr std::uint32_t kRecordFlagConverged = 1u;
inline constexpr std::size_t kRecordBytes = 200;
inline constexpr std::size_t kRecordHeaderBytes = 16;

std::uint64_t record_layout_hash();

void write_records(const std::string& path, const std::vector<SampleRecord>& records);
std::vector<SampleRecord> read_records(const std::string& path);

// A named split: the records of `name`.hcds are the cross product of
// designs x paths (path ids index the manifest path table).
struct SplitSpec {
  std::string name;
  std::vector<int> designs;
  std::vector<int> paths;

  bool operator==(const SplitSpec&) const = default;
};

struct DatasetManifest {
  std::vector<DeformationPath> paths;  // id = position
  std::vector<SplitSpec> splits;

  const SplitSpec* find(const std::string& name) const;
  bool operator==(const DatasetManifest&) const = default;
};

void save_manifest(const std::string& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::string& path);

// "0-5,8,11-12" <-> sorted unique id list.
std::string compress_ids(const std::vector<int>& ids);
std::vector<int> parse_ids(const std::string& text);

// Solves one (design, path) task; returns the per-step records in t order.
using PathSolver = std::function<std::vector<SampleRecord>(int design_id, int path_id)>;

struct BuildReport {
  std::int64_t tasks_total = 0;
  std::int64_t tasks_resumed = 0;  // skipped because a valid progress file covered them
  std::int64_t records_written = 0;
  std::int64_t nonconverged_records = 0;
};

// Writes manifest.txt plus one <split>.hcds per split into out_dir, running
// `solve` for every (design, path) task in design-major order. A sidecar
// progress file keyed on resume_token makes interrupted builds resumable at
// task granularity with byte-identical final output; a token mismatch
// discards the partial file. Progress files are removed on completion.
BuildReport build_dataset(const std::string& out_dir, const DatasetManifest& manifest,
                          const PathSolver& solve, const std::string& resume_token);

}  // namespace tn
