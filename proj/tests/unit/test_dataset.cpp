#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "trussnet/dataset.hpp"
#include "trussnet/errors.hpp"
#include "trussnet/rng.hpp"

using namespace tn;
namespace fs = std::filesystem;

namespace {

SampleRecord make_record(Rng& rng, int design, int path, int t) {
  SampleRecord r;
  r.design = std::uint32_t(design);
  r.path = std::uint32_t(path);
  r.t = std::uint16_t(t);
  r.flags = kRecordFlagConverged;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.F(i, j) = rng.uniform(-1, 1);
  for (int i = 0; i < 6; ++i) r.E[i] = rng.uniform(-1, 1);
  for (int i = 0; i < 6; ++i) r.S[i] = rng.uniform(-1, 1);
  r.W = rng.uniform(0, 2);
  return r;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Deterministic fake solver: one record per step, fields derived from ids.
std::vector<SampleRecord> fake_solve(int design, int path, int steps) {
  std::vector<SampleRecord> out;
  for (int t = 0; t <= steps; ++t) {
    SampleRecord r;
    r.design = std::uint32_t(design);
    r.path = std::uint32_t(path);
    r.t = std::uint16_t(t);
    r.flags = (design + path + t) % 7 == 0 ? 0 : kRecordFlagConverged;
    r.W = design * 1000.0 + path * 10.0 + t;
    r.S[0] = -r.W;
    out.push_back(r);
  }
  return out;
}

DatasetManifest small_manifest() {
  DatasetManifest m;
  m.paths = training_paths(3);
  auto test = interpolation_test_paths(3);
  int base = int(m.paths.size());
  m.paths.insert(m.paths.end(), test.begin(), test.end());
  SplitSpec train{"train", {0, 1, 2, 3}, {}};
  for (int p = 0; p < base; ++p) train.paths.push_back(p);
  SplitSpec testL{"test_L", {0, 1, 2, 3}, {}};
  for (int p = base; p < int(m.paths.size()); ++p) testL.paths.push_back(p);
  m.splits = {train, testL};
  return m;
}

}  // namespace

TEST_CASE("records round-trip bit-exactly") {
  TempDir dir("trussnet_dataset_rt");
  Rng rng(1);
  std::vector<SampleRecord> recs;
  for (int i = 0; i < 37; ++i) recs.push_back(make_record(rng, i, i % 5, i % 11));
  recs[3].flags = 0;
  fs::path f = dir.path / "x.hcds";
  write_records(f.string(), recs);
  CHECK(fs::file_size(f) == kRecordHeaderBytes + recs.size() * kRecordBytes);
  auto back = read_records(f.string());
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].design == recs[i].design);
    CHECK(back[i].path == recs[i].path);
    CHECK(back[i].t == recs[i].t);
    CHECK(back[i].flags == recs[i].flags);
    CHECK((back[i].F - recs[i].F).norm() == 0.0);
    CHECK((back[i].E - recs[i].E).norm() == 0.0);
    CHECK((back[i].S - recs[i].S).norm() == 0.0);
    CHECK(back[i].W == recs[i].W);
  }
  CHECK(!back[3].converged());
  CHECK(back[4].converged());
}

TEST_CASE("corrupt dataset files are rejected") {
  TempDir dir("trussnet_dataset_bad");
  fs::path f = dir.path / "x.hcds";
  write_records(f.string(), {SampleRecord{}});

  auto bytes = file_bytes(f);
  SUBCASE("bad magic") {
    bytes[0] = 'X';
    std::ofstream(f, std::ios::binary) << bytes;
    CHECK_THROWS_AS(read_records(f.string()), IoError);
  }
  SUBCASE("bad layout hash") {
    bytes[9] ^= 0x5a;
    std::ofstream(f, std::ios::binary) << bytes;
    CHECK_THROWS_AS(read_records(f.string()), IoError);
  }
  SUBCASE("truncated mid-record") {
    bytes.resize(bytes.size() - 17);
    std::ofstream(f, std::ios::binary) << bytes;
    CHECK_THROWS_AS(read_records(f.string()), IoError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(read_records("/nonexistent/x.hcds"), IoError); }
}

TEST_CASE("id list compression round-trips") {
  CHECK(compress_ids({}) == "none");
  CHECK(parse_ids("none").empty());
  CHECK(compress_ids({0, 1, 2, 3}) == "0-3");
  CHECK(compress_ids({5}) == "5");
  CHECK(compress_ids({3, 1, 2, 9, 7, 8, 11}) == "1-3,7-9,11");
  CHECK(parse_ids("1-3,7-9,11") == std::vector<int>({1, 2, 3, 7, 8, 9, 11}));
  CHECK_THROWS_AS(parse_ids("abc"), IoError);
  CHECK_THROWS_AS(parse_ids("9-3"), IoError);
}

TEST_CASE("manifest round-trips") {
  TempDir dir("trussnet_manifest_rt");
  DatasetManifest m = small_manifest();
  fs::path f = dir.path / "manifest.txt";
  save_manifest(f.string(), m);
  DatasetManifest back = load_manifest(f.string());
  CHECK(back == m);
  REQUIRE(back.find("train") != nullptr);
  CHECK(back.find("train")->designs == std::vector<int>({0, 1, 2, 3}));
  CHECK(back.find("missing") == nullptr);

  std::ofstream(f) << "garbage\n";
  CHECK_THROWS_AS(load_manifest(f.string()), IoError);
}

TEST_CASE("build_dataset writes tasks in order with deterministic bytes") {
  TempDir dir1("trussnet_build_a"), dir2("trussnet_build_b");
  DatasetManifest m = small_manifest();
  auto solver = [](int d, int p) { return fake_solve(d, p, 3); };
  BuildReport r1 = build_dataset(dir1.path.string(), m, solver, "tok");
  BuildReport r2 = build_dataset(dir2.path.string(), m, solver, "tok");
  CHECK(r1.tasks_total == 4 * 14 + 4 * 7);
  CHECK(r1.tasks_resumed == 0);
  CHECK(r1.records_written == r1.tasks_total * 4);
  CHECK(r1.nonconverged_records > 0);
  CHECK(file_bytes(dir1.path / "train.hcds") == file_bytes(dir2.path / "train.hcds"));
  CHECK(file_bytes(dir1.path / "test_L.hcds") == file_bytes(dir2.path / "test_L.hcds"));
  CHECK(file_bytes(dir1.path / "manifest.txt") == file_bytes(dir2.path / "manifest.txt"));
  CHECK(!fs::exists(dir1.path / "train.hcds.progress"));

  auto recs = read_records((dir1.path / "train.hcds").string());
  const auto& split = *m.find("train");
  REQUIRE(recs.size() == split.designs.size() * split.paths.size() * 4);
  std::size_t k = 0;
  for (int d : split.designs)
    for (int p : split.paths)
      for (int t = 0; t <= 3; ++t, ++k) {
        CHECK(recs[k].design == std::uint32_t(d));
        CHECK(recs[k].path == std::uint32_t(p));
        CHECK(recs[k].t == t);
        CHECK(recs[k].W == d * 1000.0 + p * 10.0 + t);
      }
}

TEST_CASE("interrupted builds resume to byte-identical output") {
  TempDir full("trussnet_build_full"), part("trussnet_build_part");
  DatasetManifest m = small_manifest();
  auto solver = [](int d, int p) { return fake_solve(d, p, 3); };
  build_dataset(full.path.string(), m, solver, "tok");

  int calls = 0;
  auto failing = [&](int d, int p) {
    if (++calls > 30) throw SolverError("simulated crash");
    return fake_solve(d, p, 3);
  };
  CHECK_THROWS_AS(build_dataset(part.path.string(), m, failing, "tok"), SolverError);
  CHECK(fs::exists(part.path / "train.hcds.progress"));

  int resumed_calls = 0;
  auto counting = [&](int d, int p) {
    ++resumed_calls;
    return fake_solve(d, p, 3);
  };
  BuildReport r = build_dataset(part.path.string(), m, counting, "tok");
  CHECK(r.tasks_resumed == 30);
  CHECK(resumed_calls == int(r.tasks_total) - 30);
  CHECK(file_bytes(part.path / "train.hcds") == file_bytes(full.path / "train.hcds"));
  CHECK(file_bytes(part.path / "test_L.hcds") == file_bytes(full.path / "test_L.hcds"));
  CHECK(!fs::exists(part.path / "train.hcds.progress"));
}

TEST_CASE("resume token mismatch rebuilds from scratch") {
  TempDir dir("trussnet_build_tok");
  DatasetManifest m = small_manifest();
  m.splits.resize(1);
  int calls = 0;
  auto failing = [&](int d, int p) {
    if (++calls > 10) throw SolverError("crash");
    return fake_solve(d, p, 3);
  };
  CHECK_THROWS_AS(build_dataset(dir.path.string(), m, failing, "tok-a"), SolverError);
  int calls2 = 0;
  auto counting = [&](int d, int p) {
    ++calls2;
    return fake_solve(d, p, 3);
  };
  BuildReport r = build_dataset(dir.path.string(), m, counting, "tok-b");
  CHECK(r.tasks_resumed == 0);
  CHECK(calls2 == int(r.tasks_total));
}

TEST_CASE("zero designs give an empty but valid dataset") {
  TempDir dir("trussnet_build_empty");
  DatasetManifest m;
  m.paths = training_paths(3);
  SplitSpec s{"train", {}, {0, 1}};
  m.splits = {s};
  BuildReport r = build_dataset(dir.path.string(), m,
                                [](int, int) -> std::vector<SampleRecord> {
                                  throw SolverError("must not be called");
                                },
                                "tok");
  CHECK(r.tasks_total == 0);
  CHECK(r.records_written == 0);
  auto recs = read_records((dir.path / "train.hcds").string());
  CHECK(recs.empty());
  DatasetManifest back = load_manifest((dir.path / "manifest.txt").string());
  CHECK(back == m);
}
