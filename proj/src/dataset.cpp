#include "trussnet/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "trussnet/errors.hpp"
#include "trussnet/rng.hpp"

namespace tn {

namespace {

// Frozen layout descriptor; any change to the frame is a new layout.
const char kLayoutString[] =
    "HCDS v1 frame=200 le u32:design u32:path u16:t u16:flags f64x9:F(rowmajor) "
    "f64x6:E(11,22,33,23,13,12) f64x6:S f64:W pad12";

void put_bytes(std::string& buf, const void* p, std::size_t n) {
  buf.append(static_cast<const char*>(p), n);
}

std::string record_header() {
  std::string h;
  h.append("HCDS", 4);
  std::uint32_t version = 1;
  std::uint64_t hash = record_layout_hash();
  put_bytes(h, &version, 4);
  put_bytes(h, &hash, 8);
  return h;
}

std::string encode_record(const SampleRecord& r) {
  std::string buf;
  buf.reserve(kRecordBytes);
  put_bytes(buf, &r.design, 4);
  put_bytes(buf, &r.path, 4);
  put_bytes(buf, &r.t, 2);
  put_bytes(buf, &r.flags, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double v = r.F(i, j);
      put_bytes(buf, &v, 8);
    }
  for (int i = 0; i < 6; ++i) put_bytes(buf, &r.E[i], 8);
  for (int i = 0; i < 6; ++i) put_bytes(buf, &r.S[i], 8);
  put_bytes(buf, &r.W, 8);
  buf.resize(kRecordBytes, '\0');
  return buf;
}

SampleRecord decode_record(const char* p) {
  SampleRecord r;
  std::memcpy(&r.design, p + 0, 4);
  std::memcpy(&r.path, p + 4, 4);
  std::memcpy(&r.t, p + 8, 2);
  std::memcpy(&r.flags, p + 10, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) std::memcpy(&r.F(i, j), p + 12 + 8 * (3 * i + j), 8);
  for (int i = 0; i < 6; ++i) std::memcpy(&r.E[i], p + 84 + 8 * i, 8);
  for (int i = 0; i < 6; ++i) std::memcpy(&r.S[i], p + 132 + 8 * i, 8);
  std::memcpy(&r.W, p + 180, 8);
  return r;
}

void check_header(const char* h, const std::string& path) {
  if (std::memcmp(h, "HCDS", 4) != 0) throw IoError("bad dataset magic: " + path);
  std::uint32_t version;
  std::uint64_t hash;
  std::memcpy(&version, h + 4, 4);
  std::memcpy(&hash, h + 8, 8);
  if (version != 1) throw IoError("unsupported dataset version: " + path);
  if (hash != record_layout_hash()) throw IoError("dataset layout hash mismatch: " + path);
}

}  // namespace

std::uint64_t record_layout_hash() {
  static const std::uint64_t h = fnv1a(kLayoutString, sizeof kLayoutString - 1);
  return h;
}

void write_records(const std::string& path, const std::vector<SampleRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open dataset file for writing: " + path);
  std::string h = record_header();
  out.write(h.data(), std::streamsize(h.size()));
  for (const auto& r : records) {
    std::string buf = encode_record(r);
    out.write(buf.data(), std::streamsize(buf.size()));
  }
  if (!out) throw IoError("failed writing dataset file: " + path);
}

std::vector<SampleRecord> read_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < kRecordHeaderBytes) throw IoError("dataset file too short: " + path);
  check_header(bytes.data(), path);
  std::size_t payload = bytes.size() - kRecordHeaderBytes;
  if (payload % kRecordBytes != 0) throw IoError("dataset file truncated mid-record: " + path);
  std::vector<SampleRecord> out;
  out.reserve(payload / kRecordBytes);
  for (std::size_t off = kRecordHeaderBytes; off < bytes.size(); off += kRecordBytes)
    out.push_back(decode_record(bytes.data() + off));
  return out;
}

const SplitSpec* DatasetManifest::find(const std::string& name) const {
  for (const auto& s : splits)
    if (s.name == name) return &s;
  return nullptr;
}

std::string compress_ids(const std::vector<int>& ids) {
  std::vector<int> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.empty()) return "none";
  std::ostringstream os;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[j] + 1) ++j;
    if (i > 0) os << ',';
    if (j > i)
      os << sorted[i] << '-' << sorted[j];
    else
      os << sorted[i];
    i = j + 1;
  }
  return os.str();
}

std::vector<int> parse_ids(const std::string& text) {
  std::vector<int> out;
  if (text == "none") return out;
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    auto dash = tok.find('-', 1);  // allow negative? ids are non-negative
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoi(tok));
      } else {
        int a = std::stoi(tok.substr(0, dash));
        int b = std::stoi(tok.substr(dash + 1));
        if (b < a) throw IoError("descending id range: " + tok);
        for (int v = a; v <= b; ++v) out.push_back(v);
      }
    } catch (const std::invalid_argument&) {
      throw IoError("malformed id list token: " + tok);
    } catch (const std::out_of_range&) {
      throw IoError("id out of range: " + tok);
    }
  }
  return out;
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open manifest for writing: " + path);
  out << "trussnet-splits v1\n";
  out << "paths " << m.paths.size() << '\n';
  for (std::size_t i = 0; i < m.paths.size(); ++i)
    out << i << ' ' << path_to_string(m.paths[i]) << '\n';
  out << "splits " << m.splits.size() << '\n';
  for (const auto& s : m.splits)
    out << "split " << s.name << " designs " << compress_ids(s.designs) << " paths "
        << compress_ids(s.paths) << '\n';
  if (!out) throw IoError("failed writing manifest: " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "trussnet-splits v1")
    throw IoError("unrecognized manifest header: " + path);
  DatasetManifest m;
  std::size_t npaths = 0, nsplits = 0;
  std::string word;
  if (!(in >> word >> npaths) || word != "paths") throw IoError("manifest missing path table");
  std::getline(in, line);
  for (std::size_t i = 0; i < npaths; ++i) {
    if (!std::getline(in, line)) throw IoError("manifest path table truncated");
    std::istringstream ls(line);
    std::size_t id;
    if (!(ls >> id) || id != i) throw IoError("manifest path ids must be sequential");
    std::string rest;
    std::getline(ls, rest);
    try {
      m.paths.push_back(path_from_string(rest));
    } catch (const ValidationError& e) {
      throw IoError(std::string("manifest path entry invalid: ") + e.what());
    }
  }
  if (!(in >> word >> nsplits) || word != "splits") throw IoError("manifest missing split table");
  std::getline(in, line);
  for (std::size_t i = 0; i < nsplits; ++i) {
    if (!std::getline(in, line)) throw IoError("manifest split table truncated");
    std::istringstream ls(line);
    SplitSpec s;
    std::string kw1, kw2, designs, paths;
    if (!(ls >> kw1 >> s.name >> kw2 >> designs >> word >> paths) || kw1 != "split" ||
        kw2 != "designs" || word != "paths")
      throw IoError("malformed split line: " + line);
    s.designs = parse_ids(designs);
    s.paths = parse_ids(paths);
    for (int p : s.paths)
      if (p < 0 || p >= int(m.paths.size())) throw IoError("split references unknown path id");
    m.splits.push_back(std::move(s));
  }
  return m;
}

namespace {

struct Progress {
  std::int64_t tasks_done = 0;
  std::int64_t bytes = 0;  // valid size of the .hcds file (header included)
  std::int64_t records = 0;
  std::int64_t nonconverged = 0;
};

std::string progress_path(const std::string& split_file) { return split_file + ".progress"; }

bool load_progress(const std::string& split_file, const std::string& token, Progress& p) {
  std::ifstream in(progress_path(split_file));
  if (!in) return false;
  std::string header, stored;
  if (!std::getline(in, header) || header != "trussnet-progress v1") return false;
  if (!std::getline(in, stored) || stored != token) return false;
  if (!(in >> p.tasks_done >> p.bytes >> p.records >> p.nonconverged)) return false;
  std::error_code ec;
  auto size = std::filesystem::file_size(split_file, ec);
  if (ec || std::int64_t(size) < p.bytes) return false;
  return true;
}

void save_progress(const std::string& split_file, const std::string& token, const Progress& p) {
  std::string tmp = progress_path(split_file) + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << "trussnet-progress v1\n" << token << '\n'
        << p.tasks_done << ' ' << p.bytes << ' ' << p.records << ' ' << p.nonconverged << '\n';
    if (!out) throw IoError("failed writing progress file for " + split_file);
  }
  std::filesystem::rename(tmp, progress_path(split_file));
}

}  // namespace

BuildReport build_dataset(const std::string& out_dir, const DatasetManifest& manifest,
                          const PathSolver& solve, const std::string& resume_token) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  save_manifest((fs::path(out_dir) / "manifest.txt").string(), manifest);

  BuildReport report;
  for (const auto& split : manifest.splits) {
    std::string file = (fs::path(out_dir) / (split.name + ".hcds")).string();
    std::string token = resume_token + "|split=" + split.name;

    std::vector<std::pair<int, int>> tasks;
    for (int d : split.designs)
      for (int p : split.paths) tasks.emplace_back(d, p);
    report.tasks_total += std::int64_t(tasks.size());

    Progress prog;
    bool resuming = load_progress(file, token, prog) && prog.tasks_done <= std::int64_t(tasks.size());
    if (!resuming) prog = Progress{};
    report.tasks_resumed += prog.tasks_done;

    if (resuming && prog.tasks_done > 0) {
      fs::resize_file(file, std::uintmax_t(prog.bytes));
    } else {
      std::ofstream out(file, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot open dataset file for writing: " + file);
      std::string h = record_header();
      out.write(h.data(), std::streamsize(h.size()));
      if (!out) throw IoError("failed writing dataset header: " + file);
      prog.bytes = std::int64_t(h.size());
      save_progress(file, token, prog);
    }

    std::ofstream out(file, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot append to dataset file: " + file);

    for (std::size_t k = std::size_t(prog.tasks_done); k < tasks.size(); ++k) {
      auto [design, path] = tasks[k];
      std::vector<SampleRecord> recs = solve(design, path);
      for (const auto& r : recs) {
        std::string buf = encode_record(r);
        out.write(buf.data(), std::streamsize(buf.size()));
        prog.bytes += std::int64_t(buf.size());
        ++prog.records;
        if (!r.converged()) ++prog.nonconverged;
      }
      out.flush();
      if (!out) throw IoError("failed writing dataset records: " + file);
      prog.tasks_done = std::int64_t(k + 1);
      save_progress(file, token, prog);
    }

    report.records_written += prog.records;
    report.nonconverged_records += prog.nonconverged;
    fs::remove(progress_path(file));
  }
  return report;
}

}  // namespace tn
