#include "trussnet/truss_design.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "trussnet/errors.hpp"

namespace tn {

namespace {

// Row-major upper-triangle-with-diagonal index of (i, j), i <= j.
int tri_index(int i, int j) {
  return i * kNodeCount - i * (i - 1) / 2 + (j - i);
}

void check_node(int i) {
  if (i < 0 || i >= kNodeCount) throw ValidationError("node index out of range");
}

}  // namespace

OctantGraph::OctantGraph() {
  coords_.fill(0.5);
}

bool OctantGraph::edge(int i, int j) const {
  check_node(i);
  check_node(j);
  return (adj_[i] >> j) & 1u;
}

void OctantGraph::set_edge(int i, int j, bool on) {
  check_node(i);
  check_node(j);
  if (i == j) throw ValidationError("self edges are not representable");
  if (on) {
    adj_[i] |= std::uint16_t(1u << j);
    adj_[j] |= std::uint16_t(1u << i);
  } else {
    adj_[i] &= std::uint16_t(~(1u << j));
    adj_[j] &= std::uint16_t(~(1u << i));
  }
}

void OctantGraph::set_active(int i, bool on) {
  check_node(i);
  if (on) {
    active_ |= std::uint16_t(1u << i);
  } else {
    active_ &= std::uint16_t(~(1u << i));
    if (i >= kCornerCount) {
      coords_[2 * (i - kCornerCount)] = 0.5;
      coords_[2 * (i - kCornerCount) + 1] = 0.5;
    }
  }
}

void OctantGraph::set_face_coord(int f, double s, double t) {
  if (f < 0 || f >= kFaceNodeCount) throw ValidationError("face node index out of range");
  coords_[2 * f] = s;
  coords_[2 * f + 1] = t;
}

Eigen::Vector3d OctantGraph::node_position(int i) const {
  check_node(i);
  if (i < kCornerCount) {
    return {double(i & 1), double((i >> 1) & 1), double((i >> 2) & 1)};
  }
  int f = i - kCornerCount;
  int axis = f / 2;
  double side = double(f % 2);
  double s = coords_[2 * f], t = coords_[2 * f + 1];
  switch (axis) {
    case 0:
      return {side, s, t};
    case 1:
      return {s, side, t};
    default:
      return {s, t, side};
  }
}

int OctantGraph::edge_count() const {
  int n = 0;
  for (int i = 0; i < kNodeCount; ++i)
    for (int j = i + 1; j < kNodeCount; ++j)
      if (edge(i, j)) ++n;
  return n;
}

int OctantGraph::active_count() const {
  int n = 0;
  for (int i = 0; i < kNodeCount; ++i)
    if (active(i)) ++n;
  return n;
}

std::vector<std::pair<int, int>> OctantGraph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < kNodeCount; ++i)
    for (int j = i + 1; j < kNodeCount; ++j)
      if (edge(i, j)) out.emplace_back(i, j);
  return out;
}

Eigen::VectorXd encode(const OctantGraph& g) {
  Eigen::VectorXd v(kEncodedLength);
  for (int i = 0; i < kNodeCount; ++i)
    for (int j = i; j < kNodeCount; ++j)
      v[tri_index(i, j)] = (i == j) ? double(g.active(i)) : double(g.edge(i, j));
  for (int f = 0; f < kFaceNodeCount; ++f) {
    Eigen::Vector2d c = g.face_coord(f);
    v[kAdjacencyLength + 2 * f] = c[0];
    v[kAdjacencyLength + 2 * f + 1] = c[1];
  }
  return v;
}

OctantGraph decode(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != kEncodedLength) throw ValidationError("feature vector must have length 117");
  if (!v.allFinite()) throw ValidationError("feature vector has non-finite entries");
  OctantGraph g;
  for (int i = 0; i < kNodeCount; ++i) {
    if (v[tri_index(i, i)] > 0.5) g.set_active(i, true);
  }
  for (int i = 0; i < kNodeCount; ++i)
    for (int j = i + 1; j < kNodeCount; ++j)
      if (v[tri_index(i, j)] > 0.5) g.set_edge(i, j, true);
  for (int f = 0; f < kFaceNodeCount; ++f) {
    double s = v[kAdjacencyLength + 2 * f];
    double t = v[kAdjacencyLength + 2 * f + 1];
    if (s < 0.0 || s > 1.0 || t < 0.0 || t > 1.0)
      throw ValidationError("face coordinate outside [0,1]");
    g.set_face_coord(f, s, t);
  }
  return g;
}

ValidationReport validate(const OctantGraph& g) {
  ValidationReport rep;
  auto fail = [&rep](const std::string& msg) {
    rep.valid = false;
    rep.violations.push_back(msg);
  };

  bool any_vertex = false;
  for (int i = 0; i < kCornerCount; ++i) any_vertex |= g.active(i);
  if (!any_vertex) fail("no vertex node active");

  for (auto [i, j] : g.edges()) {
    if (!g.active(i) || !g.active(j))
      fail("edge (" + std::to_string(i) + "," + std::to_string(j) + ") has inactive endpoint");
    double len = 0.5 * (g.node_position(i) - g.node_position(j)).norm();
    if (len < kMinStrutLength)
      fail("strut (" + std::to_string(i) + "," + std::to_string(j) + ") shorter than minimum");
  }

  for (int i = 0; i < kNodeCount; ++i) {
    if (!g.active(i)) continue;
    bool incident = false;
    for (int j = 0; j < kNodeCount; ++j) incident |= (j != i && g.edge(i, j));
    if (!incident) fail("isolated active node " + std::to_string(i));
  }

  for (int f = 0; f < kFaceNodeCount; ++f) {
    Eigen::Vector2d c = g.face_coord(f);
    if (c[0] < 0.0 || c[0] > 1.0 || c[1] < 0.0 || c[1] > 1.0)
      fail("face node " + std::to_string(kCornerCount + f) + " coordinates outside [0,1]");
    if (!g.active(kCornerCount + f) && (c[0] != 0.5 || c[1] != 0.5))
      fail("inactive face node " + std::to_string(kCornerCount + f) + " has non-default coordinates");
  }

  if (g.edge_count() == 0) {
    fail("graph has no edges");
  } else {
    try {
      tessellate(g);
    } catch (const ValidationError& e) {
      fail(std::string("tessellation: ") + e.what());
    }
  }
  return rep;
}

namespace {

OctantGraph make_seed(const std::string& name, std::initializer_list<std::pair<int, int>> edges) {
  OctantGraph g;
  for (auto [i, j] : edges) {
    g.set_edge(i, j, true);
    g.set_active(i, true);
    g.set_active(j, true);
  }
  g.lineage = name;
  return g;
}

}  // namespace

OctantGraph seed_graph(SeedCell s) {
  switch (s) {
    case SeedCell::kSimpleCubic:
      return make_seed("simple_cubic", {{0, 1}, {0, 2}, {0, 4}});
    case SeedCell::kBodyCentered:
      return make_seed("body_centered", {{0, 7}});
    case SeedCell::kFaceCentered:
      return make_seed("face_centered", {{0, 3}, {0, 5}, {0, 6}});
    case SeedCell::kOctet:
      return make_seed("octet", {{0, 3}, {0, 5}, {0, 6}, {3, 5}, {3, 6}, {5, 6}});
    case SeedCell::kOctahedron:
      return make_seed("octahedron", {{3, 5}, {3, 6}, {5, 6}});
    case SeedCell::kCrossBraced:
      return make_seed("cross_braced", {{0, 1}, {0, 2}, {0, 4}, {0, 7}});
  }
  throw ValidationError("unknown seed cell");
}

const std::vector<std::pair<std::string, OctantGraph>>& seed_cells() {
  static const std::vector<std::pair<std::string, OctantGraph>> cells = [] {
    std::vector<std::pair<std::string, OctantGraph>> v;
    for (SeedCell s : {SeedCell::kSimpleCubic, SeedCell::kBodyCentered, SeedCell::kFaceCentered,
                       SeedCell::kOctet, SeedCell::kOctahedron, SeedCell::kCrossBraced}) {
      OctantGraph g = seed_graph(s);
      v.emplace_back(g.lineage, g);
    }
    return v;
  }();
  return cells;
}

double UnitCellMesh::weighted_length() const {
  double sum = 0.0;
  for (const Beam& b : beams) sum += b.weight * (nodes[b.a] - nodes[b.b]).norm();
  return sum;
}

namespace {

using Key3 = std::array<std::int64_t, 3>;

Key3 quantize(const Eigen::Vector3d& p, double tol) {
  return {std::llround(p[0] / tol), std::llround(p[1] / tol), std::llround(p[2] / tol)};
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

void compute_boundary_pairs(UnitCellMesh& mesh, double tol) {
  mesh.boundary_pairs.clear();
  std::map<Key3, int> index;
  for (int i = 0; i < int(mesh.nodes.size()); ++i) index[quantize(mesh.nodes[i], tol)] = i;
  for (int i = 0; i < int(mesh.nodes.size()); ++i) {
    Eigen::Vector3d p = mesh.nodes[i];
    Eigen::Vector3d shift = Eigen::Vector3d::Zero();
    for (int k = 0; k < 3; ++k) {
      if (p[k] > 1.0 - tol) {
        p[k] -= 1.0;
        shift[k] = 1.0;
      }
    }
    if (shift.isZero()) continue;
    auto it = index.find(quantize(p, tol));
    if (it == index.end())
      throw ValidationError("tessellation lost a periodic image node");
    mesh.boundary_pairs.push_back({i, it->second, shift});
  }
}

}  // namespace

UnitCellMesh tessellate(const OctantGraph& g, double dedupe_tol) {
  auto octant_edges = g.edges();
  if (octant_edges.empty()) throw ValidationError("empty graph cannot be tessellated");
  for (int i = 0; i < kNodeCount; ++i) {
    if (!g.active(i)) continue;
    bool incident = false;
    for (int j = 0; j < kNodeCount; ++j) incident |= (j != i && g.edge(i, j));
    if (!incident) throw ValidationError("isolated node in tessellation input");
  }

  UnitCellMesh mesh;
  std::map<Key3, int> node_index;
  auto intern = [&](const Eigen::Vector3d& p) {
    Key3 k = quantize(p, dedupe_tol);
    auto it = node_index.find(k);
    if (it != node_index.end()) return it->second;
    int id = int(mesh.nodes.size());
    mesh.nodes.push_back(p);
    node_index.emplace(k, id);
    return id;
  };

  std::map<std::pair<int, int>, int> beam_set;
  for (int m = 0; m < 8; ++m) {
    for (auto [i, j] : octant_edges) {
      Eigen::Vector3d pa = 0.5 * g.node_position(i);
      Eigen::Vector3d pb = 0.5 * g.node_position(j);
      for (int k = 0; k < 3; ++k) {
        if ((m >> k) & 1) {
          pa[k] = 1.0 - pa[k];
          pb[k] = 1.0 - pb[k];
        }
      }
      int a = intern(pa), b = intern(pb);
      if (a == b) throw ValidationError("degenerate beam after reflection");
      beam_set.emplace(std::minmax(a, b), 0);
    }
  }

  // Canonical node order: lexicographic by quantized position.
  std::vector<int> order(mesh.nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return quantize(mesh.nodes[a], dedupe_tol) < quantize(mesh.nodes[b], dedupe_tol);
  });
  std::vector<int> rank(order.size());
  for (int r = 0; r < int(order.size()); ++r) rank[order[r]] = r;
  std::vector<Eigen::Vector3d> sorted_nodes(mesh.nodes.size());
  for (int i = 0; i < int(mesh.nodes.size()); ++i) sorted_nodes[rank[i]] = mesh.nodes[i];
  mesh.nodes = std::move(sorted_nodes);

  for (auto& [pair, unused] : beam_set) {
    (void)unused;
    UnitCellMesh::Beam b;
    std::tie(b.a, b.b) = std::minmax(rank[pair.first], rank[pair.second]);
    mesh.beams.push_back(b);
  }
  std::sort(mesh.beams.begin(), mesh.beams.end(),
            [](const auto& x, const auto& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });

  // Periodic multiplicity: beams sharing a canonical translate (midpoint
  // wrapped into [0,1)) are copies of one strut of the periodic medium.
  std::map<std::array<std::int64_t, 6>, std::vector<int>> copies;
  for (int e = 0; e < int(mesh.beams.size()); ++e) {
    const auto& b = mesh.beams[e];
    Eigen::Vector3d mid = 0.5 * (mesh.nodes[b.a] + mesh.nodes[b.b]);
    Eigen::Vector3d wrapped = mid;
    for (int k = 0; k < 3; ++k)
      if (wrapped[k] > 1.0 - dedupe_tol) wrapped[k] -= 1.0;
    Eigen::Vector3d rel = mesh.nodes[b.a] - mid;
    Key3 qr = quantize(rel, dedupe_tol);
    Key3 qn = quantize(Eigen::Vector3d(-rel), dedupe_tol);
    if (qn > qr) qr = qn;
    Key3 qm = quantize(wrapped, dedupe_tol);
    copies[{qm[0], qm[1], qm[2], qr[0], qr[1], qr[2]}].push_back(e);
  }
  for (auto& [key, list] : copies) {
    (void)key;
    for (int e : list) mesh.beams[e].weight = 1.0 / double(list.size());
  }

  compute_boundary_pairs(mesh, dedupe_tol);

  // Quotient-graph connectivity under periodic identification.
  UnionFind uf(int(mesh.nodes.size()));
  for (const auto& b : mesh.beams) uf.unite(b.a, b.b);
  for (const auto& p : mesh.boundary_pairs) uf.unite(p.slave, p.master);
  int root = uf.find(0);
  for (int i = 1; i < int(mesh.nodes.size()); ++i)
    if (uf.find(i) != root) throw ValidationError("tessellated cell is disconnected");

  return mesh;
}

UnitCellMesh subdivided(const UnitCellMesh& mesh, int pieces) {
  if (pieces < 1) throw ValidationError("subdivision count must be >= 1");
  if (pieces == 1) return mesh;
  UnitCellMesh out;
  out.nodes = mesh.nodes;
  for (const auto& b : mesh.beams) {
    int prev = b.a;
    for (int s = 1; s < pieces; ++s) {
      double t = double(s) / double(pieces);
      Eigen::Vector3d p = (1.0 - t) * mesh.nodes[b.a] + t * mesh.nodes[b.b];
      int id = int(out.nodes.size());
      out.nodes.push_back(p);
      out.beams.push_back({prev, id, b.radius, b.weight});
      prev = id;
    }
    out.beams.push_back({prev, b.b, b.radius, b.weight});
  }
  compute_boundary_pairs(out, kDedupeTol);
  return out;
}

namespace {

std::string quantized_key(const OctantGraph& g) {
  Eigen::VectorXd v = encode(g);
  std::ostringstream os;
  for (int i = 0; i < kAdjacencyLength; ++i) os << (v[i] > 0.5 ? '1' : '0');
  for (int i = kAdjacencyLength; i < kEncodedLength; ++i)
    os << ':' << std::llround(v[i] * 1e6);
  return os.str();
}

std::string bump_lineage(const std::string& parent) {
  auto slash = parent.rfind('/');
  if (slash != std::string::npos) {
    char* end = nullptr;
    long k = std::strtol(parent.c_str() + slash + 1, &end, 10);
    if (end && *end == '\0') return parent.substr(0, slash + 1) + std::to_string(k + 1);
  }
  return parent.empty() ? "anon/1" : parent + "/1";
}

}  // namespace

OctantGraph perturb(const OctantGraph& g, const PerturbParams& params, Rng& rng) {
  if (params.is_identity()) return g;
  for (int attempt = 0; attempt < 64; ++attempt) {
    OctantGraph h = g;
    int nops = 1 + int(rng.below(std::uint64_t(params.max_ops)));
    for (int op = 0; op < nops; ++op) {
      double u = rng.uniform();
      if (u < params.p_add_edge) {
        std::vector<std::pair<int, int>> candidates;
        for (int i = 0; i < kNodeCount; ++i)
          for (int j = i + 1; j < kNodeCount; ++j)
            if (!h.edge(i, j)) candidates.emplace_back(i, j);
        if (candidates.empty()) continue;
        auto [i, j] = candidates[rng.below(candidates.size())];
        h.set_edge(i, j, true);
        h.set_active(i, true);
        h.set_active(j, true);
        // Freshly activated face nodes get a sampled position.
        for (int n : {i, j}) {
          if (n >= kCornerCount && !g.active(n))
            h.set_face_coord(n - kCornerCount, rng.uniform(params.coord_lo, params.coord_hi),
                             rng.uniform(params.coord_lo, params.coord_hi));
        }
      } else if (u < params.p_add_edge + params.p_remove_edge) {
        auto existing = h.edges();
        if (existing.empty()) continue;
        auto [i, j] = existing[rng.below(existing.size())];
        h.set_edge(i, j, false);
        for (int n : {i, j}) {
          bool incident = false;
          for (int m = 0; m < kNodeCount; ++m) incident |= (m != n && h.edge(n, m));
          if (!incident) h.set_active(n, false);
        }
      } else if (u < params.p_add_edge + params.p_remove_edge + params.p_move_face) {
        std::vector<int> faces;
        for (int f = 0; f < kFaceNodeCount; ++f)
          if (h.active(kCornerCount + f)) faces.push_back(f);
        if (faces.empty()) continue;
        int f = faces[rng.below(faces.size())];
        h.set_face_coord(f, rng.uniform(params.coord_lo, params.coord_hi),
                         rng.uniform(params.coord_lo, params.coord_hi));
      }
    }
    if (validate(h).valid) {
      h.lineage = bump_lineage(g.lineage);
      return h;
    }
  }
  return g;
}

std::vector<OctantGraph> generate_designs(int n, const std::vector<OctantGraph>& seeds,
                                          const PerturbParams& params, Rng& rng) {
  if (seeds.empty()) throw ValidationError("generate_designs requires at least one seed");
  for (const auto& s : seeds)
    if (!validate(s).valid) throw ValidationError("generate_designs given an invalid seed");

  std::vector<OctantGraph> pop;
  std::vector<std::string> keys;
  auto try_insert = [&](const OctantGraph& g) {
    std::string k = quantized_key(g);
    if (std::find(keys.begin(), keys.end(), k) != keys.end()) return false;
    keys.push_back(k);
    pop.push_back(g);
    return true;
  };

  for (const auto& s : seeds) {
    if (int(pop.size()) >= n) break;
    try_insert(s);
  }

  const std::int64_t budget = std::max<std::int64_t>(1000, 200ll * n);
  std::int64_t attempts = 0;
  while (int(pop.size()) < n && attempts < budget) {
    ++attempts;
    Rng sub = rng.substream("design-attempt", std::uint64_t(attempts));
    const OctantGraph& parent = pop[sub.below(pop.size())];
    OctantGraph child = perturb(parent, params, sub);
    try_insert(child);
  }
  if (int(pop.size()) < n) {
    std::cerr << "warning: generated only " << pop.size() << " of " << n
              << " unique designs within the attempt budget\n";
  }
  if (int(pop.size()) > n) pop.resize(n);
  return pop;
}

void save_designs(const std::string& path, const std::vector<OctantGraph>& designs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open designs file for writing: " + path);
  out << "trussnet-designs v1\n";
  for (int id = 0; id < int(designs.size()); ++id) {
    const OctantGraph& g = designs[id];
    Eigen::VectorXd v = encode(g);
    std::string hex;
    for (int d = 0; d < (kAdjacencyLength + 3) / 4; ++d) {
      int value = 0;
      for (int b = 0; b < 4; ++b) {
        int bit = 4 * d + b;
        value = (value << 1) | (bit < kAdjacencyLength && v[bit] > 0.5 ? 1 : 0);
      }
      hex += "0123456789abcdef"[value];
    }
    char buf[32];
    out << id << ' ' << hex;
    for (int c = 0; c < 2 * kFaceNodeCount; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", v[kAdjacencyLength + c]);
      out << ' ' << buf;
    }
    out << ' ' << (g.lineage.empty() ? "-" : g.lineage) << '\n';
  }
  if (!out) throw IoError("failed writing designs file: " + path);
}

std::vector<OctantGraph> load_designs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open designs file: " + path);
  std::string header;
  std::getline(in, header);
  if (header != "trussnet-designs v1") throw IoError("unrecognized designs file header");
  std::vector<OctantGraph> designs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int id;
    std::string hex, lineage;
    Eigen::VectorXd v(kEncodedLength);
    if (!(ls >> id >> hex)) throw IoError("malformed designs record");
    if (int(hex.size()) != (kAdjacencyLength + 3) / 4) throw IoError("bad adjacency hex length");
    for (int bit = 0; bit < kAdjacencyLength; ++bit) {
      char c = hex[bit / 4];
      int value = (c >= '0' && c <= '9') ? c - '0'
                : (c >= 'a' && c <= 'f') ? c - 'a' + 10
                : (c >= 'A' && c <= 'F') ? c - 'A' + 10
                                         : -1;
      if (value < 0) throw IoError("bad hex digit in designs record");
      v[bit] = (value >> (3 - bit % 4)) & 1;
    }
    for (int c = 0; c < 2 * kFaceNodeCount; ++c) {
      if (!(ls >> v[kAdjacencyLength + c])) throw IoError("missing coordinate in designs record");
    }
    if (!(ls >> lineage)) throw IoError("missing lineage in designs record");
    if (id != int(designs.size())) throw IoError("designs record ids must be sequential");
    OctantGraph g = decode(v);
    g.lineage = (lineage == "-") ? "" : lineage;
    designs.push_back(std::move(g));
  }
  return designs;
}

}  // namespace tn
