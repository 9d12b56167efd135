#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "trussnet/rng.hpp"

namespace tn {

// Unit cells are built from one octant of the cube, reflected across the
// three mid-planes. The octant holds 14 candidate nodes:
//   0..7   corner nodes, octant-local position ((k)&1, (k>>1)&1, (k>>2)&1)
//   8..13  face nodes, one per octant face pinned to that face, with two
//          in-plane coordinates free in [0,1]:
//            8: x=0   9: x=1   10: y=0   11: y=1   12: z=0   13: z=1
// In-plane coordinate order is ascending axis order of the face plane.
// Octant-local coordinates live in [0,1]^3 and map to the unit cell as x/2.
inline constexpr int kNodeCount = 14;
inline constexpr int kCornerCount = 8;
inline constexpr int kFaceNodeCount = 6;
inline constexpr int kAdjacencyLength = kNodeCount * (kNodeCount + 1) / 2;  // 105
inline constexpr int kEncodedLength = kAdjacencyLength + 2 * kFaceNodeCount;  // 117
inline constexpr double kDedupeTol = 1e-9;
inline constexpr double kMinStrutLength = 0.05;  // cell units

class OctantGraph {
 public:
  OctantGraph();

  bool edge(int i, int j) const;
  // Raw mutator: does not touch activity flags, so inconsistent states are
  // representable (validate() reports them).
  void set_edge(int i, int j, bool on);

  bool active(int i) const { return (active_ >> i) & 1u; }
  // Deactivating a face node resets its coordinates to the face center so
  // encodings of equivalent graphs are unique.
  void set_active(int i, bool on);

  // In-plane coordinates of face node 8 + f.
  Eigen::Vector2d face_coord(int f) const { return {coords_[2 * f], coords_[2 * f + 1]}; }
  void set_face_coord(int f, double s, double t);

  // Octant-local node position.
  Eigen::Vector3d node_position(int i) const;

  int edge_count() const;
  int active_count() const;
  std::vector<std::pair<int, int>> edges() const;

  // Structural equality; the lineage label is bookkeeping, not structure.
  bool operator==(const OctantGraph& o) const {
    return adj_ == o.adj_ && active_ == o.active_ && coords_ == o.coords_;
  }

  std::string lineage;  // provenance label carried into the designs file

 private:
  std::array<std::uint16_t, kNodeCount> adj_{};
  std::uint16_t active_ = 0;
  std::array<double, 2 * kFaceNodeCount> coords_{};
};

// 117-entry feature vector: 105 upper-triangle-with-diagonal adjacency
// entries in row-major order (diagonal entry = node activity), then the 12
// face-node in-plane coordinates in node order.
Eigen::VectorXd encode(const OctantGraph& g);
OctantGraph decode(const Eigen::Ref<const Eigen::VectorXd>& v);

struct ValidationReport {
  bool valid = true;
  std::vector<std::string> violations;
};

ValidationReport validate(const OctantGraph& g);

enum class SeedCell {
  kSimpleCubic,
  kBodyCentered,
  kFaceCentered,
  kOctet,
  kOctahedron,
  kCrossBraced,
};

OctantGraph seed_graph(SeedCell s);
const std::vector<std::pair<std::string, OctantGraph>>& seed_cells();

struct UnitCellMesh {
  struct Beam {
    int a = 0;
    int b = 0;
    double radius = 0.0;
    // Periodic multiplicity weight: 1/m where m is the number of coincident
    // periodic copies of this beam (1 interior, 1/2 face, 1/4 cell edge).
    // Energy, density and assembly all scale by this weight so the literal
    // mirror-symmetric mesh represents the periodic medium exactly.
    double weight = 1.0;
  };
  std::vector<Eigen::Vector3d> nodes;  // reference positions, cell units in [0,1]^3
  std::vector<Beam> beams;
  struct BoundaryPair {
    int slave = 0;   // node with some coordinate at 1
    int master = 0;  // its translate with all coordinates in [0,1)
    Eigen::Vector3d shift;  // slave position - master position, entries in {0,1}
  };
  std::vector<BoundaryPair> boundary_pairs;

  double weighted_length() const;
};

UnitCellMesh tessellate(const OctantGraph& g, double dedupe_tol = kDedupeTol);

// Splits every beam into `pieces` collinear segments (weights and radius
// inherited); boundary pairs are recomputed.
UnitCellMesh subdivided(const UnitCellMesh& mesh, int pieces);

struct PerturbParams {
  double p_add_edge = 0.45;
  double p_remove_edge = 0.2;
  double p_move_face = 0.35;
  int max_ops = 4;
  // Sampling range for face-node coordinates; narrowed from [0,1] to keep
  // rejection rates low near corners (stored coordinates may be anywhere).
  double coord_lo = 0.1;
  double coord_hi = 0.9;

  bool is_identity() const {
    return max_ops == 0 || (p_add_edge == 0.0 && p_remove_edge == 0.0 && p_move_face == 0.0);
  }
};

// Applies a random op sequence; always returns a valid graph (retries
// internally, falls back to the input if the attempt budget is exhausted).
OctantGraph perturb(const OctantGraph& g, const PerturbParams& params, Rng& rng);

// Grows a population from the seeds until n unique valid designs exist.
// Uniqueness is keyed on encode() with coordinates quantized to 1e-6.
// Deterministic for a given rng seed. If the attempt budget runs out a
// partial list is returned and a warning is printed to stderr.
std::vector<OctantGraph> generate_designs(int n, const std::vector<OctantGraph>& seeds,
                                          const PerturbParams& params, Rng& rng);

// Text designs file: versioned header, then one line per design:
//   id <27 hex digits: 105 adjacency+activity bits> <12 coords> <lineage>
// Bit k of the encoding maps to hex digit k/4, most significant bit first.
void save_designs(const std::string& path, const std::vector<OctantGraph>& designs);
std::vector<OctantGraph> load_designs(const std::string& path);

}  // namespace tn
