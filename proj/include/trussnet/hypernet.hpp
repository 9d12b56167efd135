#pragma once
// Maps the 117-entry truss encoding to the generated weight vectors of the
// convex constitutive network: a shared affine trunk feeding two linear-output
// heads (1000 structural weights, 369 passthrough weights).  The 61 target
// biases are not emitted; they are shared trainable parameters stored next to
// the trunk parameters.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "trussnet/icnn.hpp"
#include "trussnet/truss_design.hpp"

namespace tn {

struct HypernetShape {
  int feature_dim = kEncodedLength;
  int trunk_width = 256;
  int trunk_layers = 5;        // affine + activation stages
  int head_hidden_layers = 4;  // affine + activation stages per head, before the linear output
  bool operator==(const HypernetShape&) const = default;
};

// Trainable parameter count of the trunk and both heads (excludes the 61
// shared target-network biases).
std::int64_t hypernet_parameter_count(const HypernetShape& shape);
std::uint64_t hypernet_shape_hash(const HypernetShape& shape);

// Encoding with the 12 trailing in-plane coordinates mapped from [0, 1] to
// [-1, 1]; adjacency bits pass through unchanged.
Eigen::VectorXd normalized_feature(const Eigen::Ref<const Eigen::VectorXd>& raw);

double leaky_relu(double x);
double leaky_relu_slope(double x);

// Slices the two head outputs into named target-network tensors.
// fc: input[180], fc2[400], fc3[400], fc_out[20]; pt: pass2[180], pass3[180],
// pass_out[9]; biases: b1[20], b2[20], b3[20], b_out[1].
IcnnWeights pack_icnn(const Eigen::Ref<const Eigen::VectorXd>& fc_vec,
                      const Eigen::Ref<const Eigen::VectorXd>& pt_vec,
                      const Eigen::Ref<const Eigen::VectorXd>& biases, double alpha = 1.0,
                      double beta = 1.0);

// Stored activations of one forward pass, consumed by backward().
struct HypernetTape {
  Eigen::VectorXd feature;
  std::vector<Eigen::VectorXd> trunk_pre;  // pre-activation per trunk stage
  std::vector<Eigen::VectorXd> fc_pre;     // per head hidden stage
  std::vector<Eigen::VectorXd> pt_pre;
  Eigen::VectorXd fc_out;
  Eigen::VectorXd pt_out;
};

class Hypernet {
 public:
  explicit Hypernet(HypernetShape shape = {}, double alpha = 1.0, double beta = 1.0);

  const HypernetShape& shape() const { return shape_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  // Flat trunk/head parameters, layer-major: for each affine layer its weight
  // matrix (column-major) then its bias.  Order: trunk stages, fc head stages
  // plus output, pt head stages plus output.
  Eigen::VectorXd& parameters() { return theta_; }
  const Eigen::VectorXd& parameters() const { return theta_; }
  std::int64_t parameter_count() const { return theta_.size(); }

  // Shared target-network biases, trained jointly with the trunk parameters.
  Eigen::VectorXd& shared_biases() { return biases_; }
  const Eigen::VectorXd& shared_biases() const { return biases_; }

  // Fan-in-scaled uniform init; head output layers are further scaled by 1e-2
  // so every design starts from a near-zero generated weight vector, and the
  // structural-weight gate segments get a -3 bias offset so the softplus gate
  // opens from a small positive value instead of ln 2.
  void init(std::uint64_t seed);

  HypernetTape forward(const Eigen::Ref<const Eigen::VectorXd>& feature) const;

  // Accumulates d(loss)/d(theta) into theta_grad given cotangents on the two
  // head outputs.  theta_grad must have parameter_count() entries.
  void backward(const HypernetTape& tape, const Eigen::Ref<const Eigen::VectorXd>& fc_bar,
                const Eigen::Ref<const Eigen::VectorXd>& pt_bar,
                Eigen::Ref<Eigen::VectorXd> theta_grad) const;

  // encode -> normalize -> forward -> pack; deterministic per (graph, state).
  IcnnWeights emit(const OctantGraph& graph) const;
  ConstitutiveModel predict(const OctantGraph& graph) const;

  void save(const std::filesystem::path& path) const;
  static Hypernet load(const std::filesystem::path& path, HypernetShape expected = {});

 private:
  struct LayerSpec {
    std::int64_t weight_offset = 0;
    std::int64_t bias_offset = 0;
    int rows = 0;
    int cols = 0;
  };
  Eigen::Map<const Eigen::MatrixXd> weight(const LayerSpec& s) const;
  Eigen::Map<const Eigen::VectorXd> bias(const LayerSpec& s) const;

  HypernetShape shape_;
  double alpha_ = 1.0;
  double beta_ = 1.0;
  std::vector<LayerSpec> trunk_;
  std::vector<LayerSpec> head_fc_;  // hidden stages then output layer
  std::vector<LayerSpec> head_pt_;
  Eigen::VectorXd theta_;
  Eigen::VectorXd biases_;
};

}  // namespace tn
