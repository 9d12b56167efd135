#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace tn {

// Convex strain-energy network on the flattened Green-Lagrange strain.
// Hidden width 20, two constrained hidden layers plus an affine output;
// the first layer is unconstrained and the passthrough weights feed the
// raw strain into every constrained layer. Non-negativity of the
// fully-connected weights is enforced by mapping them through a softplus,
// so every parameter is free and convexity in the input holds for any
// parameter values.
inline constexpr int kStrainDim = 9;
inline constexpr int kIcnnHidden = 20;
inline constexpr int kFcParamCount = 1000;           // input layer + constrained chain
inline constexpr int kPassthroughParamCount = 369;   // strain passthroughs
inline constexpr int kGeneratedParamCount = kFcParamCount + kPassthroughParamCount;
inline constexpr int kBiasCount = 3 * kIcnnHidden + 1;  // 61, shared across designs

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector9d = Eigen::Matrix<double, 9, 1>;
using HiddenVector = Eigen::Matrix<double, kIcnnHidden, 1>;

double softplus(double x);  // overflow-safe log(1 + e^x)
double logistic(double x);

struct IcnnWeights {
  Eigen::Matrix<double, kIcnnHidden, kStrainDim> input;       // unconstrained first layer
  Eigen::Matrix<double, kIcnnHidden, kIcnnHidden> fc2, fc3;   // raw, used as beta*softplus
  HiddenVector fc_out;                                        // raw output row
  Eigen::Matrix<double, kIcnnHidden, kStrainDim> pass2, pass3;
  Vector9d pass_out;
  HiddenVector b1, b2, b3;
  double b_out = 0.0;
  double alpha = 1.0;  // activation curvature, > 0
  double beta = 1.0;   // weight-map scale, > 0

  // Flat packing: input row-major, fc2, fc3, fc_out, pass2, pass3, pass_out.
  Eigen::VectorXd generated() const;
  // Flat packing: b1, b2, b3, b_out.
  Eigen::VectorXd biases() const;
  static IcnnWeights from_parts(const Eigen::Ref<const Eigen::VectorXd>& generated,
                                const Eigen::Ref<const Eigen::VectorXd>& biases,
                                double alpha = 1.0, double beta = 1.0);
};

// Hash of the frozen parameter layout; stored in checkpoints.
std::uint64_t icnn_layout_hash();

// Raw network value W_nn(y) on the flattened strain y (row-major E).
double energy_raw(const IcnnWeights& w, const Vector9d& y);
// Raw gradient dW_nn/dy.
Vector9d gradient_raw(const IcnnWeights& w, const Vector9d& y);

// Additive terms pinning the undeformed state: energy_shift = -W_nn(0),
// stress_shift = -sym(reshape(dW_nn/dy at 0)), so the corrected model has
// W(0) = 0 and S(0) = 0 exactly.
struct CorrectionTerms {
  double energy_shift = 0.0;
  Eigen::Matrix3d stress_shift = Eigen::Matrix3d::Zero();
};
CorrectionTerms corrections(const IcnnWeights& w);

struct MaterialTangent {
  Eigen::Matrix3d stress = Eigen::Matrix3d::Zero();  // second Piola-Kirchhoff
  // Engineering Voigt modulus: dS6 = modulus * [dE11 dE22 dE33 2dE23 2dE13 2dE12],
  // component order (11, 22, 33, 23, 13, 12). Symmetric and positive
  // semidefinite (the corrections are affine, so all curvature is convex).
  Matrix6d modulus = Matrix6d::Zero();
};

// Weights plus their corrections; the evaluation surface used everywhere.
class ConstitutiveModel {
 public:
  explicit ConstitutiveModel(IcnnWeights w);

  const IcnnWeights& weights() const { return weights_; }
  const CorrectionTerms& correction() const { return correction_; }

  double energy(const Eigen::Matrix3d& strain) const;  // W(E)
  Eigen::Matrix3d stress(const Eigen::Matrix3d& strain) const;
  MaterialTangent tangent(const Eigen::Matrix3d& strain) const;

  double energy_from_deformation(const Eigen::Matrix3d& deformation) const;
  Eigen::Matrix3d pk1(const Eigen::Matrix3d& deformation) const;

 private:
  IcnnWeights weights_;
  CorrectionTerms correction_;
};

// Symmetric 3x3 <-> flattened 9 (row-major) helpers shared with training.
Vector9d flatten_strain(const Eigen::Matrix3d& strain);
Eigen::Matrix3d stress_from_gradient(const Vector9d& gradient);

// Parameter gradient in the same packing as IcnnWeights.
struct IcnnGradient {
  Eigen::VectorXd generated = Eigen::VectorXd::Zero(kGeneratedParamCount);
  Eigen::VectorXd biases = Eigen::VectorXd::Zero(kBiasCount);
};

// Forward cache at one strain point. accumulate() adds the parameter
// gradient of value_bar * W_nn(y) + grad_bar . dW_nn/dy to `out`, which is
// the second-order adjoint needed to train on both energies and stresses.
// Holds a reference to the weights; keep them alive while the tape is used.
class IcnnTape {
 public:
  IcnnTape(const IcnnWeights& w, const Vector9d& y);

  double value() const { return value_; }
  const Vector9d& gradient() const { return gradient_; }
  // Exact strain Hessian d2W_nn/dy2; positive semidefinite by construction.
  Eigen::Matrix<double, 9, 9> strain_hessian() const;

  void accumulate(double value_bar, const Vector9d& grad_bar, IcnnGradient& out) const;

 private:
  const IcnnWeights& weights_;
  Vector9d y_;
  HiddenVector a1_, a2_, a3_;          // pre-activations
  HiddenVector d1_, d2_, d3_;          // phi'(a)
  HiddenVector dd1_, dd2_, dd3_;       // phi''(a)
  HiddenVector z1_, z2_, z3_;
  Eigen::Matrix<double, kIcnnHidden, kIcnnHidden> p2_, p3_;  // beta*softplus(fc)
  HiddenVector q_;                                           // beta*softplus(fc_out)
  HiddenVector u1_, u2_, u3_;          // dW/da per layer
  double value_ = 0.0;
  Vector9d gradient_ = Vector9d::Zero();
};

}  // namespace tn
