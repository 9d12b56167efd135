#include "trussnet/icnn.hpp"

#include <cmath>
#include <utility>

#include "trussnet/deformation_paths.hpp"
#include "trussnet/rng.hpp"

namespace tn {

namespace {

constexpr int kH = kIcnnHidden;
using HiddenMatrix = Eigen::Matrix<double, kH, kH>;
using InputMatrix = Eigen::Matrix<double, kH, kStrainDim>;
using RowMajorInput = Eigen::Matrix<double, kH, kStrainDim, Eigen::RowMajor>;
using RowMajorHidden = Eigen::Matrix<double, kH, kH, Eigen::RowMajor>;

// softplus and logistic from one exponential, stable on both tails.
inline void sp_sig(double x, double& sp, double& sig) {
  if (x > 0.0) {
    double e = std::exp(-x);
    sp = x + std::log1p(e);
    sig = 1.0 / (1.0 + e);
  } else {
    double e = std::exp(x);
    sp = std::log1p(e);
    sig = e / (1.0 + e);
  }
}

// Voigt order (11, 22, 33, 23, 13, 12): flattened-strain rows per entry and
// the engineering doubling factors.
constexpr int kVoigtRows[6][2] = {{0, 0}, {4, 4}, {8, 8}, {5, 7}, {2, 6}, {1, 3}};
constexpr double kVoigtWeight[6] = {1, 1, 1, 2, 2, 2};

}  // namespace

double softplus(double x) {
  double sp, sig;
  sp_sig(x, sp, sig);
  return sp;
}

double logistic(double x) {
  double sp, sig;
  sp_sig(x, sp, sig);
  return sig;
}

Eigen::VectorXd IcnnWeights::generated() const {
  Eigen::VectorXd v(kGeneratedParamCount);
  double* p = v.data();
  Eigen::Map<RowMajorInput>{p} = input;
  Eigen::Map<RowMajorHidden>{p + 180} = fc2;
  Eigen::Map<RowMajorHidden>{p + 580} = fc3;
  Eigen::Map<HiddenVector>{p + 980} = fc_out;
  Eigen::Map<RowMajorInput>{p + 1000} = pass2;
  Eigen::Map<RowMajorInput>{p + 1180} = pass3;
  Eigen::Map<Vector9d>{p + 1360} = pass_out;
  return v;
}

Eigen::VectorXd IcnnWeights::biases() const {
  Eigen::VectorXd v(kBiasCount);
  v.segment<kH>(0) = b1;
  v.segment<kH>(kH) = b2;
  v.segment<kH>(2 * kH) = b3;
  v[3 * kH] = b_out;
  return v;
}

IcnnWeights IcnnWeights::from_parts(const Eigen::Ref<const Eigen::VectorXd>& generated,
                                    const Eigen::Ref<const Eigen::VectorXd>& biases,
                                    double alpha, double beta) {
  IcnnWeights w;
  const double* p = generated.data();
  w.input = Eigen::Map<const RowMajorInput>(p);
  w.fc2 = Eigen::Map<const RowMajorHidden>(p + 180);
  w.fc3 = Eigen::Map<const RowMajorHidden>(p + 580);
  w.fc_out = Eigen::Map<const HiddenVector>(p + 980);
  w.pass2 = Eigen::Map<const RowMajorInput>(p + 1000);
  w.pass3 = Eigen::Map<const RowMajorInput>(p + 1180);
  w.pass_out = Eigen::Map<const Vector9d>(p + 1360);
  w.b1 = biases.segment<kH>(0);
  w.b2 = biases.segment<kH>(kH);
  w.b3 = biases.segment<kH>(2 * kH);
  w.b_out = biases[3 * kH];
  w.alpha = alpha;
  w.beta = beta;
  return w;
}

std::uint64_t icnn_layout_hash() {
  return fnv1a(
      "icnn v1 f64 rowmajor in:20x9 fc:20x20,20x20,20 pass:20x9,20x9,9 "
      "bias:20,20,20,1 order:input,fc2,fc3,fc_out,pass2,pass3,pass_out,b1,b2,b3,b_out "
      "phi:alpha*softplus^2 sigma:beta*softplus");
}

IcnnTape::IcnnTape(const IcnnWeights& w, const Vector9d& y) : weights_(w), y_(y) {
  auto activate = [&](const HiddenVector& a, HiddenVector& d, HiddenVector& dd,
                      HiddenVector& z) {
    for (int k = 0; k < kH; ++k) {
      double sp, sig;
      sp_sig(a[k], sp, sig);
      z[k] = w.alpha * sp * sp;
      d[k] = 2.0 * w.alpha * sp * sig;
      dd[k] = 2.0 * w.alpha * (sig * sig + sp * sig * (1.0 - sig));
    }
  };
  auto map_weights = [&](const HiddenMatrix& raw, HiddenMatrix& mapped) {
    for (int c = 0; c < kH; ++c)
      for (int r = 0; r < kH; ++r) mapped(r, c) = w.beta * softplus(raw(r, c));
  };

  a1_ = w.input * y + w.b1;
  activate(a1_, d1_, dd1_, z1_);
  map_weights(w.fc2, p2_);
  a2_ = p2_ * z1_ + w.pass2 * y + w.b2;
  activate(a2_, d2_, dd2_, z2_);
  map_weights(w.fc3, p3_);
  a3_ = p3_ * z2_ + w.pass3 * y + w.b3;
  activate(a3_, d3_, dd3_, z3_);
  for (int k = 0; k < kH; ++k) q_[k] = w.beta * softplus(w.fc_out[k]);
  value_ = q_.dot(z3_) + w.pass_out.dot(y) + w.b_out;

  u3_ = q_.cwiseProduct(d3_);
  u2_ = (p3_.transpose() * u3_).cwiseProduct(d2_);
  u1_ = (p2_.transpose() * u2_).cwiseProduct(d1_);
  gradient_ = w.input.transpose() * u1_ + w.pass2.transpose() * u2_ +
              w.pass3.transpose() * u3_ + w.pass_out;
}

void IcnnTape::accumulate(double value_bar, const Vector9d& grad_bar,
                          IcnnGradient& out) const {
  const IcnnWeights& w = weights_;

  // Tangent sweep along grad_bar: grad_bar . gradient() is the directional
  // derivative of the value, so its parameter gradient is obtained by
  // reverse-differentiating this linearized forward pass.
  const Vector9d& yd = grad_bar;
  HiddenVector a1d = w.input * yd;
  HiddenVector z1d = d1_.cwiseProduct(a1d);
  HiddenVector a2d = p2_ * z1d + w.pass2 * yd;
  HiddenVector z2d = d2_.cwiseProduct(a2d);
  HiddenVector a3d = p3_ * z2d + w.pass3 * yd;
  HiddenVector z3d = d3_.cwiseProduct(a3d);

  double* gp = out.generated.data();
  auto input_grad = Eigen::Map<RowMajorInput>(gp);
  auto fc2_grad = Eigen::Map<RowMajorHidden>(gp + 180);
  auto fc3_grad = Eigen::Map<RowMajorHidden>(gp + 580);
  auto fc_out_grad = Eigen::Map<HiddenVector>(gp + 980);
  auto pass2_grad = Eigen::Map<RowMajorInput>(gp + 1000);
  auto pass3_grad = Eigen::Map<RowMajorInput>(gp + 1180);
  auto pass_out_grad = Eigen::Map<Vector9d>(gp + 1360);

  // Output layer adjoints.
  HiddenVector q_bar = value_bar * z3_ + z3d;
  for (int k = 0; k < kH; ++k) fc_out_grad[k] += q_bar[k] * w.beta * logistic(w.fc_out[k]);
  pass_out_grad += value_bar * y_ + yd;
  out.biases[3 * kH] += value_bar;

  HiddenVector z_bar = value_bar * q_;
  HiddenVector zd_bar = q_;

  auto layer = [&](const HiddenVector& d, const HiddenVector& dd, const HiddenVector& ad,
                   Eigen::Map<RowMajorInput> pass_grad, int bias_offset) {
    HiddenVector a_bar = z_bar.cwiseProduct(d) + zd_bar.cwiseProduct(dd).cwiseProduct(ad);
    HiddenVector ad_bar = zd_bar.cwiseProduct(d);
    out.biases.segment<kH>(bias_offset) += a_bar;
    pass_grad += a_bar * y_.transpose() + ad_bar * yd.transpose();
    return std::make_pair(a_bar, ad_bar);
  };

  auto [a3_bar, a3d_bar] = layer(d3_, dd3_, a3d, pass3_grad, 2 * kH);
  {
    HiddenMatrix p_bar = a3_bar * z2_.transpose() + a3d_bar * z2d.transpose();
    for (int c = 0; c < kH; ++c)
      for (int r = 0; r < kH; ++r)
        fc3_grad(r, c) += p_bar(r, c) * w.beta * logistic(w.fc3(r, c));
    z_bar = p3_.transpose() * a3_bar;
    zd_bar = p3_.transpose() * a3d_bar;
  }

  auto [a2_bar, a2d_bar] = layer(d2_, dd2_, a2d, pass2_grad, kH);
  {
    HiddenMatrix p_bar = a2_bar * z1_.transpose() + a2d_bar * z1d.transpose();
    for (int c = 0; c < kH; ++c)
      for (int r = 0; r < kH; ++r)
        fc2_grad(r, c) += p_bar(r, c) * w.beta * logistic(w.fc2(r, c));
    z_bar = p2_.transpose() * a2_bar;
    zd_bar = p2_.transpose() * a2d_bar;
  }

  HiddenVector a1_bar = z_bar.cwiseProduct(d1_) + zd_bar.cwiseProduct(dd1_).cwiseProduct(a1d);
  HiddenVector a1d_bar = zd_bar.cwiseProduct(d1_);
  out.biases.segment<kH>(0) += a1_bar;
  input_grad += a1_bar * y_.transpose() + a1d_bar * yd.transpose();
}

double energy_raw(const IcnnWeights& w, const Vector9d& y) { return IcnnTape(w, y).value(); }

Vector9d gradient_raw(const IcnnWeights& w, const Vector9d& y) {
  return IcnnTape(w, y).gradient();
}

CorrectionTerms corrections(const IcnnWeights& w) {
  IcnnTape tape(w, Vector9d::Zero());
  CorrectionTerms c;
  c.energy_shift = -tape.value();
  c.stress_shift = -stress_from_gradient(tape.gradient());
  return c;
}

Vector9d flatten_strain(const Eigen::Matrix3d& strain) {
  Vector9d y;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) y[3 * i + j] = strain(i, j);
  return y;
}

Eigen::Matrix3d stress_from_gradient(const Vector9d& gradient) {
  Eigen::Matrix3d g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g(i, j) = gradient[3 * i + j];
  return 0.5 * (g + g.transpose());
}

ConstitutiveModel::ConstitutiveModel(IcnnWeights w)
    : weights_(std::move(w)), correction_(corrections(weights_)) {}

double ConstitutiveModel::energy(const Eigen::Matrix3d& strain) const {
  return energy_raw(weights_, flatten_strain(strain)) +
         correction_.stress_shift.cwiseProduct(strain).sum() + correction_.energy_shift;
}

Eigen::Matrix3d ConstitutiveModel::stress(const Eigen::Matrix3d& strain) const {
  return stress_from_gradient(gradient_raw(weights_, flatten_strain(strain))) +
         correction_.stress_shift;
}

Eigen::Matrix<double, 9, 9> IcnnTape::strain_hessian() const {
  // Layer-wise Gauss-Newton split: all curvature enters through the
  // activations, with non-negative cotangents r_i (products of softplus
  // ranges), so the result is positive semidefinite by construction.
  HiddenVector r3 = q_;
  HiddenVector r2 = p3_.transpose() * u3_;
  HiddenVector r1 = p2_.transpose() * u2_;

  InputMatrix j1 = weights_.input;
  InputMatrix j2 = p2_ * d1_.asDiagonal() * j1 + weights_.pass2;
  InputMatrix j3 = p3_ * d2_.asDiagonal() * j2 + weights_.pass3;

  return j1.transpose() * r1.cwiseProduct(dd1_).asDiagonal() * j1 +
         j2.transpose() * r2.cwiseProduct(dd2_).asDiagonal() * j2 +
         j3.transpose() * r3.cwiseProduct(dd3_).asDiagonal() * j3;
}

MaterialTangent ConstitutiveModel::tangent(const Eigen::Matrix3d& strain) const {
  IcnnTape tape(weights_, flatten_strain(strain));
  MaterialTangent t;
  t.stress = stress_from_gradient(tape.gradient()) + correction_.stress_shift;
  Eigen::Matrix<double, 9, 9> h9 = tape.strain_hessian();

  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      double sum = 0.0;
      for (int ia = 0; ia < 2; ++ia)
        for (int ib = 0; ib < 2; ++ib) sum += h9(kVoigtRows[a][ia], kVoigtRows[b][ib]);
      // Duplicated rows collapse for normal components (both indices equal).
      if (kVoigtWeight[a] == 1) sum *= 0.5;
      if (kVoigtWeight[b] == 1) sum *= 0.5;
      t.modulus(a, b) = sum / (kVoigtWeight[a] * kVoigtWeight[b]);
    }
  return t;
}

double ConstitutiveModel::energy_from_deformation(const Eigen::Matrix3d& deformation) const {
  return energy(green_lagrange(deformation));
}

Eigen::Matrix3d ConstitutiveModel::pk1(const Eigen::Matrix3d& deformation) const {
  return deformation * stress(green_lagrange(deformation));
}

}  // namespace tn
