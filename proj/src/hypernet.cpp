#include "trussnet/hypernet.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "trussnet/errors.hpp"
#include "trussnet/rng.hpp"

namespace tn {

namespace {

constexpr double kLeakySlope = 0.01;
constexpr double kHeadOutputScale = 1e-2;
// Offset of the softplus-gated segments inside the structural head output.
constexpr int kGateOffset = kIcnnHidden * kStrainDim;  // 180
constexpr double kGateBiasShift = -3.0;

std::int64_t affine_count(int rows, int cols) {
  return static_cast<std::int64_t>(rows) * cols + rows;
}

void check_shape(const HypernetShape& s) {
  if (s.feature_dim < 1 || s.trunk_width < 1 || s.trunk_layers < 1 || s.head_hidden_layers < 0)
    throw ValidationError("hypernet shape entries must be positive");
}

}  // namespace

std::int64_t hypernet_parameter_count(const HypernetShape& s) {
  check_shape(s);
  std::int64_t n = affine_count(s.trunk_width, s.feature_dim);
  n += (s.trunk_layers - 1) * affine_count(s.trunk_width, s.trunk_width);
  n += 2 * s.head_hidden_layers * affine_count(s.trunk_width, s.trunk_width);
  n += affine_count(kFcParamCount, s.trunk_width);
  n += affine_count(kPassthroughParamCount, s.trunk_width);
  return n;
}

std::uint64_t hypernet_shape_hash(const HypernetShape& s) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "hypernet v1 f64 colmajor W-then-b order:trunk,head_fc,head_pt "
                "feature:%d trunk:%dx%d head_hidden:%dx%d out:%d,%d act:leakyrelu0.01",
                s.feature_dim, s.trunk_width, s.trunk_layers, s.trunk_width,
                s.head_hidden_layers, kFcParamCount, kPassthroughParamCount);
  return fnv1a(std::string(buf));
}

Eigen::VectorXd normalized_feature(const Eigen::Ref<const Eigen::VectorXd>& raw) {
  if (raw.size() != kEncodedLength)
    throw ValidationError("feature vector must have " + std::to_string(kEncodedLength) +
                          " entries");
  Eigen::VectorXd v = raw;
  for (int k = kAdjacencyLength; k < kEncodedLength; ++k) v[k] = 2.0 * v[k] - 1.0;
  return v;
}

double leaky_relu(double x) { return x > 0.0 ? x : kLeakySlope * x; }
double leaky_relu_slope(double x) { return x > 0.0 ? 1.0 : kLeakySlope; }

IcnnWeights pack_icnn(const Eigen::Ref<const Eigen::VectorXd>& fc_vec,
                      const Eigen::Ref<const Eigen::VectorXd>& pt_vec,
                      const Eigen::Ref<const Eigen::VectorXd>& biases, double alpha,
                      double beta) {
  if (fc_vec.size() != kFcParamCount || pt_vec.size() != kPassthroughParamCount ||
      biases.size() != kBiasCount)
    throw ValidationError("generated weight vector lengths must be 1000/369/61");
  Eigen::VectorXd generated(kGeneratedParamCount);
  generated.head<kFcParamCount>() = fc_vec;
  generated.tail<kPassthroughParamCount>() = pt_vec;
  return IcnnWeights::from_parts(generated, biases, alpha, beta);
}

Hypernet::Hypernet(HypernetShape shape, double alpha, double beta)
    : shape_(shape), alpha_(alpha), beta_(beta) {
  check_shape(shape_);
  std::int64_t off = 0;
  auto add = [&off](std::vector<LayerSpec>& layers, int rows, int cols) {
    LayerSpec s;
    s.weight_offset = off;
    s.bias_offset = off + static_cast<std::int64_t>(rows) * cols;
    s.rows = rows;
    s.cols = cols;
    off = s.bias_offset + rows;
    layers.push_back(s);
  };
  add(trunk_, shape_.trunk_width, shape_.feature_dim);
  for (int i = 1; i < shape_.trunk_layers; ++i) add(trunk_, shape_.trunk_width, shape_.trunk_width);
  for (int i = 0; i < shape_.head_hidden_layers; ++i)
    add(head_fc_, shape_.trunk_width, shape_.trunk_width);
  add(head_fc_, kFcParamCount, shape_.trunk_width);
  for (int i = 0; i < shape_.head_hidden_layers; ++i)
    add(head_pt_, shape_.trunk_width, shape_.trunk_width);
  add(head_pt_, kPassthroughParamCount, shape_.trunk_width);
  theta_ = Eigen::VectorXd::Zero(off);
  biases_ = Eigen::VectorXd::Zero(kBiasCount);
}

Eigen::Map<const Eigen::MatrixXd> Hypernet::weight(const LayerSpec& s) const {
  return {theta_.data() + s.weight_offset, s.rows, s.cols};
}

Eigen::Map<const Eigen::VectorXd> Hypernet::bias(const LayerSpec& s) const {
  return {theta_.data() + s.bias_offset, s.rows};
}

void Hypernet::init(std::uint64_t seed) {
  Rng root(seed);
  auto fill = [this](std::vector<LayerSpec>& layers, Rng rng, bool scaled_output) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const LayerSpec& s = layers[i];
      double bound = 1.0 / std::sqrt(static_cast<double>(s.cols));
      if (scaled_output && i + 1 == layers.size()) bound *= kHeadOutputScale;
      std::int64_t n = static_cast<std::int64_t>(s.rows) * s.cols + s.rows;
      for (std::int64_t k = 0; k < n; ++k)
        theta_[s.weight_offset + k] = rng.uniform(-bound, bound);
    }
  };
  fill(trunk_, root.substream("trunk"), false);
  fill(head_fc_, root.substream("head_fc"), true);
  fill(head_pt_, root.substream("head_pt"), true);
  // Gate segments start near softplus(-3) so the deep positive chain of the
  // target network opens gently; at softplus(0) = ln 2 its activations blow
  // up through the layer products and the loss surface turns glassy.
  const LayerSpec& out = head_fc_.back();
  for (int k = kGateOffset; k < kFcParamCount; ++k)
    theta_[out.bias_offset + k] += kGateBiasShift;
  biases_.setZero();
}

HypernetTape Hypernet::forward(const Eigen::Ref<const Eigen::VectorXd>& feature) const {
  if (feature.size() != shape_.feature_dim)
    throw ValidationError("feature length does not match the trunk input width");
  HypernetTape tape;
  tape.feature = feature;
  Eigen::VectorXd x = tape.feature;
  for (const LayerSpec& s : trunk_) {
    tape.trunk_pre.push_back(weight(s) * x + bias(s));
    x = tape.trunk_pre.back().unaryExpr([](double v) { return leaky_relu(v); });
  }
  auto run_head = [&](const std::vector<LayerSpec>& layers, std::vector<Eigen::VectorXd>& pre) {
    Eigen::VectorXd h = x;
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
      pre.push_back(weight(layers[i]) * h + bias(layers[i]));
      h = pre.back().unaryExpr([](double v) { return leaky_relu(v); });
    }
    return Eigen::VectorXd(weight(layers.back()) * h + bias(layers.back()));
  };
  tape.fc_out = run_head(head_fc_, tape.fc_pre);
  tape.pt_out = run_head(head_pt_, tape.pt_pre);
  return tape;
}

void Hypernet::backward(const HypernetTape& tape, const Eigen::Ref<const Eigen::VectorXd>& fc_bar,
                        const Eigen::Ref<const Eigen::VectorXd>& pt_bar,
                        Eigen::Ref<Eigen::VectorXd> theta_grad) const {
  if (fc_bar.size() != kFcParamCount || pt_bar.size() != kPassthroughParamCount ||
      theta_grad.size() != theta_.size())
    throw ValidationError("cotangent lengths do not match the hypernet layout");
  auto act_of = [](const Eigen::VectorXd& pre) {
    return Eigen::VectorXd(pre.unaryExpr([](double v) { return leaky_relu(v); }));
  };
  std::vector<Eigen::VectorXd> trunk_act;
  for (const Eigen::VectorXd& pre : tape.trunk_pre) trunk_act.push_back(act_of(pre));
  const Eigen::VectorXd& t = trunk_act.back();

  auto scatter = [&theta_grad](const LayerSpec& s, const Eigen::VectorXd& y_bar,
                               const Eigen::VectorXd& in) {
    Eigen::Map<Eigen::MatrixXd> gw(theta_grad.data() + s.weight_offset, s.rows, s.cols);
    gw.noalias() += y_bar * in.transpose();
    Eigen::Map<Eigen::VectorXd> gb(theta_grad.data() + s.bias_offset, s.rows);
    gb += y_bar;
  };

  auto run_head = [&](const std::vector<LayerSpec>& layers,
                      const std::vector<Eigen::VectorXd>& pre,
                      const Eigen::VectorXd& out_bar) {
    std::vector<Eigen::VectorXd> act;
    for (const Eigen::VectorXd& p : pre) act.push_back(act_of(p));
    const int hidden = static_cast<int>(pre.size());
    scatter(layers.back(), out_bar, hidden ? act.back() : t);
    Eigen::VectorXd x_bar = weight(layers.back()).transpose() * out_bar;
    for (int i = hidden - 1; i >= 0; --i) {
      Eigen::VectorXd y_bar =
          x_bar.cwiseProduct(pre[i].unaryExpr([](double v) { return leaky_relu_slope(v); }));
      scatter(layers[i], y_bar, i ? act[i - 1] : t);
      x_bar = weight(layers[i]).transpose() * y_bar;
    }
    return x_bar;
  };
  Eigen::VectorXd t_bar = run_head(head_fc_, tape.fc_pre, fc_bar);
  t_bar += run_head(head_pt_, tape.pt_pre, pt_bar);

  for (int i = shape_.trunk_layers - 1; i >= 0; --i) {
    Eigen::VectorXd y_bar = t_bar.cwiseProduct(
        tape.trunk_pre[i].unaryExpr([](double v) { return leaky_relu_slope(v); }));
    scatter(trunk_[i], y_bar, i ? trunk_act[i - 1] : tape.feature);
    t_bar = weight(trunk_[i]).transpose() * y_bar;
  }
}

IcnnWeights Hypernet::emit(const OctantGraph& graph) const {
  HypernetTape tape = forward(normalized_feature(encode(graph)));
  return pack_icnn(tape.fc_out, tape.pt_out, biases_, alpha_, beta_);
}

ConstitutiveModel Hypernet::predict(const OctantGraph& graph) const {
  return ConstitutiveModel(emit(graph));
}

namespace {

constexpr char kMagic[4] = {'H', 'C', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

void write_bytes(std::ofstream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& is, void* p, std::size_t n, const std::filesystem::path& path) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) throw IoError("truncated checkpoint: " + path.string());
}

}  // namespace

void Hypernet::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write checkpoint: " + path.string());
  std::uint64_t hash = hypernet_shape_hash(shape_);
  write_bytes(os, kMagic, 4);
  write_bytes(os, &kVersion, 4);
  write_bytes(os, &hash, 8);
  write_bytes(os, &alpha_, 8);
  write_bytes(os, &beta_, 8);
  write_bytes(os, theta_.data(), sizeof(double) * static_cast<std::size_t>(theta_.size()));
  write_bytes(os, biases_.data(), sizeof(double) * static_cast<std::size_t>(biases_.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

Hypernet Hypernet::load(const std::filesystem::path& path, HypernetShape expected) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read checkpoint: " + path.string());
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t hash = 0;
  double alpha = 0, beta = 0;
  read_bytes(is, magic, 4, path);
  read_bytes(is, &version, 4, path);
  read_bytes(is, &hash, 8, path);
  read_bytes(is, &alpha, 8, path);
  read_bytes(is, &beta, 8, path);
  if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a checkpoint: " + path.string());
  if (version != kVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  if (hash != hypernet_shape_hash(expected))
    throw IoError("checkpoint shape hash does not match the requested layout");
  Hypernet net(expected, alpha, beta);
  read_bytes(is, net.theta_.data(), sizeof(double) * static_cast<std::size_t>(net.theta_.size()),
             path);
  read_bytes(is, net.biases_.data(),
             sizeof(double) * static_cast<std::size_t>(net.biases_.size()), path);
  char extra;
  if (is.read(&extra, 1)) throw IoError("trailing bytes in checkpoint: " + path.string());
  return net;
}

}  // namespace tn
