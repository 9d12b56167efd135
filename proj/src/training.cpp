#include "trussnet/training.hpp"

#include <chrono>
#include <limits>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "trussnet/errors.hpp"
#include "trussnet/rng.hpp"

namespace tn {

void TrainConfig::validate() const {
  if (lambda_s < 0.0 || lambda_w < 0.0 || (lambda_s == 0.0 && lambda_w == 0.0))
    throw ValidationError("loss weights must be nonnegative and not both zero");
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (batch_size < 1) throw ValidationError("batch size must be at least 1");
  if (epochs < 0) throw ValidationError("epoch count must be nonnegative");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0)
    throw ValidationError("Adam moment decays must lie in [0, 1)");
  if (!(adam_epsilon > 0.0)) throw ValidationError("Adam epsilon must be positive");
  if (grad_clip < 0.0) throw ValidationError("gradient clip must be nonnegative");
  if (checkpoint_every < 0 || fd_check_every < 0)
    throw ValidationError("cadence fields must be nonnegative");
}

std::int64_t TrainingSet::record_count() const {
  std::int64_t n = 0;
  for (const DesignSamples& d : designs) n += static_cast<std::int64_t>(d.records.size());
  return n;
}

TrainingSet assemble_training_set(const std::vector<OctantGraph>& graphs,
                                  const std::vector<SampleRecord>& records) {
  TrainingSet set;
  std::map<std::uint32_t, std::vector<SampleRecord>> grouped;
  for (const SampleRecord& r : records) {
    if (!r.converged()) {
      ++set.excluded;
      continue;
    }
    grouped[r.design].push_back(r);
  }
  for (auto& [design, list] : grouped) {
    if (design >= graphs.size())
      throw ValidationError("record references design " + std::to_string(design) +
                            " outside the design list");
    DesignSamples d;
    d.design = static_cast<int>(design);
    d.feature = normalized_feature(encode(graphs[design]));
    d.records = std::move(list);
    set.designs.push_back(std::move(d));
  }
  return set;
}

namespace {

// Predictions subtract the zero-strain tape so the emitted model satisfies
// W(0) = 0 and S(0) = 0 through the identical code path the constitutive
// evaluator uses.
struct ZeroPoint {
  double value = 0.0;
  Vector9d gradient = Vector9d::Zero();
};

RecordPrediction predict_record(const IcnnWeights& w, const ZeroPoint& zero,
                                const SampleRecord& r) {
  Vector9d y = flatten_strain(vec_to_sym(r.E));
  IcnnTape tape(w, y);
  RecordPrediction p;
  p.s = sym_to_vec(stress_from_gradient(tape.gradient() - zero.gradient));
  p.w = tape.value() - zero.value - zero.gradient.dot(y);
  return p;
}

}  // namespace

LossTerms batch_loss(const Hypernet& net, const std::vector<const DesignSamples*>& batch,
                     const TrainConfig& config, Eigen::VectorXd* grad) {
  std::int64_t n = 0;
  for (const DesignSamples* d : batch) n += static_cast<std::int64_t>(d->records.size());
  if (n == 0) throw ValidationError("training batch has no records");
  const std::int64_t theta_n = net.parameter_count();
  if (grad && grad->size() != theta_n + kBiasCount)
    throw ValidationError("gradient vector length must cover parameters plus shared biases");

  const double inv_n = 1.0 / static_cast<double>(n);
  double sse_stress = 0.0, sse_energy = 0.0;

  for (const DesignSamples* d : batch) {
    HypernetTape tape = net.forward(d->feature);
    IcnnWeights w =
        pack_icnn(tape.fc_out, tape.pt_out, net.shared_biases(), net.alpha(), net.beta());
    IcnnTape zero_tape(w, Vector9d::Zero());
    ZeroPoint zero{zero_tape.value(), zero_tape.gradient()};

    IcnnGradient ig;
    double zero_value_bar = 0.0;
    Vector9d zero_grad_bar = Vector9d::Zero();
    for (const SampleRecord& r : d->records) {
      if (!r.converged()) throw ValidationError("unconverged record in training batch");
      Vector9d y = flatten_strain(vec_to_sym(r.E));
      IcnnTape ty(w, y);
      Eigen::Matrix3d s_pred = stress_from_gradient(ty.gradient() - zero.gradient);
      double w_pred = ty.value() - zero.value - zero.gradient.dot(y);

      Eigen::Matrix3d ds = s_pred - vec_to_sym(r.S);
      double dw = w_pred - r.W;
      sse_stress += ds.squaredNorm();
      sse_energy += dw * dw;

      if (grad) {
        double value_bar = 2.0 * config.lambda_w * inv_n * dw;
        Vector9d grad_bar = flatten_strain((2.0 * config.lambda_s * inv_n) * ds);
        ty.accumulate(value_bar, grad_bar, ig);
        zero_value_bar -= value_bar;
        zero_grad_bar -= grad_bar + value_bar * y;
      }
    }
    if (grad) {
      zero_tape.accumulate(zero_value_bar, zero_grad_bar, ig);
      net.backward(tape, ig.generated.head<kFcParamCount>(),
                   ig.generated.tail<kPassthroughParamCount>(), grad->head(theta_n));
      grad->tail(kBiasCount) += ig.biases;
    }
  }

  LossTerms terms;
  terms.stress = sse_stress * inv_n;
  terms.energy = sse_energy * inv_n;
  terms.records = n;
  return terms;
}

MetricsReport evaluate(const Hypernet& net, const TrainingSet& split,
                       const std::vector<DeformationPath>& paths) {
  MetricsAccumulator acc;
  acc.exclude(split.excluded);
  for (const DesignSamples& d : split.designs) {
    HypernetTape tape = net.forward(d.feature);
    IcnnWeights w =
        pack_icnn(tape.fc_out, tape.pt_out, net.shared_biases(), net.alpha(), net.beta());
    IcnnTape zero_tape(w, Vector9d::Zero());
    ZeroPoint zero{zero_tape.value(), zero_tape.gradient()};
    for (const SampleRecord& r : d.records) {
      if (r.path >= paths.size())
        throw ValidationError("record references path " + std::to_string(r.path) +
                              " outside the manifest");
      RecordPrediction p = predict_record(w, zero, r);
      acc.add(paths[r.path].family, r.S, p.s, r.W, p.w);
    }
  }
  if (acc.count() == 0) throw ValidationError("evaluation split has no converged records");
  return acc.report();
}

Trainer::Trainer(Hypernet net, TrainConfig config) : net_(std::move(net)), config_(config) {
  config_.validate();
  std::int64_t n = net_.parameter_count() + kBiasCount;
  moment1_ = Eigen::VectorXd::Zero(n);
  moment2_ = Eigen::VectorXd::Zero(n);
}

void Trainer::adam_step(const Eigen::VectorXd& grad) {
  ++step_;
  moment1_ = config_.adam_beta1 * moment1_ + (1.0 - config_.adam_beta1) * grad;
  moment2_ =
      config_.adam_beta2 * moment2_ + (1.0 - config_.adam_beta2) * grad.cwiseProduct(grad);
  double c1 = 1.0 - std::pow(config_.adam_beta1, static_cast<double>(step_));
  double c2 = 1.0 - std::pow(config_.adam_beta2, static_cast<double>(step_));
  Eigen::VectorXd update =
      (moment1_ / c1).cwiseQuotient(((moment2_ / c2).cwiseSqrt().array() + config_.adam_epsilon)
                                        .matrix());
  const std::int64_t theta_n = net_.parameter_count();
  net_.parameters() -= config_.learning_rate * update.head(theta_n);
  net_.shared_biases() -= config_.learning_rate * update.tail(kBiasCount);
}

EpochLog Trainer::run_epoch(const TrainingSet& train, const std::vector<DeformationPath>& paths) {
  if (aborted_) throw ValidationError("trainer already aborted on a non-finite loss");
  const int nd = static_cast<int>(train.designs.size());
  if (nd == 0) throw ValidationError("training set is empty");

  // Seeded permutation: the multiset of designs per epoch is exact.
  Rng shuffle = Rng(config_.seed).substream("shuffle", static_cast<std::uint64_t>(epoch_));
  std::vector<int> order(nd);
  std::iota(order.begin(), order.end(), 0);
  for (int i = nd - 1; i > 0; --i)
    std::swap(order[i], order[shuffle.below(static_cast<std::uint64_t>(i) + 1)]);

  // Epoch-start snapshot for the non-finite-loss rollback.
  const Eigen::VectorXd theta_snap = net_.parameters();
  const Eigen::VectorXd bias_snap = net_.shared_biases();
  const Eigen::VectorXd m1_snap = moment1_;
  const Eigen::VectorXd m2_snap = moment2_;
  const std::int64_t step_snap = step_;

  Eigen::VectorXd grad(net_.parameter_count() + kBiasCount);
  double loss_sum = 0.0;
  int batches = 0;
  for (int begin = 0; begin < nd; begin += config_.batch_size) {
    std::vector<const DesignSamples*> batch;
    for (int i = begin; i < std::min(nd, begin + config_.batch_size); ++i)
      batch.push_back(&train.designs[order[i]]);

    auto t0 = std::chrono::steady_clock::now();
    grad.setZero();
    LossTerms lt = batch_loss(net_, batch, config_, &grad);
    double total = lt.total(config_);
    if (!std::isfinite(total) || !grad.allFinite()) {
      net_.parameters() = theta_snap;
      net_.shared_biases() = bias_snap;
      moment1_ = m1_snap;
      moment2_ = m2_snap;
      step_ = step_snap;
      aborted_ = true;
      break;
    }

    if (config_.fd_check_every > 0 && step_ % config_.fd_check_every == 0) {
      // Directional probe of the unclipped gradient on this batch.
      Rng dir_rng = Rng(config_.seed).substream("fdcheck", static_cast<std::uint64_t>(step_));
      Eigen::VectorXd dir(grad.size());
      for (std::int64_t k = 0; k < dir.size(); ++k) dir[k] = dir_rng.normal();
      dir /= dir.norm();
      const double h = 1e-6;
      Eigen::VectorXd theta_now = net_.parameters();
      Eigen::VectorXd bias_now = net_.shared_biases();
      auto probe_at = [&](double sign) {
        net_.parameters() = theta_now + sign * h * dir.head(net_.parameter_count());
        net_.shared_biases() = bias_now + sign * h * dir.tail(kBiasCount);
        return batch_loss(net_, batch, config_, nullptr).total(config_);
      };
      double fd = (probe_at(1.0) - probe_at(-1.0)) / (2.0 * h);
      net_.parameters() = theta_now;
      net_.shared_biases() = bias_now;
      double directional = grad.dot(dir);
      fd_errors_.push_back(std::abs(fd - directional) /
                           std::max(std::abs(directional), 1e-12));
    }

    if (config_.grad_clip > 0.0) {
      double norm = grad.norm();
      if (norm > config_.grad_clip) grad *= config_.grad_clip / norm;
    }
    adam_step(grad);

    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
    steps_.push_back({step_, epoch_, total, config_.lambda_s * lt.stress,
                      config_.lambda_w * lt.energy, ms});
    loss_sum += total;
    ++batches;
  }

  EpochLog log;
  log.epoch = epoch_;
  log.mean_loss = batches > 0 ? loss_sum / batches : std::numeric_limits<double>::quiet_NaN();
  if (!aborted_) {
    log.train_nrmse = evaluate(net_, train, paths).mean_normal_stress_nrmse();
    epochs_.push_back(log);
    ++epoch_;
  }
  return log;
}

void Trainer::train(const TrainingSet& train, const std::vector<DeformationPath>& paths,
                    const std::function<void(int, const Trainer&)>& on_checkpoint) {
  for (int e = 0; e < config_.epochs && !aborted_; ++e) {
    run_epoch(train, paths);
    if (on_checkpoint && config_.checkpoint_every > 0 && !aborted_ &&
        epoch_ % config_.checkpoint_every == 0)
      on_checkpoint(epoch_, *this);
  }
  if (on_checkpoint) on_checkpoint(epoch_, *this);
}

void Trainer::write_step_csv(std::ostream& os, const std::vector<StepLog>& rows) {
  os << "step,epoch,loss,loss_S,loss_W,wall_ms\n";
  os.precision(17);
  for (const StepLog& r : rows)
    os << r.step << ',' << r.epoch << ',' << r.loss << ',' << r.loss_s << ',' << r.loss_w << ','
       << r.wall_ms << '\n';
}

}  // namespace tn
