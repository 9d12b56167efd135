#pragma once
// Joint optimization of the weight-generator parameters and the shared target
// biases against the stress+energy loss.  The loss gradient runs through the
// second-order path: stress is itself a strain derivative of the predicted
// energy, so parameter cotangents carry the mixed strain/parameter term.

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "trussnet/dataset.hpp"
#include "trussnet/hypernet.hpp"
#include "trussnet/metrics.hpp"
#include "trussnet/truss_design.hpp"

namespace tn {

struct TrainConfig {
  double lambda_s = 1.0;
  double lambda_w = 0.2;
  double learning_rate = 5e-4;
  int batch_size = 64;  // designs per batch, each contributing all its records
  int epochs = 1000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double grad_clip = 1e3;  // global norm; 0 disables
  std::uint64_t seed = 0;
  int checkpoint_every = 50;  // epochs between checkpoint callbacks; 0 disables
  int fd_check_every = 0;     // steps between gradient spot checks; 0 disables

  void validate() const;
};

// All converged records of one design plus its normalized encoding.
struct DesignSamples {
  int design = 0;
  Eigen::VectorXd feature;  // normalized, trunk-ready
  std::vector<SampleRecord> records;
};

struct TrainingSet {
  std::vector<DesignSamples> designs;
  std::int64_t excluded = 0;  // unconverged records dropped

  std::int64_t record_count() const;
};

// Groups records by design id and attaches normalized features; `graphs` is
// indexed by design id. Unconverged records are dropped and counted.
TrainingSet assemble_training_set(const std::vector<OctantGraph>& graphs,
                                  const std::vector<SampleRecord>& records);

// Predicted (S, W) for one record strain under an emitted weight set, using
// the same zero-point subtraction the constitutive model applies.
struct RecordPrediction {
  Eigen::Matrix<double, 6, 1> s;
  double w = 0.0;
};

struct LossTerms {
  double stress = 0.0;  // mean squared stress error, 9-component Frobenius
  double energy = 0.0;  // mean squared energy error
  std::int64_t records = 0;

  double total(const TrainConfig& c) const { return c.lambda_s * stress + c.lambda_w * energy; }
};

// Mean losses over every record of the given designs. If grad is non-null it
// must have net.parameter_count() + kBiasCount entries; d(total)/d(params) is
// accumulated into it. Throws on an unconverged record.
LossTerms batch_loss(const Hypernet& net, const std::vector<const DesignSamples*>& batch,
                     const TrainConfig& config, Eigen::VectorXd* grad);

// Metrics of the emitted models over a split; paths give the family per
// record. Unconverged records are skipped and counted as excluded.
MetricsReport evaluate(const Hypernet& net, const TrainingSet& split,
                       const std::vector<DeformationPath>& paths);

struct StepLog {
  std::int64_t step = 0;
  int epoch = 0;
  double loss = 0.0;
  double loss_s = 0.0;
  double loss_w = 0.0;
  double wall_ms = 0.0;
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double train_nrmse = 0.0;  // mean over the normal stress components
};

class Trainer {
 public:
  Trainer(Hypernet net, TrainConfig config);

  Hypernet& net() { return net_; }
  const Hypernet& net() const { return net_; }
  const TrainConfig& config() const { return config_; }
  std::int64_t step() const { return step_; }
  const std::vector<StepLog>& step_log() const { return steps_; }
  const std::vector<EpochLog>& epoch_log() const { return epochs_; }
  const std::vector<double>& fd_check_errors() const { return fd_errors_; }
  bool aborted() const { return aborted_; }

  // One pass over the training set: seeded shuffle, design batches, Adam
  // updates, then a read-only metrics pass for the epoch log. A non-finite
  // loss rolls the parameters back to the epoch start and sets aborted().
  EpochLog run_epoch(const TrainingSet& train, const std::vector<DeformationPath>& paths);

  // Full loop; invokes on_checkpoint every checkpoint_every epochs and once
  // at the end. Stops early if aborted.
  void train(const TrainingSet& train, const std::vector<DeformationPath>& paths,
             const std::function<void(int epoch, const Trainer&)>& on_checkpoint = {});

  static void write_step_csv(std::ostream& os, const std::vector<StepLog>& rows);

 private:
  void adam_step(const Eigen::VectorXd& grad);

  Hypernet net_;
  TrainConfig config_;
  Eigen::VectorXd moment1_;
  Eigen::VectorXd moment2_;
  std::int64_t step_ = 0;
  int epoch_ = 0;
  bool aborted_ = false;
  std::vector<StepLog> steps_;
  std::vector<EpochLog> epochs_;
  std::vector<double> fd_errors_;
};

}  // namespace tn
