#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lanegraph/model.hpp"

namespace lanegraph::nn {

struct TrainConfig {
  int epochs = 60;
  int batch_size = 30;
  double lr = 1e-4;
  double lr_decay = 0.1;
  int lr_decay_epoch = 30;  // decay takes effect after this many epochs
  double alpha = 1.0;       // connectivity loss weight in the joint loss
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  bool augment_rotations = true;
  uint64_t seed = 1;
};

// Learning rate for a 1-based epoch index: single step decay.
double lr_at_epoch(const TrainConfig& c, int epoch);

struct TrainSample {
  ModelInput input;
  Targets targets;
};

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double boundary = 0.0;
  double connectivity = 0.0;
};

class Adam {
 public:
  Adam(double beta1, double beta2, double eps) : b1_(beta1), b2_(beta2), eps_(eps) {}
  void step(std::vector<Tensor>& tensors, double lr);
  int64_t steps() const { return t_; }

 private:
  double b1_, b2_, eps_;
  int64_t t_ = 0;
};

// Gradient-accumulated minibatch training. Sample order, augmentation draws
// and therefore the resulting weights depend only on cfg.seed and the inputs.
// Throws on non-finite loss.
std::vector<EpochStats> train_model(Model& m, const std::vector<TrainSample>& samples,
                                    const TrainConfig& cfg, std::ostream* log);

}  // namespace lanegraph::nn
