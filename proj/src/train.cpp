#include "lanegraph/train.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "lanegraph/rng.hpp"

namespace lanegraph::nn {

double lr_at_epoch(const TrainConfig& c, int epoch) {
  return epoch <= c.lr_decay_epoch ? c.lr : c.lr * c.lr_decay;
}

void Adam::step(std::vector<Tensor>& tensors, double lr) {
  ++t_;
  double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (auto& t : tensors) {
    for (size_t i = 0; i < t.val.size(); ++i) {
      double g = t.grad.d[i];
      t.adam_m.d[i] = b1_ * t.adam_m.d[i] + (1.0 - b1_) * g;
      t.adam_v.d[i] = b2_ * t.adam_v.d[i] + (1.0 - b2_) * g * g;
      double mhat = t.adam_m.d[i] / c1;
      double vhat = t.adam_v.d[i] / c2;
      t.val.d[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

std::vector<EpochStats> train_model(Model& m, const std::vector<TrainSample>& samples,
                                    const TrainConfig& cfg, std::ostream* log) {
  if (samples.empty()) throw std::invalid_argument("train: no samples");
  Adam opt(cfg.beta1, cfg.beta2, cfg.adam_eps);
  Rng rng(cfg.seed);
  std::vector<EpochStats> history;
  int n = static_cast<int>(samples.size());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double lr = lr_at_epoch(cfg, epoch);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    EpochStats st;
    st.epoch = epoch;
    st.lr = lr;
    int done = 0;
    while (done < n) {
      int take = std::min(cfg.batch_size, n - done);
      m.zero_grad();
      for (int b = 0; b < take; ++b) {
        const TrainSample& s = samples[order[done + b]];
        int rot = cfg.augment_rotations ? rng.uniform_int(0, 3) : 0;
        Model::LossBreakdown lb;
        if (rot == 0) {
          lb = m.accumulate_gradients(s.input, s.targets, cfg.alpha, 1.0 / take);
        } else {
          ModelInput in = s.input;
          Targets tgt = s.targets;
          rotate_sample(in, &tgt, rot);
          lb = m.accumulate_gradients(in, tgt, cfg.alpha, 1.0 / take);
        }
        st.loss += lb.total;
        st.boundary += lb.boundary;
        st.connectivity += lb.connectivity;
      }
      opt.step(m.tensors(), lr);
      done += take;
    }
    st.loss /= n;
    st.boundary /= n;
    st.connectivity /= n;
    history.push_back(st);
    if (log)
      (*log) << "epoch " << epoch << " lr " << lr << " loss " << st.loss << " boundary "
             << st.boundary << " connectivity " << st.connectivity << "\n";
  }
  return history;
}

}  // namespace lanegraph::nn
