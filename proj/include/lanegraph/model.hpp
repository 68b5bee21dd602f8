#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lanegraph/autodiff.hpp"
#include "lanegraph/geometry.hpp"
#include "lanegraph/kernels.hpp"

namespace lanegraph::nn {

struct ModelConfig {
  int embed_dim = 256;
  int ffn_dim = 128;
  int enc_layers = 2;
  int dec_layers = 4;
  int heads = 4;       // encoder/decoder attention heads
  int poly_heads = 2;  // polyline encoder attention heads
  int pair_hidden1 = 32;
  int pair_hidden2 = 16;
  int conn_hidden = 256;
  bool type_specific_encoders = true;
  // Pair head output interpreted as offsets from the query center instead of
  // absolute coordinates. Same parameter count, same losses and metrics.
  bool predict_offsets = false;
  int max_centers = 50;
  double conn_threshold = 0.8;
  double layernorm_eps = 1e-5;

  bool operator==(const ModelConfig&) const = default;
};

std::string config_to_json(const ModelConfig& c);
ModelConfig config_from_json(const std::string& json);

// One learnable tensor with its gradient accumulator and Adam state.
struct Tensor {
  std::string name;
  Mat val;
  Mat grad;
  Mat adam_m;
  Mat adam_v;
};

// Everything the network consumes for one minimap, already in tile-local
// coordinates.
struct ModelInput {
  std::vector<Polyline> polylines;
  std::vector<CenterPoint> centers;
};

// Supervision for one minimap, aligned with ModelInput::centers.
struct Targets {
  Mat pairs;  // [n, 4]: left xy, right xy, absolute tile coordinates
  std::vector<unsigned char> labeled;
  Mat adjacency;  // [n, n] of {0, 1}
};

// Per-segment features: own x, y, successor x, y, kind one-hot (trace,
// boundary). A polyline of N points yields N-1 rows; N < 2 throws.
Mat polyline_features(const Polyline& p);

// In-place quarter-turn rotation of a sample (exact integer rotation about
// the tile origin). Center-relative and absolute targets rotate identically.
void rotate_sample(ModelInput& in, Targets* tgt, int quarter_turns);

class Model {
 public:
  Model(const ModelConfig& cfg, uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  int64_t count_parameters() const;
  void zero_grad();

  struct Output {
    Mat pairs;        // [n, 4] absolute boundary coordinates
    Mat conn_logits;  // [n, n]
    Mat tokens;       // [n, embed_dim] decoder latents, one per query
  };
  Output forward(const ModelInput& in) const;

  // Single-polyline encoder: embed rows, one self-attention pass, element-wise
  // max over rows. Returns [1, embed_dim]. The kind one-hot in the features
  // selects the encoder when type_specific_encoders is set.
  Mat encode_polyline(const Mat& features) const;

  // Query embedding, a linear map of the center position. Returns [1, embed_dim].
  Mat encode_center(const CenterPoint& c) const;

  struct LossBreakdown {
    double total = 0.0;
    double boundary = 0.0;
    double connectivity = 0.0;
  };
  // Runs forward + backward and accumulates grad_scale * dLoss/dParam into the
  // tensors' grad buffers. Returns the (unscaled) loss values.
  LossBreakdown accumulate_gradients(const ModelInput& in, const Targets& tgt,
                                     double alpha, double grad_scale);

  LossBreakdown loss_only(const ModelInput& in, const Targets& tgt, double alpha) const;

  // Thresholded prediction: sigmoid(logit) >= conn_threshold keeps an edge,
  // the diagonal is always dropped.
  LaneGraph predict(const ModelInput& in) const;

 private:
  struct AttnRef {
    int in_w, in_b, out_w, out_b;
  };
  struct NormRef {
    int g, b;
  };
  struct PolyEncRef {
    int embed_w, embed_b;
    AttnRef attn;
  };
  struct EncLayerRef {
    AttnRef attn;
    int l1w, l1b, l2w, l2b;
    NormRef n1, n2;
  };
  struct DecLayerRef {
    AttnRef self_attn, cross_attn;
    int l1w, l1b, l2w, l2b;
    NormRef n1, n2, n3;
  };

  int add_tensor(const std::string& name, int rows, int cols);
  AttnRef add_attn(const std::string& prefix, int dim);
  NormRef add_norm(const std::string& prefix, int dim);
  void init_weights(uint64_t seed);

  struct Graph;  // forward products on a tape
  Graph build_graph(Tape& tape, const ModelInput& in, bool with_grad) const;

  ModelConfig cfg_;
  std::vector<Tensor> tensors_;
  std::vector<PolyEncRef> poly_;  // [trace, boundary] or a single shared one
  int center_w_, center_b_;
  std::vector<EncLayerRef> enc_;
  std::vector<DecLayerRef> dec_;
  NormRef enc_norm_, dec_norm_;
  int pair_w_[3], pair_b_[3];
  int conn_w_[2], conn_b_[2];

  friend void save_checkpoint(const std::string& path, const Model& m);
};

void save_checkpoint(const std::string& path, const Model& m);
// Throws with a message naming both configs when the stored config disagrees
// with `expected` (pass nullptr to accept whatever is stored).
Model load_checkpoint(const std::string& path, const ModelConfig* expected);

}  // namespace lanegraph::nn
