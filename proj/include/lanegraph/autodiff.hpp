#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "lanegraph/kernels.hpp"

namespace lanegraph::nn {

using kernels::Mat;

// Reverse-mode tape. Nodes are created in topological order by construction;
// backward() walks them in reverse. Ops are fused at the level of whole
// attention blocks and losses to keep the graph small.
struct Node {
  Mat val;
  Mat grad;
  bool needs_grad = true;
  std::function<void()> backward;  // accumulates into parents' grad buffers
};

// Row ranges [first, second) describing how packed rows split into segments.
using Segments = std::vector<std::pair<int, int>>;

class Tape {
 public:
  // Leaves.
  Node* constant(Mat v);            // no gradient tracked
  Node* input(Mat v);               // gradient tracked (parameters, probes)

  // y = x * W^T + b, PyTorch Linear convention: W is [out, in], b is [1, out].
  Node* linear(Node* x, Node* w, Node* b);

  Node* slice_cols(Node* x, int c0, int c1);
  Node* slice_rows(Node* x, int r0, int r1);
  Node* add(Node* a, Node* b);
  Node* scale(Node* x, double s);
  Node* relu(Node* x);

  // Row-wise LayerNorm with learned gamma/beta, both [1, cols].
  Node* layernorm(Node* x, Node* gamma, Node* beta, double eps);

  // Scaled dot-product attention, multi-head over column blocks.
  // q: [nq, d], k, v: [nk, d], d divisible by heads. Output [nq, d].
  Node* attention(Node* q, Node* k, Node* v, int heads);

  // Attention restricted to independent row blocks: rows of segment i attend
  // only within segment i. q, k, v share the packed row layout.
  Node* block_attention(Node* q, Node* k, Node* v, int heads, const Segments& segs);

  // Per-segment column-wise max pooling: [packed_rows, d] -> [n_segs, d].
  // Ties resolve to the first row of the segment.
  Node* segment_max(Node* x, const Segments& segs);

  // out.row(i) = x.row(idx[i]); backward scatter-adds.
  Node* gather_rows(Node* x, std::vector<int> idx);

  Node* concat_rows(Node* a, Node* b);

  // [n, d] -> [n*n, 2d], row i*n+j = [x_i | x_j].
  Node* pairwise_concat(Node* x);

  // Mean squared boundary error over labeled rows: pred and target are
  // [n, 4] (left xy, right xy); loss = sum over labeled rows of
  // (|dl|^2 + |dr|^2) / (2 * n_boundary_points), n_boundary_points = 2*labeled.
  Node* boundary_mse(Node* pred, const Mat& target, const std::vector<unsigned char>& labeled);

  // Binary cross entropy with logits, mean over every entry of the matrix.
  Node* bce_logits_mean(Node* logits, const Mat& targets);

  // scalar: a + alpha * b
  Node* add_scaled(Node* a, Node* b, double alpha);

  // Seed the given scalar node with gradient 1 and propagate.
  void backward(Node* loss);

  size_t size() const { return nodes_.size(); }

 private:
  Node* make(int rows, int cols, bool needs_grad);
  std::vector<std::unique_ptr<Node>> nodes_;
};

}  // namespace lanegraph::nn
