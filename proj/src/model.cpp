#include "lanegraph/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "lanegraph/rng.hpp"
#include "nlohmann/json.hpp"

namespace lanegraph::nn {

using nlohmann::json;

std::string config_to_json(const ModelConfig& c) {
  json j;
  j["embed_dim"] = c.embed_dim;
  j["ffn_dim"] = c.ffn_dim;
  j["enc_layers"] = c.enc_layers;
  j["dec_layers"] = c.dec_layers;
  j["heads"] = c.heads;
  j["poly_heads"] = c.poly_heads;
  j["pair_hidden1"] = c.pair_hidden1;
  j["pair_hidden2"] = c.pair_hidden2;
  j["conn_hidden"] = c.conn_hidden;
  j["type_specific_encoders"] = c.type_specific_encoders;
  j["predict_offsets"] = c.predict_offsets;
  j["max_centers"] = c.max_centers;
  j["conn_threshold"] = c.conn_threshold;
  j["layernorm_eps"] = c.layernorm_eps;
  return j.dump();
}

ModelConfig config_from_json(const std::string& text) {
  json j = json::parse(text);
  ModelConfig c;
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
  c.enc_layers = j.value("enc_layers", c.enc_layers);
  c.dec_layers = j.value("dec_layers", c.dec_layers);
  c.heads = j.value("heads", c.heads);
  c.poly_heads = j.value("poly_heads", c.poly_heads);
  c.pair_hidden1 = j.value("pair_hidden1", c.pair_hidden1);
  c.pair_hidden2 = j.value("pair_hidden2", c.pair_hidden2);
  c.conn_hidden = j.value("conn_hidden", c.conn_hidden);
  c.type_specific_encoders = j.value("type_specific_encoders", c.type_specific_encoders);
  c.predict_offsets = j.value("predict_offsets", c.predict_offsets);
  c.max_centers = j.value("max_centers", c.max_centers);
  c.conn_threshold = j.value("conn_threshold", c.conn_threshold);
  c.layernorm_eps = j.value("layernorm_eps", c.layernorm_eps);
  return c;
}

Mat polyline_features(const Polyline& p) {
  int n = static_cast<int>(p.pts.size());
  if (n < 2) throw std::invalid_argument("polyline_features: polyline needs at least 2 points");
  Mat f(n - 1, 6);
  double is_trace = p.kind == PolylineKind::Trace ? 1.0 : 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    f.at(i, 0) = p.pts[i].x;
    f.at(i, 1) = p.pts[i].y;
    f.at(i, 2) = p.pts[i + 1].x;
    f.at(i, 3) = p.pts[i + 1].y;
    f.at(i, 4) = is_trace;
    f.at(i, 5) = 1.0 - is_trace;
  }
  return f;
}

namespace {
Point2 rot90(const Point2& p, int k) {
  switch (k & 3) {
    case 1: return {-p.y, p.x};
    case 2: return {-p.x, -p.y};
    case 3: return {p.y, -p.x};
    default: return p;
  }
}
}  // namespace

void rotate_sample(ModelInput& in, Targets* tgt, int quarter_turns) {
  int k = quarter_turns & 3;
  if (k == 0) return;
  for (auto& pl : in.polylines)
    for (auto& p : pl.pts) p = rot90(p, k);
  for (auto& c : in.centers) {
    c.pos = rot90(c.pos, k);
    c.dir = rot90(c.dir, k);
  }
  if (tgt) {
    for (int i = 0; i < tgt->pairs.rows; ++i) {
      Point2 l{tgt->pairs.at(i, 0), tgt->pairs.at(i, 1)};
      Point2 r{tgt->pairs.at(i, 2), tgt->pairs.at(i, 3)};
      l = rot90(l, k);
      r = rot90(r, k);
      tgt->pairs.at(i, 0) = l.x;
      tgt->pairs.at(i, 1) = l.y;
      tgt->pairs.at(i, 2) = r.x;
      tgt->pairs.at(i, 3) = r.y;
    }
  }
}

int Model::add_tensor(const std::string& name, int rows, int cols) {
  Tensor t;
  t.name = name;
  t.val = Mat(rows, cols);
  t.grad = Mat(rows, cols);
  t.adam_m = Mat(rows, cols);
  t.adam_v = Mat(rows, cols);
  tensors_.push_back(std::move(t));
  return static_cast<int>(tensors_.size()) - 1;
}

Model::AttnRef Model::add_attn(const std::string& prefix, int dim) {
  AttnRef r;
  r.in_w = add_tensor(prefix + ".in_proj_weight", 3 * dim, dim);
  r.in_b = add_tensor(prefix + ".in_proj_bias", 1, 3 * dim);
  r.out_w = add_tensor(prefix + ".out_proj.weight", dim, dim);
  r.out_b = add_tensor(prefix + ".out_proj.bias", 1, dim);
  return r;
}

Model::NormRef Model::add_norm(const std::string& prefix, int dim) {
  NormRef r;
  r.g = add_tensor(prefix + ".weight", 1, dim);
  r.b = add_tensor(prefix + ".bias", 1, dim);
  return r;
}

Model::Model(const ModelConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
  if (cfg.embed_dim % cfg.heads != 0 || cfg.embed_dim % cfg.poly_heads != 0)
    throw std::invalid_argument("model: embed_dim must be divisible by head counts");
  int d = cfg.embed_dim;
  int n_poly = cfg.type_specific_encoders ? 2 : 1;
  for (int i = 0; i < n_poly; ++i) {
    std::string base =
        cfg.type_specific_encoders ? (i == 0 ? "poly.trace" : "poly.boundary") : "poly.shared";
    PolyEncRef p;
    p.embed_w = add_tensor(base + ".embed.weight", d, 6);
    p.embed_b = add_tensor(base + ".embed.bias", 1, d);
    p.attn = add_attn(base + ".attn", d);
    poly_.push_back(p);
  }
  center_w_ = add_tensor("center.weight", d, 2);
  center_b_ = add_tensor("center.bias", 1, d);
  for (int i = 0; i < cfg.enc_layers; ++i) {
    std::string base = "encoder.layers." + std::to_string(i);
    EncLayerRef l;
    l.attn = add_attn(base + ".self_attn", d);
    l.l1w = add_tensor(base + ".linear1.weight", cfg.ffn_dim, d);
    l.l1b = add_tensor(base + ".linear1.bias", 1, cfg.ffn_dim);
    l.l2w = add_tensor(base + ".linear2.weight", d, cfg.ffn_dim);
    l.l2b = add_tensor(base + ".linear2.bias", 1, d);
    l.n1 = add_norm(base + ".norm1", d);
    l.n2 = add_norm(base + ".norm2", d);
    enc_.push_back(l);
  }
  enc_norm_ = add_norm("encoder.norm", d);
  for (int i = 0; i < cfg.dec_layers; ++i) {
    std::string base = "decoder.layers." + std::to_string(i);
    DecLayerRef l;
    l.self_attn = add_attn(base + ".self_attn", d);
    l.cross_attn = add_attn(base + ".multihead_attn", d);
    l.l1w = add_tensor(base + ".linear1.weight", cfg.ffn_dim, d);
    l.l1b = add_tensor(base + ".linear1.bias", 1, cfg.ffn_dim);
    l.l2w = add_tensor(base + ".linear2.weight", d, cfg.ffn_dim);
    l.l2b = add_tensor(base + ".linear2.bias", 1, d);
    l.n1 = add_norm(base + ".norm1", d);
    l.n2 = add_norm(base + ".norm2", d);
    l.n3 = add_norm(base + ".norm3", d);
    dec_.push_back(l);
  }
  dec_norm_ = add_norm("decoder.norm", d);
  pair_w_[0] = add_tensor("pair_head.0.weight", cfg.pair_hidden1, d);
  pair_b_[0] = add_tensor("pair_head.0.bias", 1, cfg.pair_hidden1);
  pair_w_[1] = add_tensor("pair_head.1.weight", cfg.pair_hidden2, cfg.pair_hidden1);
  pair_b_[1] = add_tensor("pair_head.1.bias", 1, cfg.pair_hidden2);
  pair_w_[2] = add_tensor("pair_head.2.weight", 4, cfg.pair_hidden2);
  pair_b_[2] = add_tensor("pair_head.2.bias", 1, 4);
  conn_w_[0] = add_tensor("conn_head.0.weight", cfg.conn_hidden, 2 * d);
  conn_b_[0] = add_tensor("conn_head.0.bias", 1, cfg.conn_hidden);
  conn_w_[1] = add_tensor("conn_head.1.weight", 1, cfg.conn_hidden);
  conn_b_[1] = add_tensor("conn_head.1.bias", 1, 1);
  init_weights(init_seed);
}

void Model::init_weights(uint64_t seed) {
  Rng rng(seed);
  auto uniform_fill = [&](int idx, double bound) {
    for (auto& v : tensors_[idx].val.d) v = rng.uniform(-bound, bound);
  };
  auto zero_fill = [&](int idx) { tensors_[idx].val.zero(); };
  auto ones_fill = [&](int idx) {
    for (auto& v : tensors_[idx].val.d) v = 1.0;
  };
  auto linear_fill = [&](int w, int b) {
    double bound = 1.0 / std::sqrt(static_cast<double>(tensors_[w].val.cols));
    uniform_fill(w, bound);
    uniform_fill(b, bound);
  };
  auto attn_fill = [&](const AttnRef& a) {
    // Xavier-uniform over the packed projection, zero biases.
    int d = tensors_[a.in_w].val.cols;
    uniform_fill(a.in_w, std::sqrt(6.0 / (4.0 * d)));
    zero_fill(a.in_b);
    uniform_fill(a.out_w, 1.0 / std::sqrt(static_cast<double>(d)));
    zero_fill(a.out_b);
  };
  auto norm_fill = [&](const NormRef& n) {
    ones_fill(n.g);
    zero_fill(n.b);
  };
  for (const auto& p : poly_) {
    linear_fill(p.embed_w, p.embed_b);
    attn_fill(p.attn);
  }
  linear_fill(center_w_, center_b_);
  for (const auto& l : enc_) {
    attn_fill(l.attn);
    linear_fill(l.l1w, l.l1b);
    linear_fill(l.l2w, l.l2b);
    norm_fill(l.n1);
    norm_fill(l.n2);
  }
  norm_fill(enc_norm_);
  for (const auto& l : dec_) {
    attn_fill(l.self_attn);
    attn_fill(l.cross_attn);
    linear_fill(l.l1w, l.l1b);
    linear_fill(l.l2w, l.l2b);
    norm_fill(l.n1);
    norm_fill(l.n2);
    norm_fill(l.n3);
  }
  norm_fill(dec_norm_);
  for (int i = 0; i < 3; ++i) linear_fill(pair_w_[i], pair_b_[i]);
  for (int i = 0; i < 2; ++i) linear_fill(conn_w_[i], conn_b_[i]);
}

int64_t Model::count_parameters() const {
  int64_t n = 0;
  for (const auto& t : tensors_) n += static_cast<int64_t>(t.val.size());
  return n;
}

void Model::zero_grad() {
  for (auto& t : tensors_) t.grad.zero();
}

struct Model::Graph {
  std::vector<Node*> leaves;  // one per tensor, same order
  Node* pairs = nullptr;        // [n, 4] absolute coordinates
  Node* conn_logits = nullptr;  // [n*n, 1]
  Node* tokens = nullptr;       // [n, embed_dim] decoder output
  int n_centers = 0;
};

Model::Graph Model::build_graph(Tape& tape, const ModelInput& in, bool with_grad) const {
  if (in.centers.size() < 2) throw std::invalid_argument("model: need at least 2 center queries");
  if (in.polylines.empty()) throw std::invalid_argument("model: no input polylines");
  if (static_cast<int>(in.centers.size()) > cfg_.max_centers)
    throw std::invalid_argument("model: center count exceeds max_centers");
  for (const auto& p : in.polylines)
    if (p.pts.size() < 2) throw std::invalid_argument("model: polyline with fewer than 2 points");

  Graph g;
  g.n_centers = static_cast<int>(in.centers.size());
  g.leaves.reserve(tensors_.size());
  for (const auto& t : tensors_)
    g.leaves.push_back(with_grad ? tape.input(t.val) : tape.constant(t.val));
  auto L = [&](int idx) { return g.leaves[idx]; };

  int d = cfg_.embed_dim;

  // Attention block in PyTorch MultiheadAttention shape: packed input
  // projection, scaled dot-product, output projection.
  auto self_attention = [&](Node* x, const AttnRef& a, int heads) {
    Node* qkv = tape.linear(x, L(a.in_w), L(a.in_b));
    Node* q = tape.slice_cols(qkv, 0, d);
    Node* k = tape.slice_cols(qkv, d, 2 * d);
    Node* v = tape.slice_cols(qkv, 2 * d, 3 * d);
    Node* att = tape.attention(q, k, v, heads);
    return tape.linear(att, L(a.out_w), L(a.out_b));
  };
  auto cross_attention = [&](Node* xq, Node* mem, const AttnRef& a, int heads) {
    Node* wq = tape.slice_rows(L(a.in_w), 0, d);
    Node* wk = tape.slice_rows(L(a.in_w), d, 2 * d);
    Node* wv = tape.slice_rows(L(a.in_w), 2 * d, 3 * d);
    Node* bq = tape.slice_cols(L(a.in_b), 0, d);
    Node* bk = tape.slice_cols(L(a.in_b), d, 2 * d);
    Node* bv = tape.slice_cols(L(a.in_b), 2 * d, 3 * d);
    Node* q = tape.linear(xq, wq, bq);
    Node* k = tape.linear(mem, wk, bk);
    Node* v = tape.linear(mem, wv, bv);
    Node* att = tape.attention(q, k, v, heads);
    return tape.linear(att, L(a.out_w), L(a.out_b));
  };
  auto ffn = [&](Node* x, int l1w, int l1b, int l2w, int l2b) {
    return tape.linear(tape.relu(tape.linear(x, L(l1w), L(l1b))), L(l2w), L(l2b));
  };
  auto norm = [&](Node* x, const NormRef& n) {
    return tape.layernorm(x, L(n.g), L(n.b), cfg_.layernorm_eps);
  };

  // Polyline encoders: embed points, one self-attention pass within each
  // polyline, max-pool to a single token.
  int n_poly = static_cast<int>(in.polylines.size());
  std::vector<int> order(n_poly, -1);  // original index -> pooled row
  std::vector<Node*> pooled_parts;
  if (cfg_.type_specific_encoders) {
    int pooled_base = 0;
    for (int enc_i = 0; enc_i < 2; ++enc_i) {
      PolylineKind want = enc_i == 0 ? PolylineKind::Trace : PolylineKind::Boundary;
      Segments segs;
      int rows = 0, count = 0;
      for (int i = 0; i < n_poly; ++i)
        if (in.polylines[i].kind == want) {
          order[i] = pooled_base + count++;
          int n = static_cast<int>(in.polylines[i].pts.size()) - 1;  // segment rows
          segs.push_back({rows, rows + n});
          rows += n;
        }
      if (count == 0) continue;
      Mat packed(rows, 6);
      int r = 0;
      for (int i = 0; i < n_poly; ++i) {
        if (in.polylines[i].kind != want) continue;
        Mat f = polyline_features(in.polylines[i]);
        std::copy(f.d.begin(), f.d.end(), packed.row(r));
        r += f.rows;
      }
      const PolyEncRef& pe = poly_[enc_i];
      Node* x = tape.linear(tape.constant(std::move(packed)), L(pe.embed_w), L(pe.embed_b));
      Node* qkv = tape.linear(x, L(pe.attn.in_w), L(pe.attn.in_b));
      Node* q = tape.slice_cols(qkv, 0, d);
      Node* k = tape.slice_cols(qkv, d, 2 * d);
      Node* v = tape.slice_cols(qkv, 2 * d, 3 * d);
      Node* att = tape.block_attention(q, k, v, cfg_.poly_heads, segs);
      Node* out = tape.linear(att, L(pe.attn.out_w), L(pe.attn.out_b));
      pooled_parts.push_back(tape.segment_max(out, segs));
      pooled_base += count;
    }
  } else {
    Segments segs;
    int rows = 0;
    for (int i = 0; i < n_poly; ++i) {
      order[i] = i;
      int n = static_cast<int>(in.polylines[i].pts.size()) - 1;  // segment rows
      segs.push_back({rows, rows + n});
      rows += n;
    }
    Mat packed(rows, 6);
    int r = 0;
    for (int i = 0; i < n_poly; ++i) {
      Mat f = polyline_features(in.polylines[i]);
      std::copy(f.d.begin(), f.d.end(), packed.row(r));
      r += f.rows;
    }
    const PolyEncRef& pe = poly_[0];
    Node* x = tape.linear(tape.constant(std::move(packed)), L(pe.embed_w), L(pe.embed_b));
    Node* qkv = tape.linear(x, L(pe.attn.in_w), L(pe.attn.in_b));
    Node* q = tape.slice_cols(qkv, 0, d);
    Node* k = tape.slice_cols(qkv, d, 2 * d);
    Node* v = tape.slice_cols(qkv, 2 * d, 3 * d);
    Node* att = tape.block_attention(q, k, v, cfg_.poly_heads, segs);
    Node* out = tape.linear(att, L(pe.attn.out_w), L(pe.attn.out_b));
    pooled_parts.push_back(tape.segment_max(out, segs));
  }

  Node* pooled;
  if (pooled_parts.size() == 2)
    pooled = tape.concat_rows(pooled_parts[0], pooled_parts[1]);
  else
    pooled = pooled_parts[0];
  Node* tokens = tape.gather_rows(pooled, order);  // back to input order

  // Transformer encoder over polyline tokens, post-norm residual layers.
  Node* mem = tokens;
  for (const auto& l : enc_) {
    mem = norm(tape.add(mem, self_attention(mem, l.attn, cfg_.heads)), l.n1);
    mem = norm(tape.add(mem, ffn(mem, l.l1w, l.l1b, l.l2w, l.l2b)), l.n2);
  }
  mem = norm(mem, enc_norm_);

  // Center queries: position-only embedding.
  Mat cfeat(g.n_centers, 2);
  for (int i = 0; i < g.n_centers; ++i) {
    cfeat.at(i, 0) = in.centers[i].pos.x;
    cfeat.at(i, 1) = in.centers[i].pos.y;
  }
  Node* qx = tape.linear(tape.constant(std::move(cfeat)), L(center_w_), L(center_b_));

  for (const auto& l : dec_) {
    qx = norm(tape.add(qx, self_attention(qx, l.self_attn, cfg_.heads)), l.n1);
    qx = norm(tape.add(qx, cross_attention(qx, mem, l.cross_attn, cfg_.heads)), l.n2);
    qx = norm(tape.add(qx, ffn(qx, l.l1w, l.l1b, l.l2w, l.l2b)), l.n3);
  }
  qx = norm(qx, dec_norm_);
  g.tokens = qx;

  Node* ph = tape.relu(tape.linear(qx, L(pair_w_[0]), L(pair_b_[0])));
  ph = tape.relu(tape.linear(ph, L(pair_w_[1]), L(pair_b_[1])));
  Node* pred = tape.linear(ph, L(pair_w_[2]), L(pair_b_[2]));
  if (cfg_.predict_offsets) {
    Mat base(g.n_centers, 4);
    for (int i = 0; i < g.n_centers; ++i) {
      base.at(i, 0) = in.centers[i].pos.x;
      base.at(i, 1) = in.centers[i].pos.y;
      base.at(i, 2) = in.centers[i].pos.x;
      base.at(i, 3) = in.centers[i].pos.y;
    }
    pred = tape.add(pred, tape.constant(std::move(base)));
  }
  g.pairs = pred;

  Node* pc = tape.pairwise_concat(qx);
  Node* ch = tape.relu(tape.linear(pc, L(conn_w_[0]), L(conn_b_[0])));
  g.conn_logits = tape.linear(ch, L(conn_w_[1]), L(conn_b_[1]));
  return g;
}

Model::Output Model::forward(const ModelInput& in) const {
  Tape tape;
  Graph g = build_graph(tape, in, false);
  Output out;
  out.pairs = g.pairs->val;
  out.tokens = g.tokens->val;
  int n = g.n_centers;
  out.conn_logits = Mat(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.conn_logits.at(i, j) = g.conn_logits->val.at(i * n + j, 0);
  return out;
}

Mat Model::encode_polyline(const Mat& features) const {
  if (features.rows < 1 || features.cols != 6)
    throw std::invalid_argument("encode_polyline: expected at least one 6-wide feature row");
  // Kind one-hot picks the encoder when they are type specific.
  const PolyEncRef& pe =
      cfg_.type_specific_encoders && features.at(0, 4) == 0.0 ? poly_[1] : poly_[0];
  Tape tape;
  auto L = [&](int idx) { return tape.constant(tensors_[idx].val); };
  int d = cfg_.embed_dim;
  Node* x = tape.linear(tape.constant(features), L(pe.embed_w), L(pe.embed_b));
  Node* qkv = tape.linear(x, L(pe.attn.in_w), L(pe.attn.in_b));
  Node* q = tape.slice_cols(qkv, 0, d);
  Node* k = tape.slice_cols(qkv, d, 2 * d);
  Node* v = tape.slice_cols(qkv, 2 * d, 3 * d);
  Node* att = tape.attention(q, k, v, cfg_.poly_heads);
  Node* out = tape.linear(att, L(pe.attn.out_w), L(pe.attn.out_b));
  Segments segs{{0, features.rows}};
  return tape.segment_max(out, segs)->val;
}

Mat Model::encode_center(const CenterPoint& c) const {
  const Mat& w = tensors_[center_w_].val;
  const Mat& b = tensors_[center_b_].val;
  Mat out(1, cfg_.embed_dim);
  for (int j = 0; j < cfg_.embed_dim; ++j)
    out.at(0, j) = w.at(j, 0) * c.pos.x + w.at(j, 1) * c.pos.y + b.at(0, j);
  return out;
}

namespace {
Model::LossBreakdown graph_loss(Tape& tape, Node* pairs, Node* conn_logits,
                                const Targets& tgt, double alpha, Node** joint_out) {
  Node* lb = tape.boundary_mse(pairs, tgt.pairs, tgt.labeled);
  Node* lc = tape.bce_logits_mean(conn_logits, tgt.adjacency);
  Node* joint = tape.add_scaled(lb, lc, alpha);
  Model::LossBreakdown out;
  out.boundary = lb->val.at(0, 0);
  out.connectivity = lc->val.at(0, 0);
  out.total = joint->val.at(0, 0);
  if (joint_out) *joint_out = joint;
  return out;
}

Mat flatten_targets(const Mat& adj) {
  Mat t(adj.rows * adj.cols, 1);
  std::copy(adj.d.begin(), adj.d.end(), t.d.begin());
  return t;
}
}  // namespace

Model::LossBreakdown Model::accumulate_gradients(const ModelInput& in, const Targets& tgt,
                                                 double alpha, double grad_scale) {
  int n = static_cast<int>(in.centers.size());
  if (tgt.pairs.rows != n || tgt.adjacency.rows != n || tgt.adjacency.cols != n)
    throw std::invalid_argument("model: targets do not match center count");
  Tape tape;
  Graph g = build_graph(tape, in, true);
  Node* joint = nullptr;
  Targets tmp;
  tmp.pairs = tgt.pairs;
  tmp.labeled = tgt.labeled;
  tmp.adjacency = flatten_targets(tgt.adjacency);
  LossBreakdown lb = graph_loss(tape, g.pairs, g.conn_logits, tmp, alpha, &joint);
  Node* scaled = tape.scale(joint, grad_scale);
  tape.backward(scaled);
  for (size_t i = 0; i < tensors_.size(); ++i) {
    const Mat& src = g.leaves[i]->grad;
    Mat& dst = tensors_[i].grad;
    for (size_t k = 0; k < dst.size(); ++k) dst.d[k] += src.d[k];
  }
  if (!std::isfinite(lb.total))
    throw std::runtime_error("model: non-finite loss");
  return lb;
}

Model::LossBreakdown Model::loss_only(const ModelInput& in, const Targets& tgt,
                                      double alpha) const {
  int n = static_cast<int>(in.centers.size());
  if (tgt.pairs.rows != n || tgt.adjacency.rows != n || tgt.adjacency.cols != n)
    throw std::invalid_argument("model: targets do not match center count");
  Tape tape;
  Graph g = build_graph(tape, in, false);
  Targets tmp;
  tmp.pairs = tgt.pairs;
  tmp.labeled = tgt.labeled;
  tmp.adjacency = flatten_targets(tgt.adjacency);
  return graph_loss(tape, g.pairs, g.conn_logits, tmp, alpha, nullptr);
}

LaneGraph Model::predict(const ModelInput& in) const {
  Output out = forward(in);
  int n = static_cast<int>(in.centers.size());
  LaneGraph g;
  g.pairs.reserve(n);
  for (int i = 0; i < n; ++i) {
    LanePair p;
    p.center = in.centers[i].pos;
    p.left = {out.pairs.at(i, 0), out.pairs.at(i, 1)};
    p.right = {out.pairs.at(i, 2), out.pairs.at(i, 3)};
    g.pairs.push_back(p);
  }
  g.resize_adj();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;  // self edges are never emitted
      double sig = 1.0 / (1.0 + std::exp(-out.conn_logits.at(i, j)));
      g.set_edge(i, j, sig >= cfg_.conn_threshold);
    }
  }
  return g;
}

namespace {
template <typename T>
void write_pod(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_pod(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}
constexpr char kMagic[8] = {'L', 'M', 'T', 'C', 'K', 'P', 'T', '1'};
}  // namespace

void save_checkpoint(const std::string& path, const Model& m) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  f.write(kMagic, 8);
  write_pod<uint32_t>(f, 1);  // format version
  std::string cfg = config_to_json(m.config());
  write_pod<uint32_t>(f, static_cast<uint32_t>(cfg.size()));
  f.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  write_pod<uint64_t>(f, m.tensors().size());
  for (const auto& t : m.tensors()) {
    write_pod<uint32_t>(f, static_cast<uint32_t>(t.name.size()));
    f.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_pod<uint32_t>(f, static_cast<uint32_t>(t.val.rows));
    write_pod<uint32_t>(f, static_cast<uint32_t>(t.val.cols));
    f.write(reinterpret_cast<const char*>(t.val.d.data()),
            static_cast<std::streamsize>(t.val.size() * sizeof(double)));
  }
  if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

Model load_checkpoint(const std::string& path, const ModelConfig* expected) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  uint32_t version = read_pod<uint32_t>(f);
  if (version != 1)
    throw std::runtime_error("checkpoint: unsupported format version " +
                             std::to_string(version));
  uint32_t cfg_len = read_pod<uint32_t>(f);
  std::string cfg_text(cfg_len, '\0');
  f.read(cfg_text.data(), cfg_len);
  ModelConfig cfg = config_from_json(cfg_text);
  if (expected && !(cfg == *expected))
    throw std::runtime_error("checkpoint: stored config " + config_to_json(cfg) +
                             " does not match expected " + config_to_json(*expected));
  Model m(cfg, 0);
  uint64_t n_tensors = read_pod<uint64_t>(f);
  if (n_tensors != m.tensors().size())
    throw std::runtime_error("checkpoint: tensor count mismatch in " + path);
  for (auto& t : m.tensors()) {
    uint32_t name_len = read_pod<uint32_t>(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    uint32_t rows = read_pod<uint32_t>(f);
    uint32_t cols = read_pod<uint32_t>(f);
    if (name != t.name || rows != static_cast<uint32_t>(t.val.rows) ||
        cols != static_cast<uint32_t>(t.val.cols))
      throw std::runtime_error("checkpoint: tensor layout mismatch at " + t.name);
    f.read(reinterpret_cast<char*>(t.val.d.data()),
           static_cast<std::streamsize>(t.val.size() * sizeof(double)));
  }
  if (!f) throw std::runtime_error("checkpoint: truncated file " + path);
  return m;
}

}  // namespace lanegraph::nn
