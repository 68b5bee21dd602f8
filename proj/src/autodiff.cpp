#include "lanegraph/autodiff.hpp"

#include <cassert>
#include <cmath>

namespace lanegraph::nn {

using kernels::matmul;
using kernels::matmul_nt;
using kernels::matmul_tn;

Node* Tape::make(int rows, int cols, bool needs_grad) {
  auto n = std::make_unique<Node>();
  n->val = Mat(rows, cols);
  if (needs_grad) n->grad = Mat(rows, cols);
  n->needs_grad = needs_grad;
  Node* p = n.get();
  nodes_.push_back(std::move(n));
  return p;
}

Node* Tape::constant(Mat v) {
  auto n = std::make_unique<Node>();
  n->val = std::move(v);
  n->needs_grad = false;
  Node* p = n.get();
  nodes_.push_back(std::move(n));
  return p;
}

Node* Tape::input(Mat v) {
  auto n = std::make_unique<Node>();
  n->grad = Mat(v.rows, v.cols);
  n->val = std::move(v);
  Node* p = n.get();
  nodes_.push_back(std::move(n));
  return p;
}

Node* Tape::linear(Node* x, Node* w, Node* b) {
  assert(x->val.cols == w->val.cols);
  Node* y = make(x->val.rows, w->val.rows, true);
  matmul_nt(x->val, w->val, y->val);
  if (b) {
    assert(b->val.rows == 1 && b->val.cols == y->val.cols);
    for (int i = 0; i < y->val.rows; ++i) {
      double* r = y->val.row(i);
      const double* bv = b->val.row(0);
      for (int j = 0; j < y->val.cols; ++j) r[j] += bv[j];
    }
  }
  y->backward = [x, w, b, y]() {
    if (x->needs_grad) {
      Mat dx(x->val.rows, x->val.cols);
      matmul(y->grad, w->val, dx);
      for (size_t i = 0; i < dx.size(); ++i) x->grad.d[i] += dx.d[i];
    }
    if (w->needs_grad) {
      Mat dw(w->val.rows, w->val.cols);
      matmul_tn(y->grad, x->val, dw);
      for (size_t i = 0; i < dw.size(); ++i) w->grad.d[i] += dw.d[i];
    }
    if (b && b->needs_grad) {
      for (int i = 0; i < y->grad.rows; ++i) {
        const double* r = y->grad.row(i);
        for (int j = 0; j < y->grad.cols; ++j) b->grad.d[j] += r[j];
      }
    }
  };
  return y;
}

Node* Tape::slice_cols(Node* x, int c0, int c1) {
  assert(0 <= c0 && c0 < c1 && c1 <= x->val.cols);
  Node* y = make(x->val.rows, c1 - c0, true);
  for (int i = 0; i < x->val.rows; ++i) {
    const double* src = x->val.row(i);
    double* dst = y->val.row(i);
    for (int j = c0; j < c1; ++j) dst[j - c0] = src[j];
  }
  y->backward = [x, y, c0, c1]() {
    if (!x->needs_grad) return;
    for (int i = 0; i < y->grad.rows; ++i) {
      const double* src = y->grad.row(i);
      double* dst = x->grad.row(i);
      for (int j = c0; j < c1; ++j) dst[j] += src[j - c0];
    }
  };
  return y;
}

Node* Tape::slice_rows(Node* x, int r0, int r1) {
  assert(0 <= r0 && r0 < r1 && r1 <= x->val.rows);
  Node* y = make(r1 - r0, x->val.cols, true);
  for (int i = r0; i < r1; ++i)
    for (int j = 0; j < x->val.cols; ++j) y->val.at(i - r0, j) = x->val.at(i, j);
  y->backward = [x, y, r0]() {
    if (!x->needs_grad) return;
    for (int i = 0; i < y->grad.rows; ++i) {
      const double* src = y->grad.row(i);
      double* dst = x->grad.row(i + r0);
      for (int j = 0; j < y->grad.cols; ++j) dst[j] += src[j];
    }
  };
  return y;
}

Node* Tape::add(Node* a, Node* b) {
  assert(a->val.rows == b->val.rows && a->val.cols == b->val.cols);
  Node* y = make(a->val.rows, a->val.cols, true);
  for (size_t i = 0; i < y->val.size(); ++i) y->val.d[i] = a->val.d[i] + b->val.d[i];
  y->backward = [a, b, y]() {
    if (a->needs_grad)
      for (size_t i = 0; i < y->grad.size(); ++i) a->grad.d[i] += y->grad.d[i];
    if (b->needs_grad)
      for (size_t i = 0; i < y->grad.size(); ++i) b->grad.d[i] += y->grad.d[i];
  };
  return y;
}

Node* Tape::scale(Node* x, double s) {
  Node* y = make(x->val.rows, x->val.cols, true);
  for (size_t i = 0; i < y->val.size(); ++i) y->val.d[i] = s * x->val.d[i];
  y->backward = [x, y, s]() {
    if (!x->needs_grad) return;
    for (size_t i = 0; i < y->grad.size(); ++i) x->grad.d[i] += s * y->grad.d[i];
  };
  return y;
}

Node* Tape::relu(Node* x) {
  Node* y = make(x->val.rows, x->val.cols, true);
  kernels::relu(x->val, y->val);
  y->backward = [x, y]() {
    if (!x->needs_grad) return;
    for (size_t i = 0; i < y->grad.size(); ++i)
      if (x->val.d[i] > 0.0) x->grad.d[i] += y->grad.d[i];
  };
  return y;
}

Node* Tape::layernorm(Node* x, Node* gamma, Node* beta, double eps) {
  assert(gamma->val.rows == 1 && gamma->val.cols == x->val.cols);
  assert(beta->val.rows == 1 && beta->val.cols == x->val.cols);
  Node* y = make(x->val.rows, x->val.cols, true);
  // stats: per row mean and inv_std, kept alive by the closure
  auto stats = std::make_shared<Mat>(x->val.rows, 2);
  kernels::layernorm_rows(x->val, gamma->val.row(0), beta->val.row(0), eps, y->val,
                          stats.get());
  y->backward = [x, gamma, beta, y, stats]() {
    int n = x->val.cols;
    const double* g = gamma->val.row(0);
    for (int i = 0; i < y->grad.rows; ++i) {
      double mean = stats->at(i, 0), inv_std = stats->at(i, 1);
      const double* xr = x->val.row(i);
      const double* dy = y->grad.row(i);
      double sum_gdy = 0.0, sum_gdyx = 0.0;
      for (int j = 0; j < n; ++j) {
        double xhat = (xr[j] - mean) * inv_std;
        double gdy = g[j] * dy[j];
        sum_gdy += gdy;
        sum_gdyx += gdy * xhat;
      }
      if (x->needs_grad) {
        double* dx = x->grad.row(i);
        for (int j = 0; j < n; ++j) {
          double xhat = (xr[j] - mean) * inv_std;
          dx[j] += inv_std * (g[j] * dy[j] - (sum_gdy + xhat * sum_gdyx) / n);
        }
      }
      if (gamma->needs_grad) {
        for (int j = 0; j < n; ++j) {
          double xhat = (xr[j] - mean) * inv_std;
          gamma->grad.d[j] += dy[j] * xhat;
        }
      }
      if (beta->needs_grad) {
        for (int j = 0; j < n; ++j) beta->grad.d[j] += dy[j];
      }
    }
  };
  return y;
}

namespace {
// Forward of one attention head over a row window; probs filled with the
// softmax matrix for reuse in backward.
void head_forward(const Mat& q, const Mat& k, const Mat& v, int c0, int dh, int q0,
                  int q1, int k0, int k1, Mat& probs, Mat& out) {
  double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  int nq = q1 - q0, nk = k1 - k0;
  for (int i = 0; i < nq; ++i) {
    const double* qr = q.row(q0 + i) + c0;
    double* pr = probs.row(i);
    for (int j = 0; j < nk; ++j) {
      const double* kr = k.row(k0 + j) + c0;
      double acc = 0.0;
      for (int c = 0; c < dh; ++c) acc += qr[c] * kr[c];
      pr[j] = acc * inv_scale;
    }
  }
  kernels::softmax_rows(probs, nullptr);
  for (int i = 0; i < nq; ++i) {
    double* orow = out.row(q0 + i) + c0;
    std::fill(orow, orow + dh, 0.0);
    const double* pr = probs.row(i);
    for (int j = 0; j < nk; ++j) {
      double p = pr[j];
      if (p == 0.0) continue;
      const double* vr = v.row(k0 + j) + c0;
      for (int c = 0; c < dh; ++c) orow[c] += p * vr[c];
    }
  }
}

// Backward of one head given output grads; accumulates into dq, dk, dv.
void head_backward(const Mat& q, const Mat& k, const Mat& v, const Mat& probs, int c0,
                   int dh, int q0, int q1, int k0, int k1, const Mat& dout, Mat& dq,
                   Mat& dk, Mat& dv) {
  double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  int nq = q1 - q0, nk = k1 - k0;
  std::vector<double> dp(nk);
  for (int i = 0; i < nq; ++i) {
    const double* dor = dout.row(q0 + i) + c0;
    const double* pr = probs.row(i);
    // dP = dOut * V^T ; dV += P^T dOut
    for (int j = 0; j < nk; ++j) {
      const double* vr = v.row(k0 + j) + c0;
      double acc = 0.0;
      for (int c = 0; c < dh; ++c) acc += dor[c] * vr[c];
      dp[j] = acc;
      double p = pr[j];
      if (p != 0.0) {
        double* dvr = dv.row(k0 + j) + c0;
        for (int c = 0; c < dh; ++c) dvr[c] += p * dor[c];
      }
    }
    // dS = P .* (dP - sum(dP .* P)), then dQ += dS K / scale, dK += dS^T Q / scale
    double dot = 0.0;
    for (int j = 0; j < nk; ++j) dot += dp[j] * pr[j];
    double* dqr = dq.row(q0 + i) + c0;
    const double* qr = q.row(q0 + i) + c0;
    for (int j = 0; j < nk; ++j) {
      double ds = pr[j] * (dp[j] - dot) * inv_scale;
      if (ds == 0.0) continue;
      const double* kr = k.row(k0 + j) + c0;
      double* dkr = dk.row(k0 + j) + c0;
      for (int c = 0; c < dh; ++c) {
        dqr[c] += ds * kr[c];
        dkr[c] += ds * qr[c];
      }
    }
  }
}
}  // namespace

Node* Tape::attention(Node* q, Node* k, Node* v, int heads) {
  int d = q->val.cols;
  assert(d % heads == 0 && k->val.cols == d && v->val.cols == d);
  assert(k->val.rows == v->val.rows);
  int dh = d / heads;
  int nq = q->val.rows, nk = k->val.rows;
  Node* y = make(nq, d, true);
  auto probs = std::make_shared<std::vector<Mat>>();
  probs->reserve(heads);
  for (int h = 0; h < heads; ++h) {
    probs->emplace_back(nq, nk);
    head_forward(q->val, k->val, v->val, h * dh, dh, 0, nq, 0, nk, (*probs)[h], y->val);
  }
  y->backward = [q, k, v, y, probs, heads, dh, nq, nk]() {
    Mat dq(q->val.rows, q->val.cols), dk(k->val.rows, k->val.cols),
        dv(v->val.rows, v->val.cols);
    for (int h = 0; h < heads; ++h)
      head_backward(q->val, k->val, v->val, (*probs)[h], h * dh, dh, 0, nq, 0, nk,
                    y->grad, dq, dk, dv);
    if (q->needs_grad)
      for (size_t i = 0; i < dq.size(); ++i) q->grad.d[i] += dq.d[i];
    if (k->needs_grad)
      for (size_t i = 0; i < dk.size(); ++i) k->grad.d[i] += dk.d[i];
    if (v->needs_grad)
      for (size_t i = 0; i < dv.size(); ++i) v->grad.d[i] += dv.d[i];
  };
  return y;
}

Node* Tape::block_attention(Node* q, Node* k, Node* v, int heads, const Segments& segs) {
  int d = q->val.cols;
  assert(d % heads == 0 && k->val.cols == d && v->val.cols == d);
  int dh = d / heads;
  Node* y = make(q->val.rows, d, true);
  auto probs = std::make_shared<std::vector<Mat>>();
  probs->reserve(segs.size() * heads);
  for (const auto& [a, b] : segs) {
    assert(0 <= a && a < b && b <= q->val.rows);
    for (int h = 0; h < heads; ++h) {
      probs->emplace_back(b - a, b - a);
      head_forward(q->val, k->val, v->val, h * dh, dh, a, b, a, b, probs->back(),
                   y->val);
    }
  }
  auto segs_copy = std::make_shared<Segments>(segs);
  y->backward = [q, k, v, y, probs, heads, dh, segs_copy]() {
    Mat dq(q->val.rows, q->val.cols), dk(k->val.rows, k->val.cols),
        dv(v->val.rows, v->val.cols);
    size_t pi = 0;
    for (const auto& [a, b] : *segs_copy)
      for (int h = 0; h < heads; ++h)
        head_backward(q->val, k->val, v->val, (*probs)[pi++], h * dh, dh, a, b, a, b,
                      y->grad, dq, dk, dv);
    if (q->needs_grad)
      for (size_t i = 0; i < dq.size(); ++i) q->grad.d[i] += dq.d[i];
    if (k->needs_grad)
      for (size_t i = 0; i < dk.size(); ++i) k->grad.d[i] += dk.d[i];
    if (v->needs_grad)
      for (size_t i = 0; i < dv.size(); ++i) v->grad.d[i] += dv.d[i];
  };
  return y;
}

Node* Tape::segment_max(Node* x, const Segments& segs) {
  int d = x->val.cols;
  Node* y = make(static_cast<int>(segs.size()), d, true);
  auto arg = std::make_shared<std::vector<int>>(segs.size() * d);
  for (size_t s = 0; s < segs.size(); ++s) {
    auto [a, b] = segs[s];
    assert(a < b);
    double* yr = y->val.row(static_cast<int>(s));
    int* ar = arg->data() + s * d;
    for (int j = 0; j < d; ++j) {
      double best = x->val.at(a, j);
      int bi = a;
      for (int i = a + 1; i < b; ++i) {
        double v = x->val.at(i, j);
        if (v > best) {  // strict: ties keep the first row
          best = v;
          bi = i;
        }
      }
      yr[j] = best;
      ar[j] = bi;
    }
  }
  y->backward = [x, y, arg]() {
    if (!x->needs_grad) return;
    int d = x->val.cols;
    for (int s = 0; s < y->grad.rows; ++s) {
      const double* dy = y->grad.row(s);
      const int* ar = arg->data() + static_cast<size_t>(s) * d;
      for (int j = 0; j < d; ++j) x->grad.at(ar[j], j) += dy[j];
    }
  };
  return y;
}

Node* Tape::gather_rows(Node* x, std::vector<int> idx) {
  Node* y = make(static_cast<int>(idx.size()), x->val.cols, true);
  for (size_t i = 0; i < idx.size(); ++i) {
    assert(idx[i] >= 0 && idx[i] < x->val.rows);
    const double* src = x->val.row(idx[i]);
    double* dst = y->val.row(static_cast<int>(i));
    std::copy(src, src + x->val.cols, dst);
  }
  auto idx_copy = std::make_shared<std::vector<int>>(std::move(idx));
  y->backward = [x, y, idx_copy]() {
    if (!x->needs_grad) return;
    for (size_t i = 0; i < idx_copy->size(); ++i) {
      const double* src = y->grad.row(static_cast<int>(i));
      double* dst = x->grad.row((*idx_copy)[i]);
      for (int j = 0; j < y->grad.cols; ++j) dst[j] += src[j];
    }
  };
  return y;
}

Node* Tape::concat_rows(Node* a, Node* b) {
  assert(a->val.cols == b->val.cols);
  Node* y = make(a->val.rows + b->val.rows, a->val.cols, true);
  std::copy(a->val.d.begin(), a->val.d.end(), y->val.d.begin());
  std::copy(b->val.d.begin(), b->val.d.end(), y->val.d.begin() + a->val.size());
  y->backward = [a, b, y]() {
    if (a->needs_grad)
      for (size_t i = 0; i < a->grad.size(); ++i) a->grad.d[i] += y->grad.d[i];
    if (b->needs_grad)
      for (size_t i = 0; i < b->grad.size(); ++i)
        b->grad.d[i] += y->grad.d[i + a->grad.size()];
  };
  return y;
}

Node* Tape::pairwise_concat(Node* x) {
  int n = x->val.rows, d = x->val.cols;
  Node* y = make(n * n, 2 * d, true);
  for (int i = 0; i < n; ++i) {
    const double* xi = x->val.row(i);
    for (int j = 0; j < n; ++j) {
      double* r = y->val.row(i * n + j);
      std::copy(xi, xi + d, r);
      const double* xj = x->val.row(j);
      std::copy(xj, xj + d, r + d);
    }
  }
  y->backward = [x, y, n, d]() {
    if (!x->needs_grad) return;
    for (int i = 0; i < n; ++i) {
      double* gi = x->grad.row(i);
      for (int j = 0; j < n; ++j) {
        const double* r = y->grad.row(i * n + j);
        for (int c = 0; c < d; ++c) gi[c] += r[c];
        double* gj = x->grad.row(j);
        for (int c = 0; c < d; ++c) gj[c] += r[d + c];
      }
    }
  };
  return y;
}

Node* Tape::boundary_mse(Node* pred, const Mat& target,
                         const std::vector<unsigned char>& labeled) {
  assert(pred->val.cols == 4 && target.rows == pred->val.rows && target.cols == 4);
  assert(labeled.size() == static_cast<size_t>(pred->val.rows));
  int n_lab = 0;
  for (auto f : labeled) n_lab += f ? 1 : 0;
  Node* y = make(1, 1, true);
  double denom = n_lab > 0 ? 2.0 * (2.0 * n_lab) : 1.0;
  double acc = 0.0;
  for (int i = 0; i < pred->val.rows; ++i) {
    if (!labeled[i]) continue;
    const double* p = pred->val.row(i);
    const double* t = target.row(i);
    for (int j = 0; j < 4; ++j) {
      double dv = p[j] - t[j];
      acc += dv * dv;
    }
  }
  y->val.at(0, 0) = acc / denom;
  auto tgt = std::make_shared<Mat>(target);
  auto lab = std::make_shared<std::vector<unsigned char>>(labeled);
  y->backward = [pred, y, tgt, lab, denom]() {
    if (!pred->needs_grad) return;
    double g = y->grad.at(0, 0) * 2.0 / denom;
    for (int i = 0; i < pred->val.rows; ++i) {
      if (!(*lab)[i]) continue;
      const double* p = pred->val.row(i);
      const double* t = tgt->row(i);
      double* dp = pred->grad.row(i);
      for (int j = 0; j < 4; ++j) dp[j] += g * (p[j] - t[j]);
    }
  };
  return y;
}

Node* Tape::bce_logits_mean(Node* logits, const Mat& targets) {
  assert(logits->val.rows == targets.rows && logits->val.cols == targets.cols);
  Node* y = make(1, 1, true);
  size_t n = logits->val.size();
  assert(n > 0);
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double z = logits->val.d[i], t = targets.d[i];
    // stable: max(z,0) - z*t + log(1 + exp(-|z|))
    acc += (z > 0.0 ? z : 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
  }
  y->val.at(0, 0) = acc / static_cast<double>(n);
  auto tgt = std::make_shared<Mat>(targets);
  y->backward = [logits, y, tgt, n]() {
    if (!logits->needs_grad) return;
    double g = y->grad.at(0, 0) / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
      double z = logits->val.d[i];
      double sig = 1.0 / (1.0 + std::exp(-z));
      logits->grad.d[i] += g * (sig - tgt->d[i]);
    }
  };
  return y;
}

Node* Tape::add_scaled(Node* a, Node* b, double alpha) {
  assert(a->val.rows == b->val.rows && a->val.cols == b->val.cols);
  Node* y = make(a->val.rows, a->val.cols, true);
  for (size_t i = 0; i < y->val.size(); ++i) y->val.d[i] = a->val.d[i] + alpha * b->val.d[i];
  y->backward = [a, b, y, alpha]() {
    if (a->needs_grad)
      for (size_t i = 0; i < y->grad.size(); ++i) a->grad.d[i] += y->grad.d[i];
    if (b->needs_grad)
      for (size_t i = 0; i < y->grad.size(); ++i) b->grad.d[i] += alpha * y->grad.d[i];
  };
  return y;
}

void Tape::backward(Node* loss) {
  assert(loss->val.rows == 1 && loss->val.cols == 1);
  loss->grad.at(0, 0) = 1.0;
  for (size_t i = nodes_.size(); i-- > 0;) {
    Node* n = nodes_[i].get();
    if (n->backward && n->needs_grad) n->backward();
  }
}

}  // namespace lanegraph::nn
