#include "lanegraph/metrics.hpp"

#include <cstdio>
#include <stdexcept>

namespace lanegraph::metrics {

void PairStats::add(const std::vector<LanePair>& pred, const std::vector<LanePair>& gt) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("metrics: prediction/label pair count mismatch");
  for (size_t i = 0; i < gt.size(); ++i) {
    if (!gt[i].matched) continue;
    sum_bpe += dist(pred[i].left, gt[i].left) + dist(pred[i].right, gt[i].right);
    sum_lwe += std::abs(lane_width(pred[i]) - lane_width(gt[i]));
    ++n_matched;
  }
}

void ConnStats::add(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& gt,
                    int n) {
  size_t need = static_cast<size_t>(n) * n;
  if (pred.size() != need || gt.size() != need)
    throw std::invalid_argument("metrics: adjacency size mismatch");
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      bool p = pred[static_cast<size_t>(i) * n + j] != 0;
      bool g = gt[static_cast<size_t>(i) * n + j] != 0;
      if (p && g)
        ++tp;
      else if (p && !g)
        ++fp;
      else if (!p && g)
        ++fn;
      else
        ++tn;
    }
  }
}

double ConnStats::accuracy() const {
  long t = total();
  return t > 0 ? static_cast<double>(tp + tn) / t : 0.0;
}

double ConnStats::precision() const {
  return tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : (tp + fn == 0 ? 1.0 : 0.0);
}

double ConnStats::recall() const {
  return tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : (tp + fp == 0 ? 1.0 : 0.0);
}

double ConnStats::f1() const {
  if (tp + fn == 0 && tp + fp == 0) return 1.0;
  double p = precision(), r = recall();
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

Row make_row(const std::string& odd, const std::string& method, const GroupStats& g) {
  Row r;
  r.odd = odd;
  r.method = method;
  r.mbpe = g.pairs.mbpe();
  r.mlwe = g.pairs.mlwe();
  r.conn_acc = g.conn.accuracy();
  r.conn_f1 = g.conn.f1();
  r.n_pairs = g.pairs.n_matched;
  r.n_edges = g.conn.tp + g.conn.fp;
  r.zero_pos = g.conn.zero_pos();
  return r;
}

std::string to_csv(const std::vector<Row>& rows) {
  std::string out = "odd,method,mbpe_m,mlwe_m,conn_acc,conn_f1,n_pairs,n_edges,zero_pos\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f,%.6f,%.6f,%ld,%ld,%d\n",
                  r.odd.c_str(), r.method.c_str(), r.mbpe, r.mlwe, r.conn_acc, r.conn_f1,
                  r.n_pairs, r.n_edges, r.zero_pos ? 1 : 0);
    out += buf;
  }
  return out;
}

std::string to_markdown(const std::vector<Row>& rows) {
  std::string out =
      "| odd | method | mBPE (m) | mLWE (m) | conn acc | conn F1 | pairs | edges |\n"
      "|---|---|---|---|---|---|---|---|\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "| %s | %s | %.3f | %.3f | %.3f | %.3f | %ld | %ld |\n",
                  r.odd.c_str(), r.method.c_str(), r.mbpe, r.mlwe, r.conn_acc, r.conn_f1,
                  r.n_pairs, r.n_edges);
    out += buf;
  }
  return out;
}

}  // namespace lanegraph::metrics
