#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lanegraph/geometry.hpp"

namespace lanegraph::metrics {

// Pooled boundary point / lane width errors over labeled pairs. Predictions
// are compared index-aligned against labels; unlabeled indices are skipped.
struct PairStats {
  double sum_bpe = 0.0;  // summed left+right point errors
  double sum_lwe = 0.0;  // summed width errors
  long n_matched = 0;    // labeled pairs seen

  void add(const std::vector<LanePair>& pred, const std::vector<LanePair>& gt);
  double mbpe() const { return n_matched > 0 ? sum_bpe / (2.0 * n_matched) : 0.0; }
  double mlwe() const { return n_matched > 0 ? sum_lwe / n_matched : 0.0; }
};

// Pooled binary confusion over ordered off-diagonal index pairs.
struct ConnStats {
  long tp = 0, fp = 0, fn = 0, tn = 0;

  void add(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& gt, int n);
  long total() const { return tp + fp + fn + tn; }
  bool zero_pos() const { return tp + fn == 0; }
  double accuracy() const;
  double precision() const;
  double recall() const;
  // With no true and no predicted edges the score is 1; predicted edges
  // against an empty truth score 0.
  double f1() const;
};

struct GroupStats {
  PairStats pairs;
  ConnStats conn;
};

struct Row {
  std::string odd;
  std::string method;
  double mbpe = 0.0;
  double mlwe = 0.0;
  double conn_acc = 0.0;
  double conn_f1 = 0.0;
  long n_pairs = 0;
  long n_edges = 0;  // predicted positives
  bool zero_pos = false;
};

Row make_row(const std::string& odd, const std::string& method, const GroupStats& g);

std::string to_csv(const std::vector<Row>& rows);
std::string to_markdown(const std::vector<Row>& rows);

}  // namespace lanegraph::metrics
