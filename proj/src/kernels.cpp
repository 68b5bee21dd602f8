#include "lanegraph/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef LANEGRAPH_HAVE_OPENMP
#include <omp.h>
#endif

namespace lanegraph::kernels {

namespace {
int g_max_threads = 0;  // 0 = not set yet
}

void set_max_threads(int n) { g_max_threads = n < 1 ? 1 : n; }

int max_threads() {
  if (g_max_threads > 0) return g_max_threads;
#ifdef LANEGRAPH_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {
bool use_parallel() {
#ifdef LANEGRAPH_HAVE_OPENMP
  return max_threads() > 1;
#else
  return false;
#endif
}

// One output row of C = A * B. i-k-j order so the inner loop streams B rows.
inline void matmul_row(const Mat& a, const Mat& b, Mat& c, int i) {
  double* ci = c.row(i);
  std::fill(ci, ci + c.cols, 0.0);
  const double* ai = a.row(i);
  for (int k = 0; k < a.cols; ++k) {
    double av = ai[k];
    if (av == 0.0) continue;
    const double* bk = b.row(k);
    for (int j = 0; j < c.cols; ++j) ci[j] += av * bk[j];
  }
}

inline void matmul_nt_row(const Mat& a, const Mat& b, Mat& c, int i) {
  const double* ai = a.row(i);
  double* ci = c.row(i);
  for (int j = 0; j < b.rows; ++j) {
    const double* bj = b.row(j);
    double acc = 0.0;
    for (int k = 0; k < a.cols; ++k) acc += ai[k] * bj[k];
    ci[j] = acc;
  }
}

// One output row of C = A^T * B, i.e. column i of A against all of B.
inline void matmul_tn_row(const Mat& a, const Mat& b, Mat& c, int i) {
  double* ci = c.row(i);
  std::fill(ci, ci + c.cols, 0.0);
  for (int k = 0; k < a.rows; ++k) {
    double av = a.at(k, i);
    if (av == 0.0) continue;
    const double* bk = b.row(k);
    for (int j = 0; j < c.cols; ++j) ci[j] += av * bk[j];
  }
}

inline void softmax_row(Mat& m, const std::vector<unsigned char>* mask, int i) {
  double* r = m.row(i);
  const unsigned char* mk = mask ? mask->data() + static_cast<size_t>(i) * m.cols : nullptr;
  double mx = -1e300;
  for (int j = 0; j < m.cols; ++j)
    if (!mk || mk[j]) mx = std::max(mx, r[j]);
  if (mx == -1e300) {  // fully masked row
    std::fill(r, r + m.cols, 0.0);
    return;
  }
  double sum = 0.0;
  for (int j = 0; j < m.cols; ++j) {
    if (mk && !mk[j]) {
      r[j] = 0.0;
    } else {
      r[j] = std::exp(r[j] - mx);
      sum += r[j];
    }
  }
  double inv = 1.0 / sum;
  for (int j = 0; j < m.cols; ++j) r[j] *= inv;
}

inline void layernorm_row(const Mat& in, const double* gamma, const double* beta,
                          double eps, Mat& out, Mat* stats, int i) {
  const double* x = in.row(i);
  double* y = out.row(i);
  int n = in.cols;
  double mean = 0.0;
  for (int j = 0; j < n; ++j) mean += x[j];
  mean /= n;
  double var = 0.0;
  for (int j = 0; j < n; ++j) {
    double dx = x[j] - mean;
    var += dx * dx;
  }
  var /= n;
  double inv_std = 1.0 / std::sqrt(var + eps);
  for (int j = 0; j < n; ++j) y[j] = (x[j] - mean) * inv_std * gamma[j] + beta[j];
  if (stats) {
    stats->at(i, 0) = mean;
    stats->at(i, 1) = inv_std;
  }
}
}  // namespace

void matmul_serial(const Mat& a, const Mat& b, Mat& c) {
  assert(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols);
  for (int i = 0; i < a.rows; ++i) matmul_row(a, b, c, i);
}

void matmul_omp(const Mat& a, const Mat& b, Mat& c) {
  assert(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols);
#ifdef LANEGRAPH_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads())
#endif
  for (int i = 0; i < a.rows; ++i) matmul_row(a, b, c, i);
}

void matmul(const Mat& a, const Mat& b, Mat& c) {
  if (use_parallel() && a.rows >= 8)
    matmul_omp(a, b, c);
  else
    matmul_serial(a, b, c);
}

void matmul_nt_serial(const Mat& a, const Mat& b, Mat& c) {
  assert(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows);
  for (int i = 0; i < a.rows; ++i) matmul_nt_row(a, b, c, i);
}

void matmul_nt_omp(const Mat& a, const Mat& b, Mat& c) {
  assert(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows);
#ifdef LANEGRAPH_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads())
#endif
  for (int i = 0; i < a.rows; ++i) matmul_nt_row(a, b, c, i);
}

void matmul_nt(const Mat& a, const Mat& b, Mat& c) {
  if (use_parallel() && a.rows >= 8)
    matmul_nt_omp(a, b, c);
  else
    matmul_nt_serial(a, b, c);
}

void matmul_tn_serial(const Mat& a, const Mat& b, Mat& c) {
  assert(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols);
  for (int i = 0; i < a.cols; ++i) matmul_tn_row(a, b, c, i);
}

void matmul_tn_omp(const Mat& a, const Mat& b, Mat& c) {
  assert(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols);
#ifdef LANEGRAPH_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads())
#endif
  for (int i = 0; i < a.cols; ++i) matmul_tn_row(a, b, c, i);
}

void matmul_tn(const Mat& a, const Mat& b, Mat& c) {
  if (use_parallel() && a.cols >= 8)
    matmul_tn_omp(a, b, c);
  else
    matmul_tn_serial(a, b, c);
}

void softmax_rows_serial(Mat& m, const std::vector<unsigned char>* mask) {
  assert(!mask || mask->size() == m.size());
  for (int i = 0; i < m.rows; ++i) softmax_row(m, mask, i);
}

void softmax_rows_omp(Mat& m, const std::vector<unsigned char>* mask) {
  assert(!mask || mask->size() == m.size());
#ifdef LANEGRAPH_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads())
#endif
  for (int i = 0; i < m.rows; ++i) softmax_row(m, mask, i);
}

void softmax_rows(Mat& m, const std::vector<unsigned char>* mask) {
  if (use_parallel() && m.rows >= 16)
    softmax_rows_omp(m, mask);
  else
    softmax_rows_serial(m, mask);
}

void relu_serial(const Mat& in, Mat& out) {
  assert(in.rows == out.rows && in.cols == out.cols);
  for (size_t i = 0; i < in.size(); ++i) out.d[i] = in.d[i] > 0.0 ? in.d[i] : 0.0;
}

void relu_omp(const Mat& in, Mat& out) {
  assert(in.rows == out.rows && in.cols == out.cols);
  const int64_t n = static_cast<int64_t>(in.size());
#ifdef LANEGRAPH_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads())
#endif
  for (int64_t i = 0; i < n; ++i) out.d[i] = in.d[i] > 0.0 ? in.d[i] : 0.0;
}

void relu(const Mat& in, Mat& out) {
  if (use_parallel() && in.size() >= 4096)
    relu_omp(in, out);
  else
    relu_serial(in, out);
}

void layernorm_rows_serial(const Mat& in, const double* gamma, const double* beta,
                           double eps, Mat& out, Mat* stats) {
  assert(in.rows == out.rows && in.cols == out.cols);
  for (int i = 0; i < in.rows; ++i) layernorm_row(in, gamma, beta, eps, out, stats, i);
}

void layernorm_rows_omp(const Mat& in, const double* gamma, const double* beta,
                        double eps, Mat& out, Mat* stats) {
  assert(in.rows == out.rows && in.cols == out.cols);
#ifdef LANEGRAPH_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads())
#endif
  for (int i = 0; i < in.rows; ++i) layernorm_row(in, gamma, beta, eps, out, stats, i);
}

void layernorm_rows(const Mat& in, const double* gamma, const double* beta,
                    double eps, Mat& out, Mat* stats) {
  if (use_parallel() && in.rows >= 16)
    layernorm_rows_omp(in, gamma, beta, eps, out, stats);
  else
    layernorm_rows_serial(in, gamma, beta, eps, out, stats);
}

}  // namespace lanegraph::kernels
