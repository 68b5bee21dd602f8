#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace lanegraph::kernels {

// Dense row-major matrix of doubles. The whole numeric stack runs on this
// type; gradients and parameters share it.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> d;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), d(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int i, int j) { return d[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const { return d[static_cast<size_t>(i) * cols + j]; }
  double* row(int i) { return d.data() + static_cast<size_t>(i) * cols; }
  const double* row(int i) const { return d.data() + static_cast<size_t>(i) * cols; }
  size_t size() const { return d.size(); }
  void zero() { std::fill(d.begin(), d.end(), 0.0); }
};

// Thread budget for the parallel variants. The dispatching entry points fall
// back to the serial reference when the budget is 1 or OpenMP is unavailable.
void set_max_threads(int n);
int max_threads();

// C = A * B
void matmul_serial(const Mat& a, const Mat& b, Mat& c);
void matmul_omp(const Mat& a, const Mat& b, Mat& c);
void matmul(const Mat& a, const Mat& b, Mat& c);

// C = A * B^T
void matmul_nt_serial(const Mat& a, const Mat& b, Mat& c);
void matmul_nt_omp(const Mat& a, const Mat& b, Mat& c);
void matmul_nt(const Mat& a, const Mat& b, Mat& c);

// C = A^T * B
void matmul_tn_serial(const Mat& a, const Mat& b, Mat& c);
void matmul_tn_omp(const Mat& a, const Mat& b, Mat& c);
void matmul_tn(const Mat& a, const Mat& b, Mat& c);

// Row-wise softmax in place. Entries where mask is false are forced to zero
// weight; a fully masked row becomes all zeros.
void softmax_rows_serial(Mat& m, const std::vector<unsigned char>* mask);
void softmax_rows_omp(Mat& m, const std::vector<unsigned char>* mask);
void softmax_rows(Mat& m, const std::vector<unsigned char>* mask = nullptr);

// out = max(in, 0)
void relu_serial(const Mat& in, Mat& out);
void relu_omp(const Mat& in, Mat& out);
void relu(const Mat& in, Mat& out);

// Row-wise LayerNorm: per row, subtract mean, divide by sqrt(var + eps),
// then scale by gamma and shift by beta (both length cols).
void layernorm_rows_serial(const Mat& in, const double* gamma, const double* beta,
                           double eps, Mat& out, Mat* saved_stats);
void layernorm_rows_omp(const Mat& in, const double* gamma, const double* beta,
                        double eps, Mat& out, Mat* saved_stats);
void layernorm_rows(const Mat& in, const double* gamma, const double* beta,
                    double eps, Mat& out, Mat* saved_stats = nullptr);

}  // namespace lanegraph::kernels
