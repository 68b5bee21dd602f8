#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "lanegraph/kernels.hpp"
#include "lanegraph/rng.hpp"

namespace {

using lanegraph::Rng;
using lanegraph::kernels::Mat;

Mat random_mat(int r, int c, Rng& rng) {
  Mat m(r, c);
  for (auto& v : m.d) v = rng.uniform(-1.0, 1.0);
  return m;
}

double time_ms(const std::function<void()>& fn, int reps) {
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

struct Case {
  std::string name;
  int n;
  double serial_ms;
  double parallel_ms;
  bool exact;
};

}  // namespace

int main() {
  namespace k = lanegraph::kernels;
  std::vector<Case> cases;
  Rng rng(42);

  for (int n : {64, 128, 256, 384}) {
    int reps = n <= 128 ? 20 : 4;
    Mat a = random_mat(n, n, rng);
    Mat b = random_mat(n, n, rng);
    Mat cs(n, n), cp(n, n);
    double ts = time_ms([&] { k::matmul_serial(a, b, cs); }, reps);
    double tp = time_ms([&] { k::matmul_omp(a, b, cp); }, reps);
    cases.push_back({"matmul", n, ts, tp, cs.d == cp.d});

    Mat ss = a, sp = a;
    ts = time_ms([&] { ss = a; k::softmax_rows_serial(ss, nullptr); }, reps);
    tp = time_ms([&] { sp = a; k::softmax_rows_omp(sp, nullptr); }, reps);
    cases.push_back({"softmax", n, ts, tp, ss.d == sp.d});

    std::vector<double> gamma(n, 1.0), beta(n, 0.0);
    Mat ls(n, n), lp(n, n);
    ts = time_ms([&] { k::layernorm_rows_serial(a, gamma.data(), beta.data(), 1e-5, ls, nullptr); }, reps);
    tp = time_ms([&] { k::layernorm_rows_omp(a, gamma.data(), beta.data(), 1e-5, lp, nullptr); }, reps);
    cases.push_back({"layernorm", n, ts, tp, ls.d == lp.d});
  }

  std::printf("threads: %d\n", k::max_threads());
  std::printf("%-10s %6s %12s %12s %9s %8s\n", "kernel", "n", "serial_ms", "parallel_ms",
              "speedup", "exact");
  for (const auto& c : cases) {
    double sp = c.parallel_ms > 0.0 ? c.serial_ms / c.parallel_ms : 0.0;
    std::printf("%-10s %6d %12.3f %12.3f %9.2f %8s\n", c.name.c_str(), c.n, c.serial_ms,
                c.parallel_ms, sp, c.exact ? "yes" : "NO");
  }
  bool all = true;
  for (const auto& c : cases) all = all && c.exact;
  return all ? 0 : 1;
}
