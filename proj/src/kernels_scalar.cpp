#include "sem/kernels.hpp"

namespace sem::kernels::scalar {

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    double acc = 0.0;
    for (std::size_t e = a.row_ptr[r]; e < a.row_ptr[r + 1]; ++e) acc += a.val[e] * x[a.col[e]];
    y[r] = acc;
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double sum(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc;
}

}  // namespace sem::kernels::scalar
