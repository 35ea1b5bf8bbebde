#include "sem/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <stdexcept>

#include "sem/core.hpp"

namespace sem::kernels {

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                   std::vector<std::tuple<std::size_t, std::size_t, double>> triplets) {
  if (cols > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
    throw Error(ErrorCode::StateSpaceTooLarge, "sparse matrix too wide for 32-bit column indices");
  }
  std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(rows + 1, 0);
  for (std::size_t t = 0; t < triplets.size();) {
    const auto [r, c, v] = triplets[t];
    if (r >= rows || c >= cols) throw Error(ErrorCode::InvalidIndex, "triplet outside matrix bounds");
    double acc = v;
    std::size_t u = t + 1;
    while (u < triplets.size() && std::get<0>(triplets[u]) == r && std::get<1>(triplets[u]) == c) {
      acc += std::get<2>(triplets[u]);
      ++u;
    }
    m.col.push_back(static_cast<std::int32_t>(c));
    m.val.push_back(acc);
    ++m.row_ptr[r + 1];
    t = u;
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

CsrMatrix CsrMatrix::transposed() const {
  std::vector<std::tuple<std::size_t, std::size_t, double>> t;
  t.reserve(nnz());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t e = row_ptr[r]; e < row_ptr[r + 1]; ++e) {
      t.emplace_back(static_cast<std::size_t>(col[e]), r, val[e]);
    }
  }
  return from_triplets(cols, rows, std::move(t));
}

std::string_view to_string(Backend backend) noexcept {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

bool backend_available(Backend backend) noexcept {
  if (backend == Backend::Scalar) return true;
#if defined(SEM_HAVE_AVX2_KERNELS)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

Backend detect() noexcept { return backend_available(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar; }

std::atomic<Backend>& selected() noexcept {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

}  // namespace

Backend active_backend() noexcept { return selected().load(std::memory_order_relaxed); }

void set_backend(Backend backend) noexcept {
  if (backend_available(backend)) selected().store(backend, std::memory_order_relaxed);
}

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  if (x.size() != a.cols || y.size() != a.rows) throw Error(ErrorCode::WrongDimension, "spmv shape mismatch");
#if defined(SEM_HAVE_AVX2_KERNELS)
  if (active_backend() == Backend::Avx2) return avx2::spmv(a, x, y);
#endif
  scalar::spmv(a, x, y);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::WrongDimension, "axpy length mismatch");
#if defined(SEM_HAVE_AVX2_KERNELS)
  if (active_backend() == Backend::Avx2) return avx2::axpy(alpha, x, y);
#endif
  scalar::axpy(alpha, x, y);
}

double sum(std::span<const double> x) {
#if defined(SEM_HAVE_AVX2_KERNELS)
  if (active_backend() == Backend::Avx2) return avx2::sum(x);
#endif
  return scalar::sum(x);
}

}  // namespace sem::kernels
