#pragma once

// Vector primitives behind the Markov-chain solvers. Every routine has a
// scalar reference implementation and, on x86-64, an AVX2/FMA variant; the
// dispatching entry points pick one at runtime.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <tuple>
#include <vector>

namespace sem::kernels {

/// Compressed sparse rows with 32-bit column indices (the AVX2 path gathers
/// with them).
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::int32_t> col;
  std::vector<double> val;

  /// Builds from (row, col, value) triplets; duplicates are summed.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols,
                                 std::vector<std::tuple<std::size_t, std::size_t, double>> triplets);
  CsrMatrix transposed() const;
  std::size_t nnz() const noexcept { return val.size(); }
};

enum class Backend { Scalar, Avx2 };

std::string_view to_string(Backend backend) noexcept;
bool backend_available(Backend backend) noexcept;
Backend active_backend() noexcept;
/// Forces a backend; ignored if it is unavailable on this CPU.
void set_backend(Backend backend) noexcept;

/// y = A x
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
/// y += alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double sum(std::span<const double> x);

namespace scalar {
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double sum(std::span<const double> x);
}  // namespace scalar

#if defined(SEM_HAVE_AVX2_KERNELS)
namespace avx2 {
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double sum(std::span<const double> x);
}  // namespace avx2
#endif

}  // namespace sem::kernels
