#pragma once

#include <cstddef>
#include <span>

// Dense row-major kernels used by the autodiff engine.
//
// Every kernel exists twice: a serial reference in `serial::` and an OpenMP
// version in `parallel::` that splits output rows across threads. Each output
// element is accumulated in the same order by both, so results are
// bit-identical regardless of thread count. The unqualified entry points pick
// the parallel version only for large problems outside an enclosing parallel
// region.
namespace sgr::kernels {

// c[m x n] = a[m x k] * b[k x n]
// c[k x n] += a[m x k]^T * b[m x n]     (gemm_tn)
// c[m x k] += a[m x n] * b[k x n]^T     (gemm_nt)
// out[rows x width] += rows of x gathered by `index` (scatter_add: out[index[i]] += x[i])
namespace serial {
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void scatter_add(std::span<const double> x, std::span<const int> index, std::span<double> out,
                 std::size_t width);
}  // namespace serial

namespace parallel {
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void scatter_add(std::span<const double> x, std::span<const int> index, std::span<double> out,
                 std::size_t width);
}  // namespace parallel

// Multiply-add count above which the dispatching entry points go parallel.
inline constexpr std::size_t kParallelThreshold = 1u << 16;

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void scatter_add(std::span<const double> x, std::span<const int> index, std::span<double> out,
                 std::size_t width);

}  // namespace sgr::kernels
