#include "sgr/kernels.hpp"

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sgr::kernels {
namespace {

// Row kernels shared by both variants so the per-element accumulation order
// cannot drift between them.
inline void gemm_row(const double* a, const double* b, double* c, std::size_t i, std::size_t k,
                     std::size_t n) {
  double* crow = c + i * n;
  for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
  const double* arow = a + i * k;
  for (std::size_t p = 0; p < k; ++p) {
    const double aip = arow[p];
    const double* brow = b + p * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
  }
}

inline void gemm_tn_row(const double* a, const double* b, double* c, std::size_t p, std::size_t m,
                        std::size_t k, std::size_t n) {
  double* crow = c + p * n;
  for (std::size_t r = 0; r < m; ++r) {
    const double arp = a[r * k + p];
    const double* brow = b + r * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] += arp * brow[j];
  }
}

inline void gemm_nt_row(const double* a, const double* b, double* c, std::size_t i, std::size_t k,
                        std::size_t n) {
  const double* arow = a + i * n;
  double* crow = c + i * k;
  for (std::size_t p = 0; p < k; ++p) {
    const double* brow = b + p * n;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += arow[j] * brow[j];
    crow[p] += s;
  }
}

bool go_parallel(std::size_t work) {
#ifdef _OPENMP
  return work >= kParallelThreshold && !omp_in_parallel() && omp_get_max_threads() > 1;
#else
  (void)work;
  return false;
#endif
}

}  // namespace

namespace serial {

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) gemm_row(a.data(), b.data(), c.data(), i, k, n);
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) gemm_tn_row(a.data(), b.data(), c.data(), p, m, k, n);
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) gemm_nt_row(a.data(), b.data(), c.data(), i, k, n);
}

void scatter_add(std::span<const double> x, std::span<const int> index, std::span<double> out,
                 std::size_t width) {
  for (std::size_t i = 0; i < index.size(); ++i) {
    double* dst = out.data() + static_cast<std::size_t>(index[i]) * width;
    const double* src = x.data() + i * width;
    for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
  }
}

}  // namespace serial

namespace parallel {

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    gemm_row(a.data(), b.data(), c.data(), static_cast<std::size_t>(i), k, n);
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < rows; ++p) {
    gemm_tn_row(a.data(), b.data(), c.data(), static_cast<std::size_t>(p), m, k, n);
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    gemm_nt_row(a.data(), b.data(), c.data(), static_cast<std::size_t>(i), k, n);
  }
}

void scatter_add(std::span<const double> x, std::span<const int> index, std::span<double> out,
                 std::size_t width) {
  // Group sources by destination row, keeping source order inside a group.
  const std::size_t rows = width == 0 ? 0 : out.size() / width;
  std::vector<std::size_t> offsets(rows + 1, 0);
  for (const int r : index) ++offsets[static_cast<std::size_t>(r) + 1];
  for (std::size_t r = 0; r < rows; ++r) offsets[r + 1] += offsets[r];
  std::vector<std::size_t> sources(index.size());
  std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
  for (std::size_t i = 0; i < index.size(); ++i) {
    sources[fill[static_cast<std::size_t>(index[i])]++] = i;
  }
  const auto nrows = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < nrows; ++r) {
    const auto row = static_cast<std::size_t>(r);
    double* dst = out.data() + row * width;
    for (std::size_t s = offsets[row]; s < offsets[row + 1]; ++s) {
      const double* src = x.data() + sources[s] * width;
      for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
    }
  }
}

}  // namespace parallel

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n) {
  if (go_parallel(m * k * n)) {
    parallel::gemm(a, b, c, m, k, n);
  } else {
    serial::gemm(a, b, c, m, k, n);
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  if (go_parallel(m * k * n)) {
    parallel::gemm_tn(a, b, c, m, k, n);
  } else {
    serial::gemm_tn(a, b, c, m, k, n);
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  if (go_parallel(m * k * n)) {
    parallel::gemm_nt(a, b, c, m, k, n);
  } else {
    serial::gemm_nt(a, b, c, m, k, n);
  }
}

void scatter_add(std::span<const double> x, std::span<const int> index, std::span<double> out,
                 std::size_t width) {
  if (go_parallel(index.size() * width * 16)) {
    parallel::scatter_add(x, index, out, width);
  } else {
    serial::scatter_add(x, index, out, width);
  }
}

}  // namespace sgr::kernels
