#pragma once

// Data-parallel inner loops shared by the model fitters, the loss
// evaluation and blocked splitting. Each kernel has a scalar reference
// version and, where the target supports it, an AVX2 (x86-64) or NEON
// (aarch64) variant picked once at runtime.
//
// The variants may differ in the last bits because they sum in a different
// order; the active ISA is fixed for the lifetime of the process, so results
// within a process are reproducible. Set CVSELECT_ISA=scalar to force the
// reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace cvselect::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;

/// ISA used by the dispatching entry points below.
Isa active_isa() noexcept;

/// True if the variant was compiled in and the CPU supports it.
bool isa_available(Isa isa) noexcept;

/// Overrides the dispatch choice. Intended for tests and benchmarks; throws
/// std::invalid_argument for an unavailable ISA.
void set_isa(Isa isa);

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
  void (*squared_errors)(const double* y, const double* yhat, double* out, std::size_t n);
  void (*add_sq_offset)(const double* column, double q, double* out, std::size_t n);
};

/// Direct access to one variant's table, for equivalence testing.
const KernelTable& table(Isa isa);

double dot(std::span<const double> a, std::span<const double> b);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// sum_i (a_i - b_i)^2
double sum_sq_diff(std::span<const double> a, std::span<const double> b);

/// out_i = (y_i - yhat_i)^2
void squared_errors(std::span<const double> y, std::span<const double> yhat, std::span<double> out);

/// out_i += (column_i - q)^2; one coordinate's contribution to squared
/// euclidean distances from a query point to every row.
void add_sq_offset(std::span<const double> column, double q, std::span<double> out);

namespace scalar {
extern const KernelTable kTable;
}
#if defined(CVSELECT_HAVE_AVX2)
namespace avx2 {
extern const KernelTable kTable;
}
#endif
#if defined(CVSELECT_HAVE_NEON)
namespace neon {
extern const KernelTable kTable;
}
#endif

}  // namespace cvselect::kernels
