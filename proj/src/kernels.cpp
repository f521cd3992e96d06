#include "cvselect/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace cvselect::kernels {
namespace {

bool cpu_supports(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(CVSELECT_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(CVSELECT_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa detect() noexcept {
  if (const char* env = std::getenv("CVSELECT_ISA"); env != nullptr && std::string(env) == "scalar") {
    return Isa::scalar;
  }
  if (cpu_supports(Isa::avx2)) return Isa::avx2;
  if (cpu_supports(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

struct Dispatch {
  std::atomic<Isa> isa{detect()};
};

Dispatch& dispatch() {
  static Dispatch d;
  return d;
}

const KernelTable& active() { return table(dispatch().isa.load(std::memory_order_relaxed)); }

void check_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

Isa active_isa() noexcept { return dispatch().isa.load(std::memory_order_relaxed); }

bool isa_available(Isa isa) noexcept { return cpu_supports(isa); }

void set_isa(Isa isa) {
  if (!cpu_supports(isa)) {
    throw std::invalid_argument("ISA not available: " + std::string(isa_name(isa)));
  }
  dispatch().isa.store(isa, std::memory_order_relaxed);
}

const KernelTable& table(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return scalar::kTable;
    case Isa::avx2:
#if defined(CVSELECT_HAVE_AVX2)
      if (cpu_supports(isa)) return avx2::kTable;
#endif
      break;
    case Isa::neon:
#if defined(CVSELECT_HAVE_NEON)
      return neon::kTable;
#endif
      break;
  }
  throw std::invalid_argument("ISA not available: " + std::string(isa_name(isa)));
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_same_size(a.size(), b.size(), "dot");
  return active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_same_size(x.size(), y.size(), "axpy");
  active().axpy(alpha, x.data(), y.data(), x.size());
}

double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
  check_same_size(a.size(), b.size(), "sum_sq_diff");
  return active().sum_sq_diff(a.data(), b.data(), a.size());
}

void squared_errors(std::span<const double> y, std::span<const double> yhat, std::span<double> out) {
  check_same_size(y.size(), yhat.size(), "squared_errors");
  check_same_size(y.size(), out.size(), "squared_errors");
  active().squared_errors(y.data(), yhat.data(), out.data(), y.size());
}

void add_sq_offset(std::span<const double> column, double q, std::span<double> out) {
  check_same_size(column.size(), out.size(), "add_sq_offset");
  active().add_sq_offset(column.data(), q, out.data(), column.size());
}

}  // namespace cvselect::kernels
