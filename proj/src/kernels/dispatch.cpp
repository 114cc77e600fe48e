#include <atomic>

#include "myopass/errors.hpp"
#include "myopass/kernels.hpp"

namespace myopass::kernels {

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum_squares)(const double*, std::size_t);
};

constexpr Table kScalarTable{&scalar::dot, &scalar::sum_squares};
#if defined(__x86_64__) || defined(_M_X64)
constexpr Table kAvx2Table{&avx2::dot, &avx2::sum_squares};
#endif
#if defined(__aarch64__)
constexpr Table kNeonTable{&neon::dot, &neon::sum_squares};
#endif

const Table& table_for(Backend backend) {
  switch (backend) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::kAvx2:
      return kAvx2Table;
#endif
#if defined(__aarch64__)
    case Backend::kNeon:
      return kNeonTable;
#endif
    default:
      return kScalarTable;
  }
}

Backend detect() {
  if (backend_supported(Backend::kAvx2)) return Backend::kAvx2;
  if (backend_supported(Backend::kNeon)) return Backend::kNeon;
  return Backend::kScalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

}  // namespace

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    case Backend::kNeon:
      return "neon";
  }
  return "unknown";
}

bool backend_supported(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::kNeon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void force_backend(Backend backend) {
  if (!backend_supported(backend)) {
    throw DomainError("kernel backend '" + std::string(backend_name(backend)) +
                      "' is not available on this machine");
  }
  current().store(backend, std::memory_order_relaxed);
}

void reset_backend() { current().store(detect(), std::memory_order_relaxed); }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw AlignmentError("dot: operands have different lengths");
  }
  return table_for(active_backend()).dot(a.data(), b.data(), a.size());
}

double sum_squares(std::span<const double> a) {
  return table_for(active_backend()).sum_squares(a.data(), a.size());
}

double trapz_dot(std::span<const double> a, std::span<const double> b,
                 double dt) {
  if (a.size() != b.size()) {
    throw AlignmentError("trapz_dot: operands have different lengths");
  }
  if (a.size() < 2) return 0.0;
  const double ends = a.front() * b.front() + a.back() * b.back();
  return dt * (dot(a, b) - 0.5 * ends);
}

double trapz_squares(std::span<const double> a, double dt) {
  if (a.size() < 2) return 0.0;
  const double ends = a.front() * a.front() + a.back() * a.back();
  const double value = dt * (sum_squares(a) - 0.5 * ends);
  return value > 0.0 ? value : 0.0;
}

}  // namespace myopass::kernels
