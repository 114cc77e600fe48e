#include "myopass/kernels.hpp"

namespace myopass::kernels::scalar {

// Single running accumulator in index order: this is the reference every
// vector variant is checked against.
double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_squares(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

}  // namespace myopass::kernels::scalar
