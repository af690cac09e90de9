#pragma once

#include <cstddef>
#include <string>

namespace cval::kernels {

// Hot inner loops of the toolkit: row dot products, squared Euclidean
// distances and column accumulations. A scalar reference implementation
// always exists; on x86-64 an AVX2 variant is selected at runtime when
// the CPU supports it. The two variants are equivalence-tested against
// each other.
struct Ops {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*sum_squares)(const double* x, std::size_t n);
  // y += x, length n
  void (*accumulate)(double* y, const double* x, std::size_t n);
  const char* name;
};

const Ops& scalar_ops();
bool avx2_supported();
// AVX2 table; only valid to call through when avx2_supported().
const Ops& avx2_ops();

// Active table. Honors the CVAL_KERNELS environment variable
// ("scalar" or "avx2") on first use, otherwise picks the best supported.
const Ops& ops();

// Override for tests; pass nullptr to restore runtime selection.
void set_ops(const Ops* table);

std::string active_backend();

}  // namespace cval::kernels
