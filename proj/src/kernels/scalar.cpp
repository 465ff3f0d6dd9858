#include "uri/kernels.hpp"

#include <bit>

namespace uri::kernels {
namespace {

void and_scalar(const Word* a, const Word* b, Word* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] & b[i];
}

void or_scalar(Word* dst, const Word* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] |= src[i];
}

bool intersects_scalar(const Word* a, const Word* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] & b[i]) return true;
  }
  return false;
}

std::size_t popcount_and_scalar(const Word* a, const Word* b, std::size_t n) {
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) total += std::popcount(a[i] & b[i]);
  return total;
}

std::size_t popcount_and3_scalar(const Word* a, const Word* b, const Word* c, std::size_t n) {
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) total += std::popcount(a[i] & b[i] & c[i]);
  return total;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar",          and_scalar,          or_scalar,
                                 intersects_scalar, popcount_and_scalar, popcount_and3_scalar};
  return table;
}

}  // namespace uri::kernels
