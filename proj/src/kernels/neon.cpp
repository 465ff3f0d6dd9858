#include "uri/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <bit>

namespace uri::kernels {
namespace {

void and_neon(const Word* a, const Word* b, Word* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_u64(out + i, vandq_u64(vld1q_u64(a + i), vld1q_u64(b + i)));
  for (; i < n; ++i) out[i] = a[i] & b[i];
}

void or_neon(Word* dst, const Word* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_u64(dst + i, vorrq_u64(vld1q_u64(dst + i), vld1q_u64(src + i)));
  for (; i < n; ++i) dst[i] |= src[i];
}

bool intersects_neon(const Word* a, const Word* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const uint64x2_t x = vandq_u64(vld1q_u64(a + i), vld1q_u64(b + i));
    if (vgetq_lane_u64(x, 0) | vgetq_lane_u64(x, 1)) return true;
  }
  for (; i < n; ++i) {
    if (a[i] & b[i]) return true;
  }
  return false;
}

std::size_t popcount_and_neon(const Word* a, const Word* b, std::size_t n) {
  std::size_t total = 0;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const uint8x16_t x =
        vreinterpretq_u8_u64(vandq_u64(vld1q_u64(a + i), vld1q_u64(b + i)));
    total += vaddvq_u8(vcntq_u8(x));
  }
  for (; i < n; ++i) total += std::popcount(a[i] & b[i]);
  return total;
}

std::size_t popcount_and3_neon(const Word* a, const Word* b, const Word* c, std::size_t n) {
  std::size_t total = 0;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const uint64x2_t ab = vandq_u64(vld1q_u64(a + i), vld1q_u64(b + i));
    total += vaddvq_u8(vcntq_u8(vreinterpretq_u8_u64(vandq_u64(ab, vld1q_u64(c + i)))));
  }
  for (; i < n; ++i) total += std::popcount(a[i] & b[i] & c[i]);
  return total;
}

}  // namespace

const KernelTable& neon_kernels() {
  static const KernelTable table{"neon",          and_neon,          or_neon,
                                 intersects_neon, popcount_and_neon, popcount_and3_neon};
  return table;
}

}  // namespace uri::kernels

#endif
