#include "uri/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <bit>

// Compiled with per-function target attributes so the rest of the library
// stays baseline x86-64; only called after a runtime CPU check.
#define URI_AVX2 __attribute__((target("avx2,popcnt")))

namespace uri::kernels {
namespace {

URI_AVX2 void and_avx2(const Word* a, const Word* b, Word* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), _mm256_and_si256(va, vb));
  }
  for (; i < n; ++i) out[i] = a[i] & b[i];
}

URI_AVX2 void or_avx2(Word* dst, const Word* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i vd = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(dst + i));
    const __m256i vs = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + i));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(dst + i), _mm256_or_si256(vd, vs));
  }
  for (; i < n; ++i) dst[i] |= src[i];
}

URI_AVX2 bool intersects_avx2(const Word* a, const Word* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256i x0 = _mm256_and_si256(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i)),
                                        _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i)));
    const __m256i x1 =
        _mm256_and_si256(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i + 4)),
                         _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i + 4)));
    const __m256i any = _mm256_or_si256(x0, x1);
    if (!_mm256_testz_si256(any, any)) return true;
  }
  for (; i < n; ++i) {
    if (a[i] & b[i]) return true;
  }
  return false;
}

// Harley-Seal style nibble lookup popcount.
URI_AVX2 inline __m256i popcount_bytes(__m256i v) {
  const __m256i lookup = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4, 0, 1, 1,
                                          2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low_mask = _mm256_set1_epi8(0x0f);
  const __m256i lo = _mm256_and_si256(v, low_mask);
  const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low_mask);
  return _mm256_add_epi8(_mm256_shuffle_epi8(lookup, lo), _mm256_shuffle_epi8(lookup, hi));
}

URI_AVX2 inline std::size_t horizontal_sum(__m256i acc) {
  return static_cast<std::size_t>(_mm256_extract_epi64(acc, 0)) +
         static_cast<std::size_t>(_mm256_extract_epi64(acc, 1)) +
         static_cast<std::size_t>(_mm256_extract_epi64(acc, 2)) +
         static_cast<std::size_t>(_mm256_extract_epi64(acc, 3));
}

URI_AVX2 std::size_t popcount_and_avx2(const Word* a, const Word* b, std::size_t n) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i x = _mm256_and_si256(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i)),
                                       _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i)));
    acc = _mm256_add_epi64(acc, _mm256_sad_epu8(popcount_bytes(x), _mm256_setzero_si256()));
  }
  std::size_t total = horizontal_sum(acc);
  for (; i < n; ++i) total += static_cast<std::size_t>(_mm_popcnt_u64(a[i] & b[i]));
  return total;
}

URI_AVX2 std::size_t popcount_and3_avx2(const Word* a, const Word* b, const Word* c,
                                        std::size_t n) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256i x = _mm256_and_si256(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i)),
                                 _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i)));
    x = _mm256_and_si256(x, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(c + i)));
    acc = _mm256_add_epi64(acc, _mm256_sad_epu8(popcount_bytes(x), _mm256_setzero_si256()));
  }
  std::size_t total = horizontal_sum(acc);
  for (; i < n; ++i) total += static_cast<std::size_t>(_mm_popcnt_u64(a[i] & b[i] & c[i]));
  return total;
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{"avx2",          and_avx2,          or_avx2,
                                 intersects_avx2, popcount_and_avx2, popcount_and3_avx2};
  return table;
}

}  // namespace uri::kernels

#endif
