#pragma once

// Bitset kernels used by the learner's column scans. Every kernel has a
// scalar reference implementation; wider variants are selected at runtime
// and must agree with it bit for bit.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace uri::kernels {

using Word = std::uint64_t;

struct KernelTable {
  std::string_view name;
  /// out[i] = a[i] & b[i]
  void (*bit_and)(const Word* a, const Word* b, Word* out, std::size_t n);
  /// dst[i] |= src[i]
  void (*bit_or_inplace)(Word* dst, const Word* src, std::size_t n);
  /// true iff a & b has any bit set
  bool (*intersects)(const Word* a, const Word* b, std::size_t n);
  /// popcount(a & b)
  std::size_t (*popcount_and)(const Word* a, const Word* b, std::size_t n);
  /// popcount(a & b & c)
  std::size_t (*popcount_and3)(const Word* a, const Word* b, const Word* c, std::size_t n);
};

const KernelTable& scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_kernels();
#endif
#if defined(__aarch64__)
const KernelTable& neon_kernels();
#endif

/// Variants usable on this CPU, scalar first.
std::vector<const KernelTable*> available_kernels();

/// Best variant for this CPU. The environment variable URI_KERNELS=scalar
/// forces the reference path.
const KernelTable& active_kernels();

// Convenience wrappers over the active table.
inline void bit_and(std::span<const Word> a, std::span<const Word> b, std::span<Word> out) {
  active_kernels().bit_and(a.data(), b.data(), out.data(), out.size());
}
inline void bit_or_inplace(std::span<Word> dst, std::span<const Word> src) {
  active_kernels().bit_or_inplace(dst.data(), src.data(), dst.size());
}
inline bool intersects(std::span<const Word> a, std::span<const Word> b) {
  return active_kernels().intersects(a.data(), b.data(), a.size());
}
inline std::size_t popcount_and(std::span<const Word> a, std::span<const Word> b) {
  return active_kernels().popcount_and(a.data(), b.data(), a.size());
}

}  // namespace uri::kernels
