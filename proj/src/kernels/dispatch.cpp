#include <cstdlib>
#include <string_view>

#include "uri/kernels.hpp"

namespace uri::kernels {
namespace {

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("popcnt");
#else
  return false;
#endif
}

const KernelTable& select_kernels() {
  if (const char* forced = std::getenv("URI_KERNELS");
      forced != nullptr && std::string_view(forced) == "scalar") {
    return scalar_kernels();
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (cpu_has_avx2()) return avx2_kernels();
#endif
#if defined(__aarch64__)
  return neon_kernels();
#endif
  return scalar_kernels();
}

}  // namespace

std::vector<const KernelTable*> available_kernels() {
  std::vector<const KernelTable*> out{&scalar_kernels()};
#if defined(__x86_64__) || defined(_M_X64)
  if (cpu_has_avx2()) out.push_back(&avx2_kernels());
#endif
#if defined(__aarch64__)
  out.push_back(&neon_kernels());
#endif
  return out;
}

const KernelTable& active_kernels() {
  static const KernelTable& table = select_kernels();
  return table;
}

}  // namespace uri::kernels
