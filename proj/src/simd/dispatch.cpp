#include <atomic>
#include <cstdlib>
#include <string>

#include "milrisk/errors.hpp"
#include "milrisk/simd/kernels.hpp"

namespace milrisk::simd {
namespace {

bool cpu_has_avx2() {
#if defined(MILRISK_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa startup_isa() {
  if (const char* forced = std::getenv("MILRISK_SIMD")) {
    if (std::string(forced) == "scalar") return Isa::scalar;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{&kernels_for(startup_isa())};
  return table;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  if (isa == Isa::scalar) return true;
  return cpu_has_avx2();
}

const KernelTable& kernels_for(Isa isa) {
  if (isa == Isa::scalar) return detail::kScalarTable;
#if defined(MILRISK_HAVE_AVX2)
  if (cpu_has_avx2()) return detail::kAvx2Table;
#endif
  throw ConfigError("SIMD variant '" + std::string(to_string(isa)) +
                    "' is not available on this CPU");
}

const KernelTable& kernels() { return *active_table().load(std::memory_order_acquire); }

Isa active_isa() { return kernels().isa; }

void set_active_isa(Isa isa) { active_table().store(&kernels_for(isa), std::memory_order_release); }

}  // namespace milrisk::simd
