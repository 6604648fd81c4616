#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "grbm/kernels.hpp"

namespace grbm::kernels {

#if defined(GRBM_HAVE_AVX2_KERNELS)
const KernelTable* avx2_table_impl();
#endif

namespace {

bool cpu_has_avx2_fma() {
#if defined(GRBM_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const bool avx2_ok = cpu_has_avx2_fma();
  if (const char* env = std::getenv("GRBM_SIMD")) {
    const std::string choice(env);
    if (choice == "scalar") return &scalar_table();
    if (choice == "avx2" && avx2_ok) return avx2_table();
  }
  return avx2_ok ? avx2_table() : &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable* avx2_table() {
#if defined(GRBM_HAVE_AVX2_KERNELS)
  return avx2_table_impl();
#else
  return nullptr;
#endif
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return avx2_table() != nullptr && cpu_has_avx2_fma();
  }
  return false;
}

Isa active_isa() { return current().load(std::memory_order_acquire)->isa; }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("kernel variant not supported on this CPU: " +
                                std::string(isa_name(isa)));
  }
  current().store(isa == Isa::scalar ? &scalar_table() : avx2_table(), std::memory_order_release);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

}  // namespace grbm::kernels
