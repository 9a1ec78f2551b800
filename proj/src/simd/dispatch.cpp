#include "crystal_ot/simd/kernels.hpp"

#include <cstdlib>
#include <string>

namespace crystal_ot::simd {

namespace detail {
#if !defined(CRYSTAL_OT_HAVE_AVX2)
const KernelTable* avx2_table() { return nullptr; }
#endif
#if !defined(CRYSTAL_OT_HAVE_NEON)
const KernelTable* neon_table() { return nullptr; }
#endif
}  // namespace detail

std::string_view level_name(Level level) {
  switch (level) {
    case Level::Scalar: return "scalar";
    case Level::Avx2: return "avx2";
    case Level::Neon: return "neon";
  }
  return "unknown";
}

bool level_supported(Level level) {
  switch (level) {
    case Level::Scalar: return true;
    case Level::Avx2:
#if defined(CRYSTAL_OT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Level::Neon:
#if defined(CRYSTAL_OT_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* kernels_for(Level level) {
  if (!level_supported(level)) return nullptr;
  switch (level) {
    case Level::Scalar: return &detail::scalar_table();
    case Level::Avx2: return detail::avx2_table();
    case Level::Neon: return detail::neon_table();
  }
  return nullptr;
}

namespace {

const KernelTable& select_table() {
  const char* env = std::getenv("CRYSTAL_OT_SIMD");
  const std::string want = env ? env : "auto";
  if (want == "scalar") return detail::scalar_table();
  if (want == "avx2") {
    if (const auto* t = kernels_for(Level::Avx2)) return *t;
    return detail::scalar_table();
  }
  if (want == "neon") {
    if (const auto* t = kernels_for(Level::Neon)) return *t;
    return detail::scalar_table();
  }
  for (Level level : {Level::Avx2, Level::Neon}) {
    if (const auto* t = kernels_for(level)) return *t;
  }
  return detail::scalar_table();
}

}  // namespace

const KernelTable& kernels() {
  static const KernelTable& table = select_table();
  return table;
}

}  // namespace crystal_ot::simd
