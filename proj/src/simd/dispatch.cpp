#include "swarmctl/simd/field_kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace swarmctl::simd {
namespace {

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const FieldKernels* compiled(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &scalar_kernels();
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return detail::avx2_kernels();
#else
      return nullptr;
#endif
    case Isa::Neon:
#if defined(__aarch64__)
      return detail::neon_kernels();
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const FieldKernels& select() {
  if (const char* forced = std::getenv("SWARMCTL_ISA")) {
    const std::string name = forced;
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (name == isa_name(isa)) return kernels_for(isa);
    }
    throw std::runtime_error("SWARMCTL_ISA: unknown variant '" + name + "'");
  }
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (cpu_has(isa) && compiled(isa)) return *compiled(isa);
  }
  return scalar_kernels();
}

}  // namespace

const FieldKernels& kernels_for(Isa isa) {
  const FieldKernels* k = compiled(isa);
  if (!k || !cpu_has(isa)) {
    throw std::runtime_error("kernel variant '" + std::string(isa_name(isa)) +
                             "' unavailable on this host");
  }
  return *k;
}

const FieldKernels& active_kernels() {
  static const FieldKernels& chosen = select();
  return chosen;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
    if (compiled(isa) && cpu_has(isa)) out.push_back(isa);
  }
  return out;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace swarmctl::simd
