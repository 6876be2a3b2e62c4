#pragma once
// Data-parallel inner loops of the pheromone field.
//
// Each ISA variant must produce results bit-identical to the scalar
// reference: no fused multiply-add, and every reduction follows the same
// four-lane accumulation order. Mission logs therefore do not depend on
// which variant the host selected.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace swarmctl::simd {

enum class Isa { Scalar, Avx2, Neon };

struct FieldKernels {
  Isa isa;

  /// urgency[i] = (urgency[i] + growth) * retain * open[i]
  void (*grow_evaporate)(std::span<double> urgency, std::span<const double> open,
                         double growth, double retain);

  /// One output row of explicit 4-neighbour diffusion.
  /// out[c] = (center[c]*keep[c] + rate*(((up[c]+down[c])+center[c-1])+center[c+1])) * open[c]
  /// with neighbours outside the row taken as 0. `up`/`down` must point at a
  /// zero row at the grid border.
  void (*diffuse_row)(const double* up, const double* center, const double* down,
                      const double* keep, const double* open, double rate,
                      double* out, std::size_t width);

  /// v[i] *= factor
  void (*scale)(std::span<double> v, double factor);

  /// Sum with four interleaved partial accumulators, combined as
  /// (a0 + a1) + (a2 + a3), followed by the sequential tail.
  double (*sum)(std::span<const double> v);

  /// out[i] = clamp(floor(v[i] / max * 65535 + 0.5), 0, 65535); all zero when max <= 0.
  void (*quantize)(std::span<const double> v, double max, std::span<std::uint16_t> out);
};

const FieldKernels& scalar_kernels();

/// Variant in use. Chosen once from CPU features; the SWARMCTL_ISA
/// environment variable (scalar, avx2, neon) overrides the choice.
const FieldKernels& active_kernels();

/// Throws std::runtime_error when the variant is not compiled in or the CPU lacks it.
const FieldKernels& kernels_for(Isa isa);

std::vector<Isa> available_isas();

std::string_view isa_name(Isa isa);

namespace detail {

inline double diffuse_one(double up, double down, double left, double right,
                          double center, double keep, double open, double rate) {
  return (center * keep + rate * (((up + down) + left) + right)) * open;
}

inline void diffuse_segment_scalar(const double* up, const double* center,
                                   const double* down, const double* keep,
                                   const double* open, double rate, double* out,
                                   std::size_t width, std::size_t begin,
                                   std::size_t end) {
  for (std::size_t c = begin; c < end; ++c) {
    const double left = c > 0 ? center[c - 1] : 0.0;
    const double right = c + 1 < width ? center[c + 1] : 0.0;
    out[c] = diffuse_one(up[c], down[c], left, right, center[c], keep[c], open[c], rate);
  }
}

inline std::uint16_t quantize_one(double v, double max) {
  double q = v / max * 65535.0 + 0.5;
  q = q < 0.0 ? 0.0 : q;
  q = q > 65535.0 ? 65535.0 : q;
  return static_cast<std::uint16_t>(q);
}

#if defined(__x86_64__) || defined(_M_X64)
const FieldKernels* avx2_kernels();
#endif
#if defined(__aarch64__)
const FieldKernels* neon_kernels();
#endif

}  // namespace detail
}  // namespace swarmctl::simd
