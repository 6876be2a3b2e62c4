// NEON variants for aarch64. Two 2-lane registers stand in for one
// 4-lane AVX2 register so reductions keep the reference lane order.

#include "swarmctl/simd/field_kernels.hpp"

#include <arm_neon.h>

namespace swarmctl::simd::detail {
namespace {

void grow_evaporate_neon(std::span<double> urgency, std::span<const double> open,
                         double growth, double retain) {
  const float64x2_t g = vdupq_n_f64(growth);
  const float64x2_t r = vdupq_n_f64(retain);
  const std::size_t n = urgency.size();
  const std::size_t body = n / 2 * 2;
  double* u = urgency.data();
  const double* m = open.data();
  for (std::size_t i = 0; i < body; i += 2) {
    float64x2_t x = vld1q_f64(u + i);
    x = vmulq_f64(vmulq_f64(vaddq_f64(x, g), r), vld1q_f64(m + i));
    vst1q_f64(u + i, x);
  }
  for (std::size_t i = body; i < n; ++i) u[i] = (u[i] + growth) * retain * m[i];
}

void diffuse_row_neon(const double* up, const double* center, const double* down,
                      const double* keep, const double* open, double rate,
                      double* out, std::size_t width) {
  if (width < 4) {
    diffuse_segment_scalar(up, center, down, keep, open, rate, out, width, 0, width);
    return;
  }
  diffuse_segment_scalar(up, center, down, keep, open, rate, out, width, 0, 1);
  const float64x2_t k_rate = vdupq_n_f64(rate);
  std::size_t c = 1;
  for (; c + 2 < width; c += 2) {
    const float64x2_t ctr = vld1q_f64(center + c);
    const float64x2_t nb = vaddq_f64(
        vaddq_f64(vaddq_f64(vld1q_f64(up + c), vld1q_f64(down + c)), vld1q_f64(center + c - 1)),
        vld1q_f64(center + c + 1));
    const float64x2_t kept = vmulq_f64(ctr, vld1q_f64(keep + c));
    // vmulq + vaddq rather than vfmaq: no fused rounding.
    const float64x2_t res = vmulq_f64(vaddq_f64(kept, vmulq_f64(k_rate, nb)), vld1q_f64(open + c));
    vst1q_f64(out + c, res);
  }
  diffuse_segment_scalar(up, center, down, keep, open, rate, out, width, c, width);
}

void scale_neon(std::span<double> v, double factor) {
  const float64x2_t f = vdupq_n_f64(factor);
  const std::size_t body = v.size() / 2 * 2;
  double* p = v.data();
  for (std::size_t i = 0; i < body; i += 2) vst1q_f64(p + i, vmulq_f64(vld1q_f64(p + i), f));
  for (std::size_t i = body; i < v.size(); ++i) p[i] *= factor;
}

double sum_neon(std::span<const double> v) {
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  const std::size_t body = v.size() / 4 * 4;
  const double* p = v.data();
  for (std::size_t i = 0; i < body; i += 4) {
    lo = vaddq_f64(lo, vld1q_f64(p + i));
    hi = vaddq_f64(hi, vld1q_f64(p + i + 2));
  }
  double total = (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) +
                 (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
  for (std::size_t i = body; i < v.size(); ++i) total += p[i];
  return total;
}

void quantize_neon(std::span<const double> v, double max, std::span<std::uint16_t> out) {
  if (!(max > 0.0)) {
    for (auto& q : out) q = 0;
    return;
  }
  const float64x2_t k_max = vdupq_n_f64(max);
  const float64x2_t k_full = vdupq_n_f64(65535.0);
  const float64x2_t k_half = vdupq_n_f64(0.5);
  const float64x2_t k_zero = vdupq_n_f64(0.0);
  const std::size_t body = v.size() / 2 * 2;
  const double* p = v.data();
  for (std::size_t i = 0; i < body; i += 2) {
    float64x2_t q = vaddq_f64(vmulq_f64(vdivq_f64(vld1q_f64(p + i), k_max), k_full), k_half);
    q = vminq_f64(vmaxq_f64(q, k_zero), k_full);
    const uint64x2_t as_int = vcvtq_u64_f64(q);
    out[i] = static_cast<std::uint16_t>(vgetq_lane_u64(as_int, 0));
    out[i + 1] = static_cast<std::uint16_t>(vgetq_lane_u64(as_int, 1));
  }
  for (std::size_t i = body; i < v.size(); ++i) out[i] = quantize_one(p[i], max);
}

constexpr FieldKernels kNeon{
    Isa::Neon, grow_evaporate_neon, diffuse_row_neon, scale_neon, sum_neon, quantize_neon};

}  // namespace

const FieldKernels* neon_kernels() { return &kNeon; }

}  // namespace swarmctl::simd::detail
