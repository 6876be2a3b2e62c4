// AVX2 variants. This translation unit alone is compiled with -mavx2 and
// without -mfma; callers reach it only after a runtime CPU check.

#include "swarmctl/simd/field_kernels.hpp"

#include <immintrin.h>

namespace swarmctl::simd::detail {
namespace {

void grow_evaporate_avx2(std::span<double> urgency, std::span<const double> open,
                         double growth, double retain) {
  const __m256d g = _mm256_set1_pd(growth);
  const __m256d r = _mm256_set1_pd(retain);
  const std::size_t n = urgency.size();
  const std::size_t body = n / 4 * 4;
  double* u = urgency.data();
  const double* m = open.data();
  for (std::size_t i = 0; i < body; i += 4) {
    __m256d x = _mm256_loadu_pd(u + i);
    x = _mm256_mul_pd(_mm256_mul_pd(_mm256_add_pd(x, g), r), _mm256_loadu_pd(m + i));
    _mm256_storeu_pd(u + i, x);
  }
  for (std::size_t i = body; i < n; ++i) u[i] = (u[i] + growth) * retain * m[i];
}

void diffuse_row_avx2(const double* up, const double* center, const double* down,
                      const double* keep, const double* open, double rate,
                      double* out, std::size_t width) {
  if (width < 6) {
    diffuse_segment_scalar(up, center, down, keep, open, rate, out, width, 0, width);
    return;
  }
  diffuse_segment_scalar(up, center, down, keep, open, rate, out, width, 0, 1);
  const __m256d k_rate = _mm256_set1_pd(rate);
  std::size_t c = 1;
  // Interior lanes: c-1 >= 0 and c+4 <= width-1.
  for (; c + 4 < width; c += 4) {
    const __m256d ctr = _mm256_loadu_pd(center + c);
    const __m256d nb = _mm256_add_pd(
        _mm256_add_pd(_mm256_add_pd(_mm256_loadu_pd(up + c), _mm256_loadu_pd(down + c)),
                      _mm256_loadu_pd(center + c - 1)),
        _mm256_loadu_pd(center + c + 1));
    const __m256d kept = _mm256_mul_pd(ctr, _mm256_loadu_pd(keep + c));
    const __m256d res =
        _mm256_mul_pd(_mm256_add_pd(kept, _mm256_mul_pd(k_rate, nb)), _mm256_loadu_pd(open + c));
    _mm256_storeu_pd(out + c, res);
  }
  diffuse_segment_scalar(up, center, down, keep, open, rate, out, width, c, width);
}

void scale_avx2(std::span<double> v, double factor) {
  const __m256d f = _mm256_set1_pd(factor);
  const std::size_t body = v.size() / 4 * 4;
  double* p = v.data();
  for (std::size_t i = 0; i < body; i += 4) {
    _mm256_storeu_pd(p + i, _mm256_mul_pd(_mm256_loadu_pd(p + i), f));
  }
  for (std::size_t i = body; i < v.size(); ++i) p[i] *= factor;
}

double sum_avx2(std::span<const double> v) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t body = v.size() / 4 * 4;
  const double* p = v.data();
  for (std::size_t i = 0; i < body; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(p + i));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (std::size_t i = body; i < v.size(); ++i) total += p[i];
  return total;
}

void quantize_avx2(std::span<const double> v, double max, std::span<std::uint16_t> out) {
  if (!(max > 0.0)) {
    for (auto& q : out) q = 0;
    return;
  }
  const __m256d k_max = _mm256_set1_pd(max);
  const __m256d k_full = _mm256_set1_pd(65535.0);
  const __m256d k_half = _mm256_set1_pd(0.5);
  const __m256d k_zero = _mm256_setzero_pd();
  const std::size_t body = v.size() / 4 * 4;
  const double* p = v.data();
  for (std::size_t i = 0; i < body; i += 4) {
    __m256d q = _mm256_add_pd(_mm256_mul_pd(_mm256_div_pd(_mm256_loadu_pd(p + i), k_max), k_full),
                              k_half);
    q = _mm256_min_pd(_mm256_max_pd(q, k_zero), k_full);
    const __m128i as_int = _mm256_cvttpd_epi32(q);
    alignas(16) std::int32_t lanes[4];
    _mm_store_si128(reinterpret_cast<__m128i*>(lanes), as_int);
    for (int k = 0; k < 4; ++k) out[i + k] = static_cast<std::uint16_t>(lanes[k]);
  }
  for (std::size_t i = body; i < v.size(); ++i) out[i] = quantize_one(p[i], max);
}

constexpr FieldKernels kAvx2{
    Isa::Avx2, grow_evaporate_avx2, diffuse_row_avx2, scale_avx2, sum_avx2, quantize_avx2};

}  // namespace

const FieldKernels* avx2_kernels() { return &kAvx2; }

}  // namespace swarmctl::simd::detail
