#include "swarmctl/simd/field_kernels.hpp"

namespace swarmctl::simd {
namespace {

void grow_evaporate_scalar(std::span<double> urgency, std::span<const double> open,
                           double growth, double retain) {
  for (std::size_t i = 0; i < urgency.size(); ++i) {
    urgency[i] = (urgency[i] + growth) * retain * open[i];
  }
}

void diffuse_row_scalar(const double* up, const double* center, const double* down,
                        const double* keep, const double* open, double rate,
                        double* out, std::size_t width) {
  detail::diffuse_segment_scalar(up, center, down, keep, open, rate, out, width, 0, width);
}

void scale_scalar(std::span<double> v, double factor) {
  for (double& x : v) x *= factor;
}

double sum_scalar(std::span<const double> v) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t body = v.size() / 4 * 4;
  for (std::size_t i = 0; i < body; i += 4) {
    acc[0] += v[i];
    acc[1] += v[i + 1];
    acc[2] += v[i + 2];
    acc[3] += v[i + 3];
  }
  double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (std::size_t i = body; i < v.size(); ++i) total += v[i];
  return total;
}

void quantize_scalar(std::span<const double> v, double max, std::span<std::uint16_t> out) {
  if (!(max > 0.0)) {
    for (auto& q : out) q = 0;
    return;
  }
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = detail::quantize_one(v[i], max);
}

constexpr FieldKernels kScalar{
    Isa::Scalar, grow_evaporate_scalar, diffuse_row_scalar, scale_scalar, sum_scalar,
    quantize_scalar};

}  // namespace

const FieldKernels& scalar_kernels() { return kScalar; }

}  // namespace swarmctl::simd
