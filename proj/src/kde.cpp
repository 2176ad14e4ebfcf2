#include "copp/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "copp/error.hpp"

namespace copp::kde {

namespace {
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
}

double kernel_sd(double factor, double scale, BandwidthReading reading) noexcept {
  return reading == BandwidthReading::kStandardDeviation ? factor * scale
                                                          : std::sqrt(factor * scale);
}

double gaussian_density_unchecked(std::span<const double> x, std::span<const double> center,
                                  double factor, std::span<const double> scales,
                                  BandwidthReading reading) noexcept {
  double exponent = 0.0;
  double norm = 1.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double sd = kernel_sd(factor, scales[k], reading);
    const double z = (x[k] - center[k]) / sd;
    exponent += z * z;
    norm *= kInvSqrt2Pi / sd;
  }
  return norm * std::exp(-0.5 * exponent);
}

double gaussian_density(std::span<const double> x, std::span<const double> center, double factor,
                        std::span<const double> scales, BandwidthReading reading) {
  if (!(factor > 0.0)) throw ArgumentError("bandwidth factor must be positive");
  if (x.size() != center.size() || x.size() != scales.size())
    throw ArgumentError("dimension mismatch in gaussian_density");
  for (double s : scales)
    if (!(s > 0.0)) throw ArgumentError("kernel scales must be positive");
  return gaussian_density_unchecked(x, center, factor, scales, reading);
}

double GaussianMixture::total_weight() const noexcept {
  double total = 0.0;
  for (double w : weights) total += w;
  return total;
}

void GaussianMixture::validate() const {
  if (weights.size() != centers.rows() || factors.size() != centers.rows())
    throw ValidationError("mixture weights/factors do not match the number of centres");
  if (scales.size() != centers.cols())
    throw ValidationError("mixture scale vector does not match centre dimension");
  for (double w : weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("mixture weights must be >= 0");
  for (double f : factors)
    if (!(f > 0.0) || !std::isfinite(f)) throw ValidationError("bandwidth factors must be > 0");
  for (double s : scales)
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("mixture scales must be > 0");
}

double mixture_density(const GaussianMixture& model, std::span<const double> x) {
  if (x.size() != model.dimension()) throw ArgumentError("query dimension mismatch");
  double total = 0.0;
  for (std::size_t j = 0; j < model.size(); ++j) {
    if (model.weights[j] == 0.0) continue;
    total += model.weights[j] * gaussian_density_unchecked(x, model.centers.row(j),
                                                           model.factors[j], model.scales,
                                                           model.reading);
  }
  return total;
}

double normal_interval_mass(double lo, double hi, double mean, double sd) noexcept {
  if (!(hi > lo)) return 0.0;
  const double a = (lo - mean) / (sd * std::numbers::sqrt2);
  const double b = (hi - mean) / (sd * std::numbers::sqrt2);
  // erfc on the tail side avoids cancellation far from the mean.
  if (a >= 0.0) return 0.5 * (std::erfc(a) - std::erfc(b));
  if (b <= 0.0) return 0.5 * (std::erfc(-b) - std::erfc(-a));
  return 0.5 * (std::erf(b) - std::erf(a));
}

std::size_t optimal_k(double effective_sample_size, std::size_t p, std::size_t floor,
                      std::size_t cap) {
  if (!(effective_sample_size > 0.0)) throw ArgumentError("effective sample size must be > 0");
  if (floor < 2 || floor > cap) throw ArgumentError("need 2 <= floor <= cap");
  const double k = std::round(std::pow(effective_sample_size, 4.0 / (4.0 + double(p))));
  if (k <= double(floor)) return floor;
  if (k >= double(cap)) return cap;
  return static_cast<std::size_t>(k);
}

}  // namespace copp::kde
