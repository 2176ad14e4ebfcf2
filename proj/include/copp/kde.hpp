#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "copp/matrix.hpp"

namespace copp::kde {

/// How a per-centre factor d and a scale vector sigma combine into a
/// diagonal Gaussian. The default treats d * sigma_k as a standard deviation;
/// the alternative treats it as a variance (sd = sqrt(d * sigma_k)).
enum class BandwidthReading { kStandardDeviation, kVariance };

/// Per-coordinate standard deviation of the kernel.
double kernel_sd(double factor, double scale, BandwidthReading reading) noexcept;

/// Product of univariate normal densities, coordinate k having mean center[k]
/// and standard deviation given by kernel_sd(factor, scale[k]).
double gaussian_density(std::span<const double> x, std::span<const double> center, double factor,
                        std::span<const double> scales,
                        BandwidthReading reading = BandwidthReading::kStandardDeviation);

/// Same as gaussian_density without argument checks, for inner loops.
double gaussian_density_unchecked(std::span<const double> x, std::span<const double> center,
                                  double factor, std::span<const double> scales,
                                  BandwidthReading reading) noexcept;

/// Weighted diagonal-Gaussian mixture with per-centre bandwidth factors.
struct GaussianMixture {
  Matrix centers;
  std::vector<double> weights;
  std::vector<double> factors;
  std::vector<double> scales;
  BandwidthReading reading = BandwidthReading::kStandardDeviation;

  std::size_t size() const noexcept { return centers.rows(); }
  std::size_t dimension() const noexcept { return centers.cols(); }
  double total_weight() const noexcept;

  /// Throws ValidationError when weights/factors/scales break the invariants.
  void validate() const;
};

double mixture_density(const GaussianMixture& model, std::span<const double> x);

/// Normal probability mass of [lo, hi] for N(mean, sd^2).
double normal_interval_mass(double lo, double hi, double mean, double sd) noexcept;

/// clamp(round(n^(4/(4+p))), floor, cap): the MSE-optimal neighbour rank.
std::size_t optimal_k(double effective_sample_size, std::size_t p, std::size_t floor,
                      std::size_t cap);

}  // namespace copp::kde
