// Times build_index on constant-density point sets of doubling size and
// checks that the fitted log-log slope is far from quadratic. An N log N
// build gives a slope near 1.1 over this range; cache effects at the largest
// size push single ratios higher, so the fit uses every size.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "copp/neighbors.hpp"

int main() {
  constexpr std::size_t L = 10;
  constexpr int kRuns = 5;
  const std::vector<double> scales{1.0, 0.1, 0.1};
  std::vector<double> best;
  std::vector<std::size_t> sizes;
  for (std::size_t n = 20000; n <= 320000; n *= 2) {
    std::mt19937_64 rng(n);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    copp::Matrix pts(n, 3);
    for (std::size_t i = 0; i < n; ++i) {
      pts(i, 0) = double(n) / 100.0 * u(rng);
      pts(i, 1) = u(rng);
      pts(i, 2) = u(rng);
    }
    double t = 1e300;
    for (int r = 0; r < kRuns; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto index = copp::build_index(pts, scales, L);
      t = std::min(t, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      if (index.rows() != n) return 2;
    }
    sizes.push_back(n);
    best.push_back(t);
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double m = double(sizes.size());
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    std::printf("N = %7zu  build_index %.4f s", sizes[k], best[k]);
    if (k > 0) std::printf("  ratio %.2f", best[k] / best[k - 1]);
    std::printf("\n");
    const double x = std::log(double(sizes[k])), y = std::log(best[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const bool ok = slope <= 1.3;
  std::printf("%s: fitted exponent %.2f (<= 1.3; quadratic would be 2)\n", ok ? "PASS" : "FAIL", slope);
  return ok ? 0 : 1;
}
