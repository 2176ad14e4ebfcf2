#include <cmath>
#include <numbers>
#include <random>

#include "copp/error.hpp"
#include "copp/kde.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace copp;
using kde::BandwidthReading;

TEST_SUITE("kde") {
  TEST_CASE("gaussian_density examples") {
    const std::vector<double> zero{0.0}, one{1.0}, s1{1.0};
    CHECK(kde::gaussian_density(zero, zero, 1.0, s1) ==
          doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-15));
    CHECK(kde::gaussian_density(one, zero, 1.0, s1) ==
          doctest::Approx(std::exp(-0.5) / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-15));
    const std::vector<double> x{1.0, 2.0}, c{0.0, 0.0}, s{1.0, 1.0};
    const double direct = oracle::normal_pdf(1.0, 0.0, 2.0) * oracle::normal_pdf(2.0, 0.0, 2.0);
    CHECK(kde::gaussian_density(x, c, 2.0, s) == doctest::Approx(direct).epsilon(1e-14));
  }

  TEST_CASE("gaussian_density rejects bad arguments") {
    const std::vector<double> z{0.0}, s{1.0}, bad{0.0};
    CHECK_THROWS_AS(kde::gaussian_density(z, z, 0.0, s), ArgumentError);
    CHECK_THROWS_AS(kde::gaussian_density(z, z, 1.0, bad), ArgumentError);
  }

  TEST_CASE("bandwidth readings are distinguishable") {
    const std::vector<double> x{0.3}, c{0.0}, s{0.5};
    const double sd_form = kde::gaussian_density(x, c, 2.0, s, BandwidthReading::kStandardDeviation);
    const double var_form = kde::gaussian_density(x, c, 2.0, s, BandwidthReading::kVariance);
    CHECK(sd_form == doctest::Approx(oracle::normal_pdf(0.3, 0.0, 1.0)).epsilon(1e-14));
    CHECK(var_form == doctest::Approx(oracle::normal_pdf(0.3, 0.0, 1.0)).epsilon(1e-14));
    const std::vector<double> s2{0.2};
    CHECK(kde::gaussian_density(x, c, 2.0, s2, BandwidthReading::kStandardDeviation) !=
          doctest::Approx(kde::gaussian_density(x, c, 2.0, s2, BandwidthReading::kVariance)));
  }

  TEST_CASE("gaussian_density integrates to one in two dimensions") {
    const std::vector<double> c{0.2, -0.1}, s{1.0, 0.5};
    const double f = 0.7, h = 0.01;
    double total = 0.0;
    for (double a = -6.0; a < 6.0; a += h)
      for (double b = -3.0; b < 3.0; b += h) {
        const std::vector<double> x{a + h / 2, b + h / 2};
        total += kde::gaussian_density(x, c, f, s) * h * h;
      }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
  }

  TEST_CASE("mixture_density examples and naive-sum oracle") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    kde::GaussianMixture m{Matrix(50, 3), std::vector<double>(50), std::vector<double>(50),
                           {1.0, 0.1, 0.2}};
    for (auto& v : m.centers.data()) v = u(rng);
    for (std::size_t j = 0; j < 50; ++j) {
      m.weights[j] = u(rng);
      m.factors[j] = 0.2 + u(rng);
    }
    m.validate();
    for (int q = 0; q < 20; ++q) {
      const std::vector<double> x{u(rng), u(rng), u(rng)};
      CHECK(kde::mixture_density(m, x) == doctest::Approx(oracle::mixture(m, x)).epsilon(1e-12));
      auto scaled = m;
      for (auto& w : scaled.weights) w *= 3.5;
      CHECK(kde::mixture_density(scaled, x) ==
            doctest::Approx(3.5 * kde::mixture_density(m, x)).epsilon(1e-14));
    }
    auto zero = m;
    std::fill(zero.weights.begin(), zero.weights.end(), 0.0);
    CHECK(kde::mixture_density(zero, std::vector<double>{0.5, 0.5, 0.5}) == 0.0);

    kde::GaussianMixture one{Matrix(1, 2, std::vector<double>{0.1, 0.2}), {1.0}, {0.8}, {1.0, 2.0}};
    const std::vector<double> x{0.4, -0.3};
    CHECK(kde::mixture_density(one, x) ==
          kde::gaussian_density(x, one.centers.row(0), 0.8, one.scales));
  }

  TEST_CASE("mixture validation") {
    kde::GaussianMixture m{Matrix(1, 1, 0.0), {-1.0}, {1.0}, {1.0}};
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m.weights = {1.0};
    m.factors = {0.0};
    CHECK_THROWS_AS(m.validate(), ValidationError);
  }

  TEST_CASE("optimal_k examples") {
    CHECK(kde::optimal_k(1.0, 3, 2, 100) == 2);
    CHECK(kde::optimal_k(1.0, 1, 5, 100) == 5);
    CHECK(kde::optimal_k(10000.0, 3, 2, 10000) == 193);
    CHECK(kde::optimal_k(100.0, 1, 2, 10) == 10);
    CHECK(kde::optimal_k(1000.0, 3, 2, 1000) == 52);
    std::size_t prev = 0;
    for (double n = 0.5; n < 1e6; n *= 1.3) {
      const auto k = kde::optimal_k(n, 3, 2, 500);
      CHECK(k >= prev);
      prev = k;
    }
  }

  TEST_CASE("normal_interval_mass") {
    CHECK(kde::normal_interval_mass(-6.0, 6.0, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(kde::normal_interval_mass(0.0, 1e9, 0.0, 2.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(kde::normal_interval_mass(1.0, 1.0, 0.0, 1.0) == 0.0);
    CHECK(kde::normal_interval_mass(30.0, 31.0, 0.0, 1.0) > 0.0);
  }
}
