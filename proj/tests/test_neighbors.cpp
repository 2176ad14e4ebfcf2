#include <chrono>
#include <random>

#include "copp/error.hpp"
#include "copp/neighbors.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace copp;

namespace {

Matrix random_points(std::size_t m, std::size_t p, std::uint64_t seed, bool grid = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix x(m, p);
  for (auto& v : x.data()) v = grid ? std::floor(u(rng) * 4.0) : u(rng);
  return x;
}

}  // namespace

TEST_SUITE("neighbors") {
  TEST_CASE("singleton index") {
    const auto idx = build_index(Matrix(1, 2, 0.5), std::vector<double>{1.0, 1.0}, 1);
    CHECK(idx.alpha(0, 0) == 0);
    CHECK(idx.dist(0, 0) == 0.0);
  }

  TEST_CASE("collinear points") {
    const Matrix x(4, 1, std::vector<double>{0, 1, 2, 4});
    const auto idx = build_index(x, std::vector<double>{1.0}, 2);
    CHECK(idx.alpha(2, 0) == 2);
    CHECK(idx.alpha(2, 1) == 1);
    CHECK(idx.dist(2, 1) == 1.0);
    CHECK(idx.alpha(3, 1) == 2);
  }

  TEST_CASE("L larger than the point count is an argument error") {
    CHECK_THROWS_AS(build_index(Matrix(3, 1, 0.0), std::vector<double>{1.0}, 4), ArgumentError);
  }

  TEST_CASE("matches exhaustive scan on 200 uniform points in the unit cube") {
    const Matrix x = random_points(200, 3, 11);
    const std::vector<double> s{1.0, 1.0, 1.0};
    CHECK(build_index(x, s, 10) == oracle::knn_scan(x, s, 10));
  }

  TEST_CASE("matches exhaustive scan with heavy ties and up to 500 points") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const std::size_t m = 50 + 90 * seed;
      const bool grid = seed % 2 == 0;
      const Matrix x = random_points(m, 1 + seed % 3, seed, grid);
      const std::vector<double> s(x.cols(), 0.5 + 0.25 * double(seed));
      const std::size_t L = std::min<std::size_t>(m, 3 + 7 * seed);
      CHECK(build_index(x, s, L) == oracle::knn_scan(x, s, L));
    }
  }

  TEST_CASE("thread count does not change the index") {
    const Matrix x = random_points(400, 2, 5);
    const std::vector<double> s{1.0, 2.0};
    CHECK(build_index(x, s, 12, 1) == build_index(x, s, 12, 4));
  }

  TEST_CASE("kth_neighbor_distance") {
    const Matrix line(3, 1, std::vector<double>{0, 1, 2});
    const auto idx = build_index(line, std::vector<double>{1.0}, 3);
    CHECK(kth_neighbor_distance(idx, 1, 2) == 1.0);
    CHECK_THROWS_AS(kth_neighbor_distance(idx, 1, 1), ArgumentError);
    CHECK_THROWS_AS(kth_neighbor_distance(idx, 1, 4), ArgumentError);

    const Matrix dup(3, 2, std::vector<double>{1, 1, 1, 1, 5, 5});
    const auto di = build_index(dup, std::vector<double>{1.0, 1.0}, 2);
    CHECK(kth_neighbor_distance(di, 0, 2) == 0.0);
    CHECK(kth_neighbor_distance(di, 1, 2) == 0.0);

    const Matrix x = random_points(100, 2, 9);
    const std::vector<double> s{1.0, 1.0};
    const auto r = build_index(x, s, 8);
    for (std::size_t i = 0; i < 100; ++i) {
      std::vector<double> d;
      for (std::size_t j = 0; j < 100; ++j)
        if (j != i) d.push_back(std::sqrt(oracle::sq_dist(x.row(i), x.row(j), s)));
      std::sort(d.begin(), d.end());
      for (std::size_t k = 2; k <= 8; ++k) CHECK(kth_neighbor_distance(r, i, k) == d[k - 2]);
    }
  }

  TEST_CASE("standardization invariance") {
    Matrix x = random_points(300, 3, 21);
    std::vector<double> s{1.0, 0.5, 2.0};
    const auto before = build_index(x, s, 10);
    for (std::size_t i = 0; i < x.rows(); ++i) x(i, 1) *= 4.0;
    s[1] *= 4.0;
    const auto after = build_index(x, s, 10);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t l = 0; l < 10; ++l) {
        CHECK(before.alpha(i, l) == after.alpha(i, l));
        CHECK(before.dist(i, l) == doctest::Approx(after.dist(i, l)).epsilon(1e-14));
      }
  }

  TEST_CASE("index invariants on random data") {
    for (std::uint64_t seed = 100; seed < 200; ++seed) {
      const Matrix x = random_points(60, 2, seed, seed % 3 == 0);
      const auto idx = build_index(x, std::vector<double>{1.0, 1.0}, 7);
      for (std::size_t i = 0; i < 60; ++i) {
        REQUIRE(idx.alpha(i, 0) == i);
        REQUIRE(idx.dist(i, 0) == 0.0);
        std::vector<Index> row(idx.alpha_row(i).begin(), idx.alpha_row(i).end());
        std::sort(row.begin(), row.end());
        REQUIRE(std::adjacent_find(row.begin(), row.end()) == row.end());
        for (std::size_t l = 1; l < 7; ++l) REQUIRE(idx.dist(i, l) >= idx.dist(i, l - 1));
      }
    }
  }
}
