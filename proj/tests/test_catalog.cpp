#include <cmath>
#include <random>

#include "copp/catalog.hpp"
#include "copp/error.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace copp;

TEST_SUITE("catalog") {
  TEST_CASE("load_catalog sorts rows by time") {
    TempDir dir;
    const auto path = dir.write("c.csv", "time,x\n5.0,1\n1.0,2\n3.0,3\n");
    const auto cat = load_catalog(path, {"time", {"x"}}, {1.0, 0.1});
    REQUIRE(cat.size() == 3);
    CHECK(cat.time(0) == 1.0);
    CHECK(cat.time(1) == 3.0);
    CHECK(cat.time(2) == 5.0);
    CHECK(cat.point(0)[1] == 2.0);
    CHECK(cat.source_row(0) == 1);
  }

  TEST_CASE("ties keep file order") {
    TempDir dir;
    const auto path = dir.write("c.csv", "time,x\n2,10\n1,20\n2,30\n2,40\n");
    const auto cat = load_catalog(path, {"time", {"x"}}, {1.0, 1.0});
    CHECK(cat.point(1)[1] == 10.0);
    CHECK(cat.point(2)[1] == 30.0);
    CHECK(cat.point(3)[1] == 40.0);
  }

  TEST_CASE("scales are stored verbatim") {
    TempDir dir;
    const auto path = dir.write("c.csv", "t,lon,lat\n0,1,2\n1,1.5,2.5\n");
    const auto cat = load_catalog(path, {"t", {"lon", "lat"}}, {1.0, 0.1, 0.1});
    CHECK(cat.scales()[0] == 1.0);
    CHECK(cat.scales()[1] == 0.1);
    CHECK(cat.scales()[2] == 0.1);
  }

  TEST_CASE("non-positive scale is a validation error") {
    TempDir dir;
    const auto path = dir.write("c.csv", "t,x\n0,1\n");
    CHECK_THROWS_AS(load_catalog(path, {"t", {"x"}}, {1.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(EventCatalog(Matrix(1, 2, 0.0), {1.0, -1.0}), ValidationError);
  }

  TEST_CASE("unparseable field names the row") {
    TempDir dir;
    const auto path = dir.write("c.csv", "t,x\n0,1\n1,abc\n");
    try {
      load_catalog(path, {"t", {"x"}}, {1.0, 1.0});
      FAIL("expected an ingestion error");
    } catch (const IngestionError& e) {
      CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
    const auto missing = dir.write("m.csv", "t,x\n0\n");
    CHECK_THROWS_AS(load_catalog(missing, {"t", {"x"}}, {1.0, 1.0}), IngestionError);
    CHECK_THROWS_AS(load_catalog(dir / "absent.csv", {"t", {}}, {1.0}), IngestionError);
    CHECK_THROWS_AS(load_catalog(path, {"t", {"nope"}}, {1.0, 1.0}), IngestionError);
  }

  TEST_CASE("window defaults to the data hull and must contain every event") {
    Matrix m(3, 2, std::vector<double>{2, 5, 0, -1, 1, 3});
    const EventCatalog cat(m, {1.0, 1.0});
    CHECK(cat.window().t_begin == 0.0);
    CHECK(cat.window().t_end == 2.0);
    CHECK(cat.window().lower[0] == -1.0);
    CHECK(cat.window().upper[0] == 5.0);
    CHECK_THROWS_AS(EventCatalog(m, {1.0, 1.0}, Window{0.0, 1.0, {-1.0}, {5.0}}), ValidationError);
  }

  TEST_CASE("epoch offset shifts times and magnitudes ride along") {
    TempDir dir;
    const auto path = dir.write("c.csv", "t,x,mag\n105,0,3.5\n101,1,4.0\n");
    CatalogSchema schema{"t", {"x"}, "mag", 100.0};
    const auto cat = load_catalog(path, schema, {1.0, 1.0});
    CHECK(cat.time(0) == 1.0);
    CHECK(cat.dimension() == 2);
    REQUIRE(cat.has_magnitudes());
    CHECK(cat.magnitudes()[0] == 4.0);
  }

  TEST_CASE("standardized_distance examples") {
    const Matrix m(3, 2, std::vector<double>{0, 0, 1, 2, 7, 7});
    const EventCatalog cat(m, {1.0, 1.0});
    const std::vector<double> ones{1.0, 1.0}, s12{1.0, 2.0};
    CHECK(standardized_distance(cat, 1, 1, ones) == 0.0);
    CHECK(standardized_distance(cat, 0, 1, ones) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
    CHECK(standardized_distance(cat, 0, 1, s12) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(standardized_distance(cat, 0, 3, ones), ArgumentError);
  }

  TEST_CASE("standardized_distance is a metric on random triples") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> s(0.1, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> a(3), b(3), c(3), sc(3);
      for (int k = 0; k < 3; ++k) {
        a[k] = z(rng);
        b[k] = z(rng);
        c[k] = z(rng);
        sc[k] = s(rng);
      }
      const double ab = standardized_distance(a, b, sc), ba = standardized_distance(b, a, sc);
      const double bc = standardized_distance(b, c, sc), ac = standardized_distance(a, c, sc);
      CHECK(ab == ba);
      CHECK(ab > 0.0);
      CHECK(standardized_distance(a, a, sc) == 0.0);
      CHECK(ac <= ab + bc + 1e-12);
    }
  }

  TEST_CASE("save then load round-trips bit-exactly") {
    TempDir dir;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    Matrix m(200, 3);
    std::vector<double> mags(200);
    for (std::size_t i = 0; i < 200; ++i) {
      m(i, 0) = std::abs(u(rng)) * 1e-7 + double(i);
      m(i, 1) = u(rng) / 3.0;
      m(i, 2) = u(rng) * 1e-200;
      mags[i] = u(rng);
    }
    const EventCatalog cat(m, {1.0, 0.1, 0.1}, {}, false, mags, {"t", "lon", "lat", "mag"});
    save_catalog(cat, dir / "out.csv");
    const auto back = load_catalog(dir / "out.csv", schema_for(cat), {1.0, 0.1, 0.1});
    CHECK(back.events() == cat.events());
    CHECK(std::equal(mags.begin(), mags.end(), back.magnitudes().begin()));
  }
}
