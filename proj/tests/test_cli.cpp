#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cli.hpp"
#include "copp/csv.hpp"
#include "copp/io.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace copp;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "copp");
  return cli::run(args);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> rows_of(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<std::string>> out;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> r;
    for (auto f : csv::split(line)) r.emplace_back(f);
    out.push_back(r);
  }
  return out;
}

void write_spec(const std::filesystem::path& p, double R, double rate = 5.0) {
  io::write_json(p, io::Json{{"background", {{"type", "homogeneous"}, {"rate", rate}}},
                             {"trigger", {{"type", "gaussian"}, {"R", R}, {"decay_rate", 10.0},
                                          {"spatial_sd", {0.05, 0.05}}}},
                             {"window", {{"t_begin", 0.0}, {"t_end", 40.0}, {"lower", {0.0, 0.0}},
                                         {"upper", {1.0, 1.0}}}},
                             {"scales", {1.0, 0.1, 0.1}},
                             {"seed", 3}});
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("simulate then decluster writes the three outputs") {
    TempDir dir;
    write_spec(dir / "spec.json", 0.5);
    REQUIRE(run({"simulate", "--spec", (dir / "spec.json").string(), "--out-events",
                 (dir / "ev.csv").string(), "--out-parents", (dir / "par.csv").string()}) == 0);
    const int rc = run({"decluster", "--input", (dir / "ev.csv").string(), "--scales", "1,0.1,0.1",
                        "--out-dir", (dir / "fit").string(), "--forest", (dir / "forest.csv").string()});
    CHECK(rc == 0);
    for (const char* f : {"model.json", "branching.csv", "diagnostics.json"})
      CHECK(std::filesystem::exists(dir / "fit" / f));
    CHECK(std::filesystem::exists(dir / "forest.csv"));
    const auto diag = io::read_json(dir / "fit" / "diagnostics.json");
    CHECK(diag["config"]["tv_tolerance"].get<double>() == 1e-2);
    CHECK(diag["config"]["L"].get<int>() == 10);
    CHECK(diag["diagnostics"]["converged"].get<bool>());

    REQUIRE(run({"marginal", "--model", (dir / "fit" / "model.json").string(), "--axis", "1",
                 "--out", (dir / "m.csv").string()}) == 0);
    CHECK(rows_of(dir / "m.csv").size() == 201);
  }

  TEST_CASE("exit codes") {
    TempDir dir;
    write_spec(dir / "spec.json", 0.5);
    REQUIRE(run({"simulate", "--spec", (dir / "spec.json").string(), "--out-events",
                 (dir / "ev.csv").string(), "--out-parents", (dir / "par.csv").string()}) == 0);
    const std::string ev = (dir / "ev.csv").string();
    CHECK(run({"decluster", "--input", ev, "--scales", "1,0,0.1", "--out-dir", (dir / "a").string()}) == 2);
    CHECK(run({"decluster", "--input", ev, "--scales", "1,0.1,0.1", "--out-dir", (dir / "b").string(),
               "--max-iterations", "1", "--tv-tolerance", "1e-300"}) == 3);
    CHECK(std::filesystem::exists(dir / "b" / "model.json"));
    io::write_json(dir / "cfg.json", io::Json{{"em", {{"exact_memory_limit_bytes", 1000}}}});
    CHECK(run({"decluster", "--config", (dir / "cfg.json").string(), "--input", ev, "--scales",
               "1,0.1,0.1", "--out-dir", (dir / "c").string(), "--exact"}) == 4);
    write_spec(dir / "super.json", 1.5);
    CHECK(run({"simulate", "--spec", (dir / "super.json").string(), "--out-events",
               (dir / "x.csv").string(), "--out-parents", (dir / "y.csv").string()}) == 2);
    CHECK(run({"no-such-command"}) == 2);
  }

  TEST_CASE("simulate with R = 0 gives all-background parents and is idempotent") {
    TempDir dir;
    write_spec(dir / "spec.json", 0.0);
    auto sim = [&](const std::string& tag) {
      return run({"simulate", "--spec", (dir / "spec.json").string(), "--out-events",
                  (dir / ("ev" + tag)).string(), "--out-parents", (dir / ("par" + tag)).string()});
    };
    REQUIRE(sim("1") == 0);
    REQUIRE(sim("2") == 0);
    const auto parents = rows_of(dir / "par1");
    CHECK(parents.size() > 100);
    for (const auto& r : parents) CHECK(r[1] == "0");
    CHECK(slurp(dir / "ev1") == slurp(dir / "ev2"));
    CHECK(slurp(dir / "par1") == slurp(dir / "par2"));
  }

  TEST_CASE("predict with a background-only model matches a hand Poisson sum") {
    TempDir dir;
    // Events: times on [0, 10], one covariate.
    dir.write("ev.csv", "time,x\n0.5,0.2\n1.5,0.7\n2.0,0.4\n3.2,0.1\n3.3,0.3\n3.9,0.8\n");
    IntensityModel m;
    m.background_mode = BackgroundMode::kTimeIndependent;
    m.window_length = 4.0;
    m.background_columns = {1};
    m.mu_divisor = 4.0;
    m.mu = kde::GaussianMixture{Matrix(1, 1, std::vector<double>{0.5}), {6.0}, {2.0}, {0.2}};
    m.g = kde::GaussianMixture{Matrix(0, 2), {}, {}, {1.0, 1.0}};
    io::write_json(dir / "model.json", io::model_to_json(m));
    io::write_json(dir / "grid.json", io::Json{{"type", "daily"}, {"first_day", 2.0}, {"days", 2},
                                               {"edges", {{0.0, 0.5, 1.0}}}});
    REQUIRE(run({"predict", "--model", (dir / "model.json").string(), "--grid",
                 (dir / "grid.json").string(), "--input", (dir / "ev.csv").string(), "--scales",
                 "1,0.1", "--out", (dir / "out.json").string()}) == 0);
    const auto res = io::read_json(dir / "out.json");
    // Mass of N(0.5, 0.4^2) on each half of [0, 1], times 6 events / 4 days.
    auto Phi = [](double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); };
    const double half = Phi(0.0) - Phi(-0.5 / 0.4);
    const double rate = 6.0 / 4.0 * half;
    const std::vector<double> rates{rate, rate, rate, rate};
    const std::vector<std::uint64_t> counts{1, 0, 2, 1};  // day 2: 2.0; day 3: 3.2, 3.3, 3.9
    CHECK(res["l_score"].get<double>() ==
          doctest::Approx(oracle::log_poisson_product(rates, counts)).epsilon(1e-12));
    CHECK(res["total_count"].get<int>() == 4);
  }

  TEST_CASE("dump-nn on a four-point line") {
    TempDir dir;
    dir.write("line.csv", "time\n0\n1\n2\n4\n");
    REQUIRE(run({"dump-nn", "--input", (dir / "line.csv").string(), "--scales", "1", "--L", "2",
                 "--out", (dir / "nn.csv").string()}) == 0);
    const auto rows = rows_of(dir / "nn.csv");
    REQUIRE(rows.size() == 8);
    // event, rank, neighbour, distance (1-based).
    const std::vector<std::vector<std::string>> want{
        {"1", "1", "1", "0"}, {"1", "2", "2", "1"}, {"2", "1", "2", "0"}, {"2", "2", "1", "1"},
        {"3", "1", "3", "0"}, {"3", "2", "2", "1"}, {"4", "1", "4", "0"}, {"4", "2", "3", "2"}};
    CHECK(rows == want);
  }

  TEST_CASE("benchmark emits one row per size and method") {
    TempDir dir;
    REQUIRE(run({"benchmark", "--sizes", "300,600", "--runs", "1", "--iterations", "2", "--out",
                 (dir / "b.csv").string()}) == 0);
    const auto rows = rows_of(dir / "b.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[0][0] == "300");
    CHECK(rows[0][1] == "accelerated");
    CHECK(rows[1][1] == "exact");
    for (const auto& r : rows) CHECK(r.back() == "ok");
    REQUIRE(run({"benchmark", "--sizes", "300", "--runs", "1", "--iterations", "1",
                 "--memory-limit-mib", "0.001", "--out", (dir / "r.csv").string()}) == 0);
    CHECK(rows_of(dir / "r.csv")[1].back() == "refused");
  }
}
