#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "copp/simulate.hpp"

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("copp-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
  std::filesystem::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

// Gaussian-trigger catalog on the unit square with scales (1, 0.1, 0.1).
inline copp::sim::LabeledCatalog simulated(double rate, double T, double R, std::uint64_t seed,
                                           double decay = 10.0, double sd = 0.05) {
  copp::sim::SimSpec s;
  s.background = copp::sim::HomogeneousBackground{rate};
  s.trigger = copp::sim::GaussianTrigger{R, decay, {sd, sd}};
  s.window = copp::Window{0.0, T, {0.0, 0.0}, {1.0, 1.0}};
  s.scales = {1.0, 0.1, 0.1};
  s.seed = seed;
  return copp::sim::simulate(s);
}
