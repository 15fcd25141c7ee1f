#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/rng.hpp"
#include "core/synth.hpp"

namespace testing {

inline popest::Matrix random_matrix(popest::Rng& rng, std::size_t rows, std::size_t cols) {
  std::vector<double> v(rows * cols);
  for (auto& e : v) e = rng.normal();
  return popest::Matrix(rows, cols, std::move(v));
}

inline std::vector<std::string> column_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("x" + std::to_string(i));
  return out;
}

/// Linear signal plus noise; classification thresholds it at 0.
inline popest::Dataset random_dataset(std::uint64_t seed, std::size_t rows, std::size_t cols,
                                      bool binary, double noise = 0.3) {
  popest::Rng rng(seed);
  popest::Dataset d;
  d.x = random_matrix(rng, rows, cols);
  d.columns = column_names(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (c % 2 ? -0.7 : 1.0) * d.x(i, c);
    z += noise * rng.normal();
    d.y.push_back(binary ? (z > 0 ? 1.0 : 0.0) : z);
  }
  return d;
}

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("popest_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& name = "") const {
    return name.empty() ? path_.string() : (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

/// Small world with feature-dependent sharing.
inline popest::synth::SimConfig small_world(std::uint64_t seed) {
  popest::synth::SimConfig c;
  c.seed = seed;
  c.occasions = {2011, 2012, 2013, 2014};
  c.initial_population = 120;
  c.survival = 0.85;
  c.recruitment = 0.15;
  c.photographers_per_occasion = 15;
  c.encounter_rate = 10;
  c.images_per_animal = 2.0;
  c.companion_rate = 0.2;
  c.features = {{"quality", 0.0, 1.0, 0.3, 0.7}, {"focus", 0.0, 0.0, 0.0, 1.0}};
  c.share_model.intercept = 0.0;
  c.share_model.coefficients = {{"quality", 1.5}, {"focus", 0.5}};
  return c;
}

}  // namespace testing
