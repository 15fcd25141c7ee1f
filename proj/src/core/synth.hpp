#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "data.hpp"

namespace popest::synth {

/// One simulated per-image raw feature.
/// value = mean + photographer effect + animal effect + noise.
struct FeatureSpec {
  std::string name;
  double mean = 0.0;
  double photographer_sd = 0.0;
  double animal_sd = 0.0;
  double noise = 1.0;
};

struct ShareModel {
  double intercept = 0.0;
  /// Keyed by raw feature name; unlisted features have coefficient 0.
  std::map<std::string, double> coefficients;
};

struct SimConfig {
  std::uint64_t seed = 1;
  std::vector<int> occasions;
  /// Either explicit sizes (one per occasion) or the initial/survival/
  /// recruitment process. Recruitment is the Poisson mean of newcomers per
  /// surviving animal.
  std::vector<std::int64_t> true_population;
  std::int64_t initial_population = 0;
  double survival = 1.0;
  double recruitment = 0.0;
  std::int64_t photographers_per_occasion = 10;
  double encounter_rate = 10.0;
  double images_per_animal = 1.0;
  /// Probability that an image also shows one more of the photographer's
  /// animals.
  double companion_rate = 0.0;
  std::vector<FeatureSpec> features;
  ShareModel share_model;

  void validate() const;
  std::string to_json() const;
  static SimConfig from_json(const std::string& text);
};

struct CollectionTruth {
  std::string collection_id;
  int occasion = 0;
  /// Distinct animals on the SD set, and on its shared images.
  std::size_t true_n = 0;
  std::size_t shared_n = 0;
  double share_fraction = 0.0;
};

struct SimWorld {
  SimConfig config;
  /// Alive animals per occasion.
  std::vector<std::int64_t> population;
  /// Every SD-set image, labeled with its shared flag.
  std::vector<data::ImageRecord> records;
  std::vector<CollectionTruth> collections;
  std::vector<std::string> warnings;

  std::string truth_json() const;
  /// year,official,lower_bound with the true sizes.
  std::string census_csv() const;
};

SimWorld generate(const SimConfig& config);

/// Recomputed from the labeled records, keyed by collection id.
std::map<std::string, double> true_share_fractions(const SimWorld& world);

/// records.jsonl (labels stripped), survey_labels.csv, truth.json, census.csv, config.json.
std::map<std::string, std::string> export_files(const SimWorld& world);

}  // namespace popest::synth
