#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "data.hpp"
#include "dataset.hpp"

namespace popest::features {

enum class Source { raw, structural };
enum class Level { image, collection };
enum class Aggregate { none, mean, max };

struct FeatureDef {
  std::string name;
  Source source = Source::structural;
  /// For raw-sourced columns: the ImageRecord::raw_features key.
  std::string raw_name;
  /// Collection level only: how raw image values are pooled.
  Aggregate aggregate = Aggregate::none;

  bool operator==(const FeatureDef&) const = default;
};

/// Ordered column identity of a feature table.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  FeatureSchema(Level level, std::vector<FeatureDef> defs);

  /// Six structural image columns followed by the raw names, in order.
  static FeatureSchema for_images(const std::vector<std::string>& raw_names);
  /// n_individuals, image_count, animal_fraction, then mean_/max_ per raw name.
  static FeatureSchema for_collections(const std::vector<std::string>& raw_names);

  Level level() const { return level_; }
  const std::vector<FeatureDef>& defs() const { return defs_; }
  std::size_t size() const { return defs_.size(); }
  std::vector<std::string> names() const;
  /// Stable identity string; equal schemas have equal keys.
  std::string key() const;

  std::string to_json() const;
  static FeatureSchema from_json(const std::string& text);

  bool operator==(const FeatureSchema&) const = default;

 private:
  Level level_ = Level::image;
  std::vector<FeatureDef> defs_;
};

/// Sorted union of raw feature names across records.
std::vector<std::string> raw_feature_names(const std::vector<data::ImageRecord>& records);

/// One feature row; std::nullopt marks a missing value.
struct FeatureVector {
  std::string schema_key;
  std::vector<std::optional<double>> values;
};

namespace column {
inline constexpr const char* collection_size = "collection_size";
inline constexpr const char* image_rank = "image_rank";
inline constexpr const char* animals_in_image = "animals_in_image";
inline constexpr const char* animal_duplication = "animal_duplication";
inline constexpr const char* distinct_individuals = "distinct_individuals_in_collection";
inline constexpr const char* time_gap_prev = "time_gap_prev";
inline constexpr const char* n_individuals = "n_individuals";
inline constexpr const char* image_count = "image_count";
inline constexpr const char* animal_fraction = "animal_fraction";
}  // namespace column

FeatureVector featurize_image(const std::string& image_id,
                              const data::Collection& collection,
                              const FeatureSchema& schema);

/// Every image of the collection, in collection order. Same values as
/// calling featurize_image per image.
std::vector<FeatureVector> featurize_images(const data::Collection& collection,
                                            const FeatureSchema& schema);

FeatureVector featurize_collection(const data::Collection& collection,
                                   const FeatureSchema& schema);

/// Column means of the training table, replayed at predict time.
struct Imputer {
  std::vector<double> means;

  Matrix apply(const std::vector<FeatureVector>& vectors,
               const FeatureSchema& schema) const;
};

struct AssembledDataset {
  Dataset dataset;
  Imputer imputer;
};

/// Stacks vectors, imputing missing entries with this table's column means.
AssembledDataset assemble_dataset(const std::vector<FeatureVector>& vectors,
                                  const std::vector<double>& labels,
                                  const FeatureSchema& schema);

}  // namespace popest::features
